//! Protocol library and deterministic simulator for zonal identity
//! authentication: residents are authenticated by the office of the zone
//! they live in, with a central registry as fallback, and service providers
//! only ever receive a signed yes/no verdict.

pub mod aadhaar;
pub mod agents;
pub mod audit;
pub mod cidr;
pub mod codec;
pub mod crypto;
pub mod domain;
pub mod fixture;
pub mod message;
pub mod sim;
pub mod zonal;
