use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Datelike, NaiveDate};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::{
    derive_seed, inject_fault, stream, ConfigError, Effect, FaultDecision, Mode, RunMetrics, ScenarioConfig, Scheduler,
    SimEvent,
};
use crate::aadhaar::AadhaarNumber;
use crate::agents::{
    AsaState, AttemptKind, AttemptPlan, PortalState, ServiceProviderState, TranscriptEvent, UserAgent,
};
use crate::cidr::CidrState;
use crate::codec::canonical_parse;
use crate::crypto::{CryptoScheme, KeyDirectory, KeyPair, ReferenceScheme};
use crate::domain::{BiometricData, DemographicData, NodeId, Nonce, Otp, ZoneId, FINGERPRINT_COUNT, IRIS_COUNT};
use crate::message::Message;
use crate::zonal::ZonalState;

const FIRST_NAMES: &[&str] = &[
    "Aarav", "Ananya", "Bhavesh", "Chitra", "Deepak", "Esha", "Farhan", "Gauri", "Harish", "Isha", "Jatin", "Kavya",
    "Lokesh", "Meera", "Nikhil", "Pooja", "Rahul", "Sanjana", "Tarun", "Uma", "Varun", "Yamini",
];
const LAST_NAMES: &[&str] = &[
    "Agarwal", "Banerjee", "Chauhan", "Deshmukh", "Gupta", "Iyer", "Joshi", "Kulkarni", "Menon", "Nair", "Patel",
    "Reddy", "Sharma", "Trivedi", "Verma",
];
const STREETS: &[&str] = &[
    "MG Road",
    "Station Road",
    "Temple Street",
    "Lake View",
    "Park Avenue",
    "Market Lane",
];
const CITIES: &[&str] = &[
    "Gandhinagar",
    "Pune",
    "Mysuru",
    "Kochi",
    "Jaipur",
    "Lucknow",
    "Bhopal",
    "Guwahati",
    "Nagpur",
    "Madurai",
];
const TEMPLATE_LEN: usize = 32;
/// Bodies at or above this are never issued (issued bodies stay below 2^36).
const UNISSUED_BODY_FLOOR: u64 = 70_000_000_000;

/// Synthetic resident data; every field is drawn from `rng`.
pub fn synthetic_resident(rng: &mut ChaCha8Rng, index: u32) -> (DemographicData, BiometricData) {
    let first = FIRST_NAMES[rng.gen_range(0..FIRST_NAMES.len())];
    let last = LAST_NAMES[rng.gen_range(0..LAST_NAMES.len())];
    let address = format!(
        "{}, {}, Ward {}, {}",
        rng.gen_range(1..=999),
        STREETS[rng.gen_range(0..STREETS.len())],
        rng.gen_range(1..=60),
        CITIES[rng.gen_range(0..CITIES.len())]
    );
    let date_of_birth =
        NaiveDate::from_ymd_opt(rng.gen_range(1940..=2005), rng.gen_range(1..=12), rng.gen_range(1..=28))
            .expect("day 1..=28 exists in every month");
    let phone = format!("+91-{}{:09}", rng.gen_range(6..=9), rng.gen_range(0..1_000_000_000u32));
    let email = format!("{}.{}{}@mail.example", first.to_lowercase(), last.to_lowercase(), index);
    let mut template = || {
        let mut t = vec![0u8; TEMPLATE_LEN];
        rng.fill_bytes(&mut t);
        t
    };
    let fingerprint_templates = (0..FINGERPRINT_COUNT).map(|_| template()).collect();
    let iris_templates = (0..IRIS_COUNT).map(|_| template()).collect();
    let mut photo_digest = [0u8; 32];
    rng.fill_bytes(&mut photo_digest);
    (
        DemographicData {
            name: format!("{first} {last}"),
            address,
            date_of_birth,
            phone,
            email,
        },
        BiometricData {
            fingerprint_templates,
            iris_templates,
            photo_digest,
        },
    )
}

/// An enrolled user as seen by the workload driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resident {
    pub index: u32,
    pub aadhaar: AadhaarNumber,
    pub home_zone: ZoneId,
}

/// One workload entry. `at_ms` is the offset from the run start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptSpec {
    pub at_ms: u64,
    pub user: u32,
    pub service_provider: u16,
    pub target_zone: u16,
    pub kind: AttemptKind,
    pub use_otp: bool,
}

impl AttemptSpec {
    pub fn genuine(at_ms: u64, user: u32, service_provider: u16, target_zone: u16) -> Self {
        Self {
            at_ms,
            user,
            service_provider,
            target_zone,
            kind: AttemptKind::Genuine,
            use_otp: false,
        }
    }
}

/// Everything a run produces. Dump keys are file names under `dumps/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: String,
    pub workload_log: String,
    pub dumps: BTreeMap<String, Vec<u8>>,
}

impl RunOutput {
    /// Output files keyed by path relative to the output directory, including
    /// the privacy audit reports.
    pub fn files(&self) -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        files.insert("metrics.txt".to_owned(), self.metrics.to_string().into_bytes());
        files.insert("trace.log".to_owned(), self.trace.clone().into_bytes());
        files.insert("workload.log".to_owned(), self.workload_log.clone().into_bytes());
        for (name, bytes) in &self.dumps {
            files.insert(format!("dumps/{name}"), bytes.clone());
        }
        let report = crate::audit::audit_dumps(&self.dumps).expect("run dumps are complete");
        files.insert("audit/violations.txt".to_owned(), report.violations_text().into_bytes());
        files.insert("audit/linkage.txt".to_owned(), report.linkage_text().into_bytes());
        files
    }

    /// Writes all files under `dir`. Contents are computed before anything
    /// touches the disk.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        let files = self.files();
        for sub in ["dumps", "audit"] {
            std::fs::create_dir_all(dir.join(sub))?;
        }
        for (name, bytes) in files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// A fully wired scenario, enrolled and ready to run a workload.
pub struct Simulation {
    config: ScenarioConfig,
    seed: u64,
    start: u64,
    sched: Scheduler,
    cidr: CidrState,
    zones: BTreeMap<u16, ZonalState>,
    portals: BTreeMap<u16, PortalState>,
    asa: AsaState,
    sps: BTreeMap<u16, ServiceProviderState>,
    users: BTreeMap<u32, UserAgent>,
    residents: Vec<Resident>,
    link_rngs: BTreeMap<(NodeId, NodeId), ChaCha8Rng>,
    trace: String,
    drops: String,
    metrics: RunMetrics,
    sp_inbox: BTreeMap<u16, Vec<u8>>,
}

fn keypair(scheme: &dyn CryptoScheme, seed: u64, node: NodeId) -> KeyPair {
    scheme.generate_keypair(&derive_seed(seed, &format!("key/{node}")), &node.to_string())
}

impl Simulation {
    /// Validates `config`, creates every party and enrolls the population.
    /// Dual writes are queued but nothing executes until [`Simulation::run`].
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let scheme: Arc<dyn CryptoScheme> = Arc::new(ReferenceScheme);
        let start = config.start_time_ms;
        let today = DateTime::from_timestamp_millis(start as i64)
            .ok_or_else(|| ConfigError::Invalid(format!("start_time_ms {start} out of range")))?
            .date_naive();
        if today.year() < 2006 {
            return Err(ConfigError::Invalid(
                "start_time_ms precedes every synthetic birth date".into(),
            ));
        }

        let mut nodes = vec![NodeId::Cidr, NodeId::Asa];
        if config.mode == Mode::Zonal {
            for z in 0..config.zone_count {
                nodes.push(NodeId::Zone(z));
                nodes.push(NodeId::Portal(z));
            }
        }
        nodes.extend((0..config.sp_count).map(NodeId::Sp));
        let pairs: BTreeMap<NodeId, KeyPair> = nodes.iter().map(|&n| (n, keypair(&*scheme, seed, n))).collect();
        let mut keys = KeyDirectory::default();
        for kp in pairs.values() {
            keys.insert(kp.public());
        }

        let mut cidr = CidrState::new(
            pairs[&NodeId::Cidr].clone(),
            keys.clone(),
            scheme.clone(),
            stream(seed, "cidr/issue").next_u64(),
            stream(seed, "cidr/nonce"),
        );
        let mut population = stream(seed, "population");
        let mut residents = Vec::new();
        let mut users = BTreeMap::new();
        let mut dual_writes = Vec::new();
        for index in 0..config.user_count {
            let (demo, bio) = synthetic_resident(&mut population, index);
            let enrollment = cidr
                .enroll(demo, bio, config.zone_count, today)
                .map_err(|e| ConfigError::Invalid(format!("enrollment of user {index} failed: {e}")))?;
            residents.push(Resident {
                index,
                aadhaar: enrollment.aadhaar.clone(),
                home_zone: enrollment.record.home_zone,
            });
            users.insert(index, UserAgent::new(index, config.mode, enrollment.record));
            dual_writes.push(enrollment.dual_write);
        }

        let mut zones = BTreeMap::new();
        let mut portals = BTreeMap::new();
        if config.mode == Mode::Zonal {
            let registered: BTreeSet<NodeId> = (0..config.sp_count).map(NodeId::Sp).collect();
            for z in 0..config.zone_count {
                zones.insert(
                    z,
                    ZonalState::new(
                        ZoneId(z),
                        pairs[&NodeId::Zone(z)].clone(),
                        keys.clone(),
                        scheme.clone(),
                        config.cache_ttl_ms(),
                        config.fetch_timeout_ms(),
                    ),
                );
                portals.insert(
                    z,
                    PortalState::new(
                        ZoneId(z),
                        pairs[&NodeId::Portal(z)].clone(),
                        pairs[&NodeId::Zone(z)].public(),
                        scheme.clone(),
                        registered.clone(),
                        stream(seed, &format!("portal-{z}/session")),
                    ),
                );
            }
        }
        let asa = AsaState::new(pairs[&NodeId::Asa].clone(), keys.clone(), scheme.clone());
        let sps = (0..config.sp_count)
            .map(|s| {
                let id = NodeId::Sp(s);
                (
                    s,
                    ServiceProviderState::new(
                        id,
                        config.mode,
                        pairs[&id].clone(),
                        keys.clone(),
                        scheme.clone(),
                        stream(seed, &format!("{id}/session")),
                    ),
                )
            })
            .collect();

        let mut sim = Self {
            config: config.clone(),
            seed,
            start,
            sched: Scheduler::new(start),
            cidr,
            zones,
            portals,
            asa,
            sps,
            users,
            residents,
            link_rngs: BTreeMap::new(),
            trace: String::new(),
            drops: String::new(),
            metrics: RunMetrics::default(),
            sp_inbox: BTreeMap::new(),
        };
        if config.mode == Mode::Zonal {
            for write in dual_writes {
                let zone = NodeId::Zone(write.record.home_zone.0);
                let aadhaar = write.record.aadhaar.clone();
                sim.apply(
                    NodeId::Cidr,
                    vec![
                        Effect::send(zone, Message::DualWrite(write)),
                        Effect::timer(crate::cidr::DUAL_WRITE_RETRY_MS, Message::DualWriteRetry { aadhaar }),
                    ],
                );
            }
        }
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn residents(&self) -> &[Resident] {
        &self.residents
    }

    /// Draws the configured random workload. Each attempt consumes the same
    /// number of draws whatever its outcome.
    pub fn random_workload(&self) -> Vec<AttemptSpec> {
        let c = &self.config;
        let mut rng = stream(self.seed, "workload");
        (0..c.auth_count)
            .map(|i| {
                let user = rng.gen_range(0..c.user_count);
                let service_provider = rng.gen_range(0..c.sp_count);
                let in_zone = rng.gen::<f64>() < c.in_zone_probability;
                let other = rng.gen_range(0..c.zone_count.max(2) - 1);
                let kind_draw: f64 = rng.gen();
                let use_otp = rng.gen::<f64>() < c.otp_probability;
                let unknown_body = rng.gen_range(UNISSUED_BODY_FLOOR..100_000_000_000);

                let home = self.residents[user as usize].home_zone.0;
                let target_zone = if in_zone || c.zone_count == 1 {
                    home
                } else if other >= home {
                    other + 1
                } else {
                    other
                };
                let thresholds = [
                    c.unknown_number_probability,
                    c.impostor_probability,
                    c.no_liveness_probability,
                    c.wrong_otp_probability,
                ];
                let mut edge = 0.0;
                let bucket = thresholds.iter().position(|p| {
                    edge += p;
                    kind_draw < edge
                });
                let kind = match bucket {
                    Some(0) => {
                        AttemptKind::UnknownNumber(AadhaarNumber::from_body(unknown_body).expect("body below 10^11"))
                    }
                    Some(1) => AttemptKind::Impostor,
                    Some(2) => AttemptKind::NoLiveness,
                    Some(3) => AttemptKind::WrongOtp,
                    _ => AttemptKind::Genuine,
                };
                AttemptSpec {
                    at_ms: (u64::from(i) + 1) * c.auth_interval_ms,
                    user,
                    service_provider,
                    target_zone,
                    kind,
                    use_otp,
                }
            })
            .collect()
    }

    fn link_rng(&mut self, from: NodeId, to: NodeId) -> &mut ChaCha8Rng {
        let seed = self.seed;
        self.link_rngs
            .entry((from, to))
            .or_insert_with(|| stream(seed, &format!("link/{from}/{to}")))
    }

    fn apply(&mut self, me: NodeId, effects: Vec<Effect>) {
        let now = self.sched.now();
        for effect in effects {
            match effect {
                Effect::Timer { after_ms, msg } => {
                    let seq = self.sched.next_seq();
                    self.sched.push(SimEvent {
                        deliver_at: now + after_ms,
                        seq,
                        source: me,
                        destination: me,
                        payload: msg.to_bytes(),
                    });
                }
                Effect::Send { to, msg } => {
                    let seq = self.sched.next_seq();
                    let mut event = SimEvent {
                        deliver_at: now,
                        seq,
                        source: me,
                        destination: to,
                        payload: msg.to_bytes(),
                    };
                    if me == NodeId::Driver {
                        self.sched.push(event);
                        continue;
                    }
                    self.metrics.messages_total += 1;
                    let faults = self.config.faults.clone();
                    let start = self.start;
                    match inject_fault(&faults, &event, start, self.link_rng(me, to)) {
                        FaultDecision::Deliver => self.sched.push(event),
                        FaultDecision::Delay(t) => {
                            event.deliver_at = t;
                            self.sched.push(event);
                        }
                        FaultDecision::Drop => {
                            self.metrics.messages_dropped += 1;
                            let txn = msg.transaction_id().map_or("-".to_owned(), |t| t.to_string());
                            let _ = writeln!(self.drops, "{now} {seq} {me} {to} {} {txn}", msg.kind_name());
                        }
                    }
                }
            }
        }
    }

    fn dispatch(&mut self, now: u64, from: NodeId, to: NodeId, msg: Message) -> Vec<Effect> {
        match to {
            NodeId::Cidr => self.cidr.on_message(now, from, msg),
            NodeId::Asa => self.asa.on_message(now, from, msg),
            NodeId::Zone(z) => self
                .zones
                .get_mut(&z)
                .map_or_else(Vec::new, |n| n.on_message(now, from, msg)),
            NodeId::Portal(z) => self
                .portals
                .get_mut(&z)
                .map_or_else(Vec::new, |n| n.on_message(now, from, msg)),
            NodeId::Sp(s) => self
                .sps
                .get_mut(&s)
                .map_or_else(Vec::new, |n| n.on_message(now, from, msg)),
            NodeId::User(u) => self
                .users
                .get_mut(&u)
                .map_or_else(Vec::new, |n| n.on_message(now, from, msg)),
            NodeId::Driver => Vec::new(),
        }
    }

    fn plan(&self, attempt: u64, spec: &AttemptSpec, rng: &mut ChaCha8Rng) -> Result<AttemptPlan, ConfigError> {
        let c = &self.config;
        if spec.user >= c.user_count || spec.service_provider >= c.sp_count || spec.target_zone >= c.zone_count {
            return Err(ConfigError::Invalid(format!(
                "attempt {attempt} references an unknown party"
            )));
        }
        let mut nonce = [0u8; 16];
        rng.fill_bytes(&mut nonce);
        let mut handle = [0u8; 16];
        rng.fill_bytes(&mut handle);
        let otp = Otp::from_number(rng.gen_range(0..1_000_000));
        let first = rng.gen_range(0..FINGERPRINT_COUNT as u8);
        let second = (first + rng.gen_range(1..FINGERPRINT_COUNT as u8)) % FINGERPRINT_COUNT as u8;
        let issued = spec.use_otp || spec.kind == AttemptKind::WrongOtp;
        Ok(AttemptPlan {
            attempt,
            at_ms: spec.at_ms,
            user: spec.user,
            service_provider: spec.service_provider,
            target_zone: ZoneId(spec.target_zone),
            kind: spec.kind.clone(),
            nonce: Nonce(nonce),
            handle,
            issued_otp: issued.then_some(otp),
            fingers: [first, second],
        })
    }

    /// Runs `workload` to quiescence and collects outputs.
    pub fn run(mut self, workload: &[AttemptSpec]) -> Result<RunOutput, ConfigError> {
        let mut detail = stream(self.seed, "workload/detail");
        let mut workload_log = String::new();
        for (i, spec) in workload.iter().enumerate() {
            let plan = self.plan(i as u64, spec, &mut detail)?;
            let home = self.residents[spec.user as usize].home_zone;
            if home.0 != spec.target_zone {
                self.metrics.out_of_zone_attempts += 1;
            }
            let number = match &spec.kind {
                AttemptKind::UnknownNumber(n) => n.clone(),
                _ => self.residents[spec.user as usize].aadhaar.clone(),
            };
            let _ = writeln!(
                workload_log,
                "{i} {} user-{} {number} sp-{} {} {} {} {}",
                self.start + spec.at_ms,
                spec.user,
                spec.service_provider,
                spec.target_zone,
                home,
                spec.kind.label(),
                if plan.issued_otp.is_some() { "otp" } else { "-" }
            );
            if let Some(otp) = plan.issued_otp.clone() {
                match self.config.mode {
                    Mode::Zonal => {
                        if let Some(z) = self.zones.get_mut(&spec.target_zone) {
                            z.issue_otp(plan.nonce, otp);
                        }
                    }
                    Mode::Baseline => self.cidr.issue_otp(plan.nonce, otp),
                }
            }
            let user = NodeId::User(spec.user);
            self.users
                .get_mut(&spec.user)
                .expect("user index checked")
                .schedule(plan);
            let seq = self.sched.next_seq();
            self.sched.push(SimEvent {
                deliver_at: self.start + spec.at_ms,
                seq,
                source: NodeId::Driver,
                destination: user,
                payload: Message::Begin { attempt: i as u64 }.to_bytes(),
            });
        }
        self.metrics.auth_attempts = workload.len() as u64;

        while let Some(ev) = self.sched.pop() {
            let msg = match canonical_parse::<Message>(&ev.payload) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("undecodable event {} from {}: {e}", ev.seq, ev.source);
                    continue;
                }
            };
            let txn = msg.transaction_id().map_or("-".to_owned(), |t| t.to_string());
            let _ = writeln!(
                self.trace,
                "{} {} {} {} {} {txn}",
                ev.deliver_at,
                ev.seq,
                ev.source,
                ev.destination,
                msg.kind_name()
            );
            if ev.source == ev.destination {
                self.metrics.timers_fired += 1;
            } else if ev.source != NodeId::Driver {
                self.metrics.messages_delivered += 1;
            }
            if let NodeId::Sp(s) = ev.destination {
                self.sp_inbox.entry(s).or_default().extend_from_slice(&ev.payload);
            }
            let effects = self.dispatch(ev.deliver_at, ev.source, ev.destination, msg);
            self.apply(ev.destination, effects);
        }
        Ok(self.finish(workload_log))
    }

    fn finish(mut self, workload_log: String) -> RunOutput {
        let m = &mut self.metrics;
        let c = self.cidr.counters();
        m.cidr_auth_requests = c.auth_requests;
        m.cidr_fetch_requests = c.fetch_requests;
        m.cidr_fetch_rejections = c.fetch_rejections;
        for z in self.zones.values() {
            let zc = z.counters();
            m.zonal_packages += zc.packages;
            m.zonal_local_hits += zc.local_hits;
            m.zonal_cache_hits += zc.cache_hits;
            m.zonal_timeouts += zc.timeouts;
        }
        let mut verdicts = 0;
        for sp in self.sps.values() {
            for e in sp.transcript() {
                match e {
                    TranscriptEvent::Verdict { status, .. } => {
                        verdicts += 1;
                        *m.responses_by_status.entry(*status).or_default() += 1;
                    }
                    TranscriptEvent::DeliveryFailure { .. } => m.delivery_failures += 1,
                    TranscriptEvent::SessionOpened { .. } => {}
                }
            }
        }
        m.unanswered_attempts = m.auth_attempts.saturating_sub(verdicts);
        m.asa_forwards = self.asa.forward_log().len() as u64;
        m.dual_writes_pending = self.cidr.pending_dual_writes().count() as u64;
        m.end_time_ms = self.sched.now();

        let mut dumps: BTreeMap<String, Vec<u8>> = BTreeMap::new();
        let put = |dumps: &mut BTreeMap<String, Vec<u8>>, name: String, text: String| {
            dumps.insert(name, text.into_bytes());
        };
        put(&mut dumps, "cidr.dump".into(), self.cidr.dump());
        put(&mut dumps, "cidr.fetch.log".into(), self.cidr.fetch_log_dump());
        put(&mut dumps, "cidr.audit.log".into(), self.cidr.audit_log_dump());
        put(&mut dumps, "asa.log".into(), self.asa.forward_log_dump());
        put(&mut dumps, "drops.log".into(), std::mem::take(&mut self.drops));
        for (z, zone) in &self.zones {
            put(&mut dumps, format!("zone-{z}.store"), zone.store_dump());
            put(&mut dumps, format!("zone-{z}.cache"), zone.cache_dump());
            put(&mut dumps, format!("zone-{z}.log"), zone.log_dump());
        }
        for (s, sp) in &self.sps {
            let mut transcript = sp.transcript_dump();
            if self.config.plant_leak && *s == 0 {
                let _ = writeln!(transcript, "leak\t{}", self.residents[0].aadhaar);
            }
            put(&mut dumps, format!("sp-{s}.transcript"), transcript);
            dumps.insert(format!("sp-{s}.inbox"), self.sp_inbox.remove(s).unwrap_or_default());
        }
        RunOutput {
            metrics: self.metrics,
            trace: self.trace,
            workload_log,
            dumps,
        }
    }
}

/// Enrolls, draws the random workload and runs it. `seed` takes precedence
/// over the seed stored in `config`.
pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<RunOutput, ConfigError> {
    let sim = Simulation::new(config, seed)?;
    let workload = sim.random_workload();
    sim.run(&workload)
}
