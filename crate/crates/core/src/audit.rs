//! Post-run privacy audit over what service providers could see.
//!
//! The adversary is the union of every byte delivered to or stored by any
//! service provider, plus equality joins across their transcripts. A run
//! passes when no enrolled identity number, demographic string or biometric
//! template occurs anywhere on that surface and no identifier value appears
//! in two providers' transcripts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use aho_corasick::AhoCorasick;
use thiserror::Error;

use crate::codec::canonical_parse;
use crate::domain::EnrollmentRecord;

/// Dump holding every enrolled record, the source of the secrets.
pub const REGISTRY_DUMP: &str = "cidr.dump";

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("missing dump file {0}")]
    Missing(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt registry dump at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SecretClass {
    Aadhaar,
    Demographic,
    Biometric,
}

impl fmt::Display for SecretClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SecretClass::Aadhaar => "aadhaar",
            SecretClass::Demographic => "demographic",
            SecretClass::Biometric => "biometric",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Secret {
    pub class: SecretClass,
    pub bytes: Vec<u8>,
}

/// Every byte string of `records` that must never reach a provider.
pub fn secrets_of(records: &[EnrollmentRecord]) -> Vec<Secret> {
    let mut out = Vec::new();
    let mut push = |class, bytes: &[u8]| {
        out.push(Secret {
            class,
            bytes: bytes.to_vec(),
        })
    };
    for r in records {
        push(SecretClass::Aadhaar, r.aadhaar.as_str().as_bytes());
        let d = &r.demographics;
        for s in [&d.name, &d.address, &d.phone, &d.email] {
            push(SecretClass::Demographic, s.as_bytes());
        }
        push(
            SecretClass::Demographic,
            d.date_of_birth.format("%Y-%m-%d").to_string().as_bytes(),
        );
        let b = &r.biometrics;
        for t in b.fingerprint_templates.iter().chain(&b.iris_templates) {
            push(SecretClass::Biometric, t);
        }
        push(SecretClass::Biometric, &b.photo_digest);
    }
    out
}

/// One secret occurrence on the provider-visible surface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub file: String,
    pub offset: usize,
    pub class: SecretClass,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.file, self.offset, self.class)
    }
}

/// Reports every occurrence of every secret, as an exact byte substring, in
/// the given files. Overlapping occurrences are all reported.
pub fn scan_sp_surface<'a, I>(surface: I, secrets: &[Secret]) -> Vec<Violation>
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    let mut unique: BTreeMap<&[u8], SecretClass> = BTreeMap::new();
    for s in secrets.iter().filter(|s| !s.bytes.is_empty()) {
        unique.entry(&s.bytes).or_insert(s.class);
    }
    if unique.is_empty() {
        return Vec::new();
    }
    let (patterns, classes): (Vec<&[u8]>, Vec<SecretClass>) = unique.into_iter().unzip();
    let matcher = AhoCorasick::new(&patterns).expect("secret set fits the automaton");
    let mut found = BTreeSet::new();
    for (file, bytes) in surface {
        for m in matcher.find_overlapping_iter(bytes) {
            found.insert(Violation {
                file: file.to_owned(),
                offset: m.start(),
                class: classes[m.pattern().as_usize()],
            });
        }
    }
    found.into_iter().collect()
}

/// Transcript columns that identify something. Timestamps and statuses are
/// not join keys.
const IDENTIFIER_COLUMNS: [(usize, &str); 3] = [(0, "transaction_id"), (1, "session_id"), (4, "customer_number")];
const TIMESTAMP_COLUMN: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkageEntry {
    pub field: String,
    pub value_count: usize,
    pub sp_a: String,
    pub sp_b: String,
}

impl fmt::Display for LinkageEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.field, self.value_count, self.sp_a, self.sp_b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkageReport {
    pub entries: Vec<LinkageEntry>,
    pub max_join_cardinality: usize,
    /// Cross-provider row pairs with equal timestamps. Informational only.
    pub timestamp_coincidences: u64,
}

impl LinkageReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn columns(line: &str) -> Vec<&str> {
    line.split('\t').collect()
}

/// Joins every pair of transcripts on their identifier columns.
pub fn collusion_linkage<'a, I>(transcripts: I) -> LinkageReport
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    struct Parsed<'a> {
        name: &'a str,
        ids: BTreeMap<&'static str, BTreeSet<&'a str>>,
        stamps: BTreeMap<&'a str, u64>,
    }
    let parsed: Vec<Parsed<'a>> = transcripts
        .into_iter()
        .map(|(name, text)| {
            let mut ids: BTreeMap<&'static str, BTreeSet<&'a str>> = BTreeMap::new();
            let mut stamps = BTreeMap::new();
            for cols in text.lines().map(columns) {
                for (idx, field) in IDENTIFIER_COLUMNS {
                    if let Some(v) = cols.get(idx).filter(|v| !v.is_empty() && **v != "-") {
                        ids.entry(field).or_default().insert(*v);
                    }
                }
                if let Some(ts) = cols.get(TIMESTAMP_COLUMN) {
                    *stamps.entry(*ts).or_default() += 1;
                }
            }
            Parsed { name, ids, stamps }
        })
        .collect();

    let mut report = LinkageReport::default();
    for (i, a) in parsed.iter().enumerate() {
        for b in &parsed[i + 1..] {
            for (field, values) in &a.ids {
                let Some(other) = b.ids.get(field) else { continue };
                let shared = values.intersection(other).count();
                if shared > 0 {
                    report.max_join_cardinality = report.max_join_cardinality.max(shared);
                    report.entries.push(LinkageEntry {
                        field: (*field).to_owned(),
                        value_count: shared,
                        sp_a: a.name.to_owned(),
                        sp_b: b.name.to_owned(),
                    });
                }
            }
            report.timestamp_coincidences += a
                .stamps
                .iter()
                .filter_map(|(ts, n)| b.stamps.get(ts).map(|m| n * m))
                .sum::<u64>();
        }
    }
    report.entries.sort();
    report
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    pub linkage: LinkageReport,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.linkage.is_empty()
    }

    /// `N violations` followed by one `file offset class` line each.
    pub fn violations_text(&self) -> String {
        let mut s = format!("{} violations\n", self.violations.len());
        for v in &self.violations {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    pub fn linkage_text(&self) -> String {
        let mut s = String::new();
        for e in &self.linkage.entries {
            s.push_str(&format!("{e}\n"));
        }
        s.push_str(&format!(
            "max_join_cardinality = {}\n",
            self.linkage.max_join_cardinality
        ));
        s.push_str(&format!(
            "timestamp_coincidences = {}\n",
            self.linkage.timestamp_coincidences
        ));
        s
    }
}

/// Parses the registry dump: one hex-encoded canonical record per line.
pub fn parse_registry_dump(text: &str) -> Result<Vec<EnrollmentRecord>, AuditError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let corrupt = |reason: String| AuditError::Corrupt { line: i + 1, reason };
            let bytes = hex::decode(l).map_err(|e| corrupt(e.to_string()))?;
            canonical_parse::<EnrollmentRecord>(&bytes).map_err(|e| corrupt(e.to_string()))
        })
        .collect()
}

/// Audits a set of dump files keyed by file name (`cidr.dump`,
/// `sp-N.transcript`, `sp-N.inbox`).
pub fn audit_dumps(dumps: &BTreeMap<String, Vec<u8>>) -> Result<AuditReport, AuditError> {
    let registry = dumps
        .get(REGISTRY_DUMP)
        .ok_or_else(|| AuditError::Missing(REGISTRY_DUMP.to_owned()))?;
    let records = parse_registry_dump(&String::from_utf8_lossy(registry))?;
    let secrets = secrets_of(&records);

    let providers: BTreeSet<&str> = dumps
        .keys()
        .filter_map(|k| k.strip_suffix(".transcript").or_else(|| k.strip_suffix(".inbox")))
        .filter(|k| k.starts_with("sp-"))
        .collect();
    let mut surface = Vec::new();
    let mut transcripts = Vec::new();
    for sp in &providers {
        for ext in ["transcript", "inbox"] {
            let name = format!("{sp}.{ext}");
            if !dumps.contains_key(&name) {
                return Err(AuditError::Missing(name));
            }
        }
        let t = &dumps[&format!("{sp}.transcript")];
        surface.push((format!("{sp}.transcript"), t.as_slice()));
        surface.push((format!("{sp}.inbox"), dumps[&format!("{sp}.inbox")].as_slice()));
        transcripts.push((*sp, String::from_utf8_lossy(t)));
    }
    let violations = scan_sp_surface(surface.iter().map(|(n, b)| (n.as_str(), *b)), &secrets);
    let linkage = collusion_linkage(transcripts.iter().map(|(n, t)| (*n, t.as_ref())));
    Ok(AuditReport { violations, linkage })
}

/// Audits an output directory written by a run (reads `dir/dumps/`).
pub fn audit_dir(dir: &Path) -> Result<AuditReport, AuditError> {
    let dumps_dir = dir.join("dumps");
    if !dumps_dir.is_dir() {
        return Err(AuditError::Missing(dumps_dir.display().to_string()));
    }
    let io = |path: &Path, source| AuditError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut dumps = BTreeMap::new();
    for entry in std::fs::read_dir(&dumps_dir).map_err(|e| io(&dumps_dir, e))? {
        let path = entry.map_err(|e| io(&dumps_dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name == REGISTRY_DUMP || name.starts_with("sp-") {
            let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
            dumps.insert(name.to_owned(), bytes);
        }
    }
    audit_dumps(&dumps)
}
