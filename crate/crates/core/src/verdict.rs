//! The structured result every checker returns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{serde_map, serde_str, Rational, RationalScalar};

/// Outcome of one lemma or theorem check.
///
/// `holds` says whether the checked statement is satisfied by the measured
/// quantities (for theorem checkers: "this instance is not a
/// counterexample"); `tight` says the primary inequality is an exact
/// equality. Both are decided with exact rational comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub kind: String,
    #[serde(default)]
    pub inputs_digest: String,
    #[serde(with = "serde_map")]
    pub measured: BTreeMap<String, Rational>,
    #[serde(with = "serde_str")]
    pub bound: Rational,
    pub holds: bool,
    pub tight: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl VerdictReport {
    pub fn new(kind: &str, inputs_digest: String, bound: Rational) -> Self {
        VerdictReport {
            kind: kind.to_string(),
            inputs_digest,
            measured: BTreeMap::new(),
            bound,
            holds: false,
            tight: false,
            notes: Vec::new(),
            witness: None,
        }
    }

    pub fn with(mut self, name: &str, value: Rational) -> Self {
        self.measured.insert(name.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_witness(mut self, witness: serde_json::Value) -> Self {
        self.witness = Some(witness);
        self
    }

    /// Sets `holds = measured >= bound` and `tight = measured == bound`.
    pub fn lower_bound_verdict(mut self, measured: &Rational) -> Self {
        self.holds = *measured >= self.bound;
        self.tight = *measured == self.bound;
        self
    }

    pub fn verdict(mut self, holds: bool, tight: bool) -> Self {
        self.holds = holds;
        self.tight = tight;
        self
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.measured.get(name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Content hash of checker inputs, recorded in every report.
pub struct Digester(Sha256);

impl Digester {
    pub fn new(kind: &str) -> Self {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        Digester(h)
    }

    pub fn add<F: Fingerprint + ?Sized>(mut self, item: &F) -> Self {
        item.feed(&mut self.0);
        self
    }

    pub fn finish(self) -> String {
        hex::encode(&self.0.finalize()[..16])
    }
}

pub trait Fingerprint {
    fn feed(&self, h: &mut Sha256);
}

impl Fingerprint for Rational {
    fn feed(&self, h: &mut Sha256) {
        h.update(format!("{}/{};", self.numer(), self.denom()).as_bytes());
    }
}

impl Fingerprint for RationalScalar {
    fn feed(&self, h: &mut Sha256) {
        h.update(format!("{self};").as_bytes());
    }
}

impl Fingerprint for usize {
    fn feed(&self, h: &mut Sha256) {
        h.update(format!("{self};").as_bytes());
    }
}

impl<T: Fingerprint> Fingerprint for [T] {
    fn feed(&self, h: &mut Sha256) {
        h.update(format!("[{}]", self.len()).as_bytes());
        for item in self {
            item.feed(h);
        }
    }
}

impl<T: Fingerprint> Fingerprint for Vec<T> {
    fn feed(&self, h: &mut Sha256) {
        self.as_slice().feed(h);
    }
}

impl Fingerprint for crate::grid::GridSet {
    fn feed(&self, h: &mut Sha256) {
        h.update(format!("grid:{}:{}:", self.dim(), self.q()).as_bytes());
        for v in self.flat() {
            h.update(v.to_le_bytes());
        }
    }
}
