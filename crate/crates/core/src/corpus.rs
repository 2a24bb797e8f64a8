//! Seeded random instances and the checker sweep.
//!
//! Instance `i` of a corpus with seed `s` draws from a ChaCha8 stream keyed
//! by `(s, i)`, so any single instance can be regenerated on its own and
//! sweeps give identical output however they are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::hull::{hull_of, Polytope};
use crate::intervals::{
    check_cauchy_davenport, check_lemma_distinct, check_lemma_iterated, freiman_iterated_bound,
    IntervalSet,
};
use crate::rational::{format_rational, int, rat, Rational, RationalScalar};
use crate::theorems::{
    check_long_fibre_claim, check_plunnecke, check_thm_distinct, check_thm_iterated, constant_l,
    sharp_family_exact, FamilyKind, SharpFamily,
};
use crate::verdict::VerdictReport;

pub const DEFAULT_SEED: u64 = 0xB4A11;

/// Denominator of every endpoint drawn for one-dimensional instances.
pub const INTERVAL_DENOMINATOR: i64 = 64;

pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Union of 1 to 6 random boxes near the origin plus 0 to 2 far cells.
pub fn random_grid<R: Rng>(rng: &mut R, d: usize, q: u64) -> GridSet {
    let qi = q as i64;
    let mut cells = Vec::new();
    for _ in 0..rng.gen_range(1..=6) {
        let lo: Vec<i64> = (0..d).map(|_| rng.gen_range(-2 * qi..2 * qi)).collect();
        let side: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=qi.max(2))).collect();
        let hi: Vec<i64> = lo.iter().zip(&side).map(|(l, s)| l + s).collect();
        let b = GridSet::from_box(d, q, &lo, &hi).expect("positive sides");
        cells.extend(b.cells().map(<[i64]>::to_vec));
    }
    for _ in 0..rng.gen_range(0..=2) {
        cells.push(
            (0..d)
                .map(|_| {
                    let r = rng.gen_range(6 * qi..=12 * qi);
                    if rng.gen_bool(0.5) {
                        r
                    } else {
                        -r
                    }
                })
                .collect(),
        );
    }
    GridSet::new(d, q, cells).expect("valid cells")
}

/// Two random grid sets at the same resolution with the same cell count.
///
/// The second set is trimmed (dropping its lexicographically largest
/// cells) or padded (extending a row from its largest cell along the first
/// axis) to match the first.
pub fn random_equal_pair<R: Rng>(rng: &mut R, d: usize, q: u64) -> (GridSet, GridSet) {
    let a = random_grid(rng, d, q);
    let b = random_grid(rng, d, q);
    let n = a.len();
    let mut cells: Vec<Vec<i64>> = b.cells().take(n).map(<[i64]>::to_vec).collect();
    let last = cells.last().expect("nonempty").clone();
    let mut j = 1;
    while cells.len() < n {
        let mut c = last.clone();
        c[0] += j;
        cells.push(c);
        j += 1;
    }
    (a, GridSet::new(d, q, cells).expect("valid cells"))
}

/// A random union of 1 to 3 intervals (possibly points) inside `[0, 1]`.
///
/// With `cap`, the set is shrunk towards 0 until its measure is at most `cap`.
pub fn random_unit_set<R: Rng>(rng: &mut R, cap: Option<&Rational>) -> IntervalSet {
    let den = INTERVAL_DENOMINATOR;
    let parts: Vec<(Rational, Rational)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let lo = rng.gen_range(0..den);
            let len = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=den / 4) };
            (rat(lo, den), rat((lo + len).min(den), den))
        })
        .collect();
    let s = IntervalSet::new(parts).expect("ordered parts");
    match cap {
        Some(c) if s.measure() > *c => s.scale(&(c / s.measure())),
        _ => s,
    }
}

/// A random one-dimensional set of positive measure in `[-2, 3]`, with
/// occasional isolated points.
pub fn random_line_set<R: Rng>(rng: &mut R) -> IntervalSet {
    let den = INTERVAL_DENOMINATOR;
    let mut parts = Vec::new();
    for i in 0..rng.gen_range(1..=4) {
        let lo = rng.gen_range(-2 * den..2 * den);
        let len = if i > 0 && rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=den) };
        parts.push((rat(lo, den), rat(lo + len, den)));
    }
    IntervalSet::new(parts).expect("ordered parts")
}

/// Hull of `n` random points with coordinates in `[-8, 8]` (step 1/4),
/// redrawn until full-dimensional.
pub fn random_polytope<R: Rng>(rng: &mut R, d: usize, n: usize) -> Polytope {
    loop {
        let pts: Vec<Vec<Rational>> = (0..n)
            .map(|_| (0..d).map(|_| rat(rng.gen_range(-32..=32), 4)).collect())
            .collect();
        let p = hull_of(d, &pts).expect("valid points");
        if p.volume() > int(0) {
            return p;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Checker {
    LemmaDistinct,
    LemmaIterated,
    Freiman,
    CauchyDavenport,
    Plunnecke,
    ThmDistinct,
    ThmIterated,
    LongFibre,
    SharpTwoSet,
    SharpIterated,
}

impl Checker {
    pub const ALL: [Checker; 10] = [
        Checker::LemmaDistinct,
        Checker::LemmaIterated,
        Checker::Freiman,
        Checker::CauchyDavenport,
        Checker::Plunnecke,
        Checker::ThmDistinct,
        Checker::ThmIterated,
        Checker::LongFibre,
        Checker::SharpTwoSet,
        Checker::SharpIterated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Checker::LemmaDistinct => "lemma-distinct",
            Checker::LemmaIterated => "lemma-iterated",
            Checker::Freiman => "freiman",
            Checker::CauchyDavenport => "cauchy-davenport",
            Checker::Plunnecke => "plunnecke",
            Checker::ThmDistinct => "thm-distinct",
            Checker::ThmIterated => "thm-iterated",
            Checker::LongFibre => "long-fibre",
            Checker::SharpTwoSet => "sharp-two-set",
            Checker::SharpIterated => "sharp-iterated",
        }
    }

    /// Measured key holding the quantity compared against the threshold.
    fn primary_key(self) -> &'static str {
        match self {
            Checker::LemmaDistinct | Checker::LemmaIterated => "S",
            Checker::Freiman => "kA",
            Checker::CauchyDavenport => "lhs",
            Checker::Plunnecke => "mX",
            Checker::ThmDistinct | Checker::SharpTwoSet => "delta",
            Checker::ThmIterated | Checker::SharpIterated => "ratio",
            Checker::LongFibre => "sum",
        }
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Checker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Checker::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Checker::ALL.iter().map(|c| c.name()).collect();
                Error::invalid(format!("unknown checker `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

fn ser_opt_rational<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&format_rational(r)),
        None => s.serialize_str(""),
    }
}

fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

/// One sweep row; field order is the CSV column order.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub seed: u64,
    pub instance: u64,
    pub d: usize,
    pub q: Option<u64>,
    pub t_or_k: String,
    #[serde(serialize_with = "ser_opt_rational")]
    pub primary_measure: Option<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub threshold: Rational,
    #[serde(serialize_with = "ser_opt_rational")]
    pub hull_ratio: Option<Rational>,
    pub holds: bool,
    pub tight: bool,
    #[serde(skip)]
    pub report: VerdictReport,
}

const TS: [(i64, i64); 3] = [(1, 2), (1, 3), (1, 4)];

fn scalar(p: i64, r: i64) -> RationalScalar {
    RationalScalar::new(p, r).expect("valid scalar")
}

/// Draws instance `index` of the corpus for `checker` and runs it.
pub fn run_instance(checker: Checker, seed: u64, index: u64) -> Result<SweepRecord> {
    let mut rng = instance_rng(seed, index);
    let rng = &mut rng;
    let pick_q = |rng: &mut ChaCha8Rng| *[1u64, 2, 4].choose(rng).expect("nonempty");
    let pick_t = |rng: &mut ChaCha8Rng| {
        let (p, r) = *TS.choose(rng).expect("nonempty");
        scalar(p, r)
    };
    let (d, q, param, report) = match checker {
        Checker::LemmaDistinct => {
            let (x, y, z) = (random_unit_set(rng, None), random_unit_set(rng, None), random_unit_set(rng, None));
            (1, None, String::new(), check_lemma_distinct(&x, &y, &z)?)
        }
        Checker::LemmaIterated => {
            let k = rng.gen_range(2..=4usize);
            let cap = rat(1, k as i64);
            let ys: Vec<IntervalSet> = (0..k).map(|_| random_unit_set(rng, Some(&cap))).collect();
            (1, None, k.to_string(), check_lemma_iterated(&ys)?)
        }
        Checker::Freiman => {
            let k = rng.gen_range(2..=5usize);
            let a = random_line_set(rng);
            (1, None, k.to_string(), freiman_iterated_bound(&a, k)?)
        }
        Checker::CauchyDavenport => {
            let (x, y) = (random_line_set(rng), random_line_set(rng));
            (1, None, String::new(), check_cauchy_davenport(&x, &y)?)
        }
        Checker::Plunnecke => {
            let d = rng.gen_range(1..=2usize);
            let q = pick_q(rng);
            let m = rng.gen_range(1..=3usize);
            let (x, y) = (random_grid(rng, d, q), random_grid(rng, d, q));
            (d, Some(q), m.to_string(), check_plunnecke(&x, &y, m)?)
        }
        Checker::ThmDistinct => {
            let d = rng.gen_range(1..=3usize);
            let q = pick_q(rng);
            let t = pick_t(rng);
            let (a, b) = random_equal_pair(rng, d, q);
            (d, Some(q), t.to_string(), check_thm_distinct(&a, &b, t)?)
        }
        Checker::ThmIterated => {
            let d = rng.gen_range(1..=3usize);
            let q = pick_q(rng);
            let k = rng.gen_range(2..=3usize);
            let a = random_grid(rng, d, q);
            (d, Some(q), k.to_string(), check_thm_iterated(&a, k, None)?)
        }
        Checker::LongFibre => {
            let d = rng.gen_range(1..=3usize);
            let q = pick_q(rng);
            let t = pick_t(rng);
            let (a, b) = random_equal_pair(rng, d, q);
            let l = constant_l(d, t);
            (d, Some(q), t.to_string(), check_long_fibre_claim(&a, &b, t, &l)?)
        }
        Checker::SharpTwoSet => {
            let d = 1 + (index % 3) as usize;
            let (p, r) = TS[(index / 3 % 3) as usize];
            let t = scalar(p, r);
            let v = (0..d).map(|_| int(rng.gen_range(2..=9))).collect();
            let fam = SharpFamily { d, kind: FamilyKind::TwoSet(t), v };
            (d, None, t.to_string(), sharp_family_exact(&fam, &[])?)
        }
        Checker::SharpIterated => {
            let d = 1 + (index % 3) as usize;
            let k = 2 + (index / 3 % 3) as usize;
            let v = (0..d).map(|_| int(rng.gen_range(k as i64 + 1..=k as i64 + 6))).collect();
            let fam = SharpFamily { d, kind: FamilyKind::Iterated(k), v };
            (d, None, k.to_string(), sharp_family_exact(&fam, &[])?)
        }
    };
    Ok(SweepRecord {
        seed,
        instance: index,
        d,
        q,
        t_or_k: param,
        primary_measure: report.get(checker.primary_key()).cloned(),
        threshold: report.get("threshold").cloned().unwrap_or_else(|| report.bound.clone()),
        hull_ratio: report.get("hull_ratio").cloned(),
        holds: report.holds,
        tight: report.tight,
        report,
    })
}

/// Runs `count` instances; records come back in instance order.
pub fn sweep(checker: Checker, seed: u64, count: usize) -> Result<Vec<SweepRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| run_instance(checker, seed, i))
        .collect()
}

pub fn records_to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "seed",
        "instance",
        "d",
        "q",
        "t_or_k",
        "primary_measure",
        "threshold",
        "hull_ratio",
        "holds",
        "tight",
    ])
    .map_err(|e| Error::Invariant(e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::Invariant(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn records_to_json(records: &[SweepRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}
