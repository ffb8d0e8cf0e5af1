//! Weak-mixing diagnostics for special flows over IETs.
//!
//! `W_N(s, x) = |(1/N) Σ_{n<N} e^{2πi s S_n f(x)}|` is an evidence-grade
//! statistic: its decay is consistent with `s` not being an eigenvalue
//! frequency of the special flow, and it certifies nothing by itself. The
//! stretch certificate checks the computable part of the tower argument:
//! `F″(x) = |s| Σ_{i<h} f″(Tⁱx)` bounded below by a multiple of
//! `1/(b − a)²` on towers whose floors end at a singularity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::ExactScalar;
use crate::iet::Iet;
use crate::induction::{self, InductionError, Partition};
use crate::numerics::{fmt_f64, CompensatedSum, CsvTable, PhaseAccumulator};
use crate::roof::{RoofError, RoofFunction};

/// Base points are `k / 2^BASE_BITS`.
pub const BASE_BITS: u32 = 40;
pub const DEFAULT_RESAMPLE_BUDGET: usize = 64;
/// Pilot-calibrated bound for `W_{10⁶}` on the asymmetric Kochergin log roof
/// over the golden rotation (`pilot/weakmix_pilot.toml`, 16 samples, seed
/// 20240601: largest observed value 2.4e-3).
pub const WEYL_PILOT_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakMixError {
    #[error("invalid diagnostic config: {0}")]
    BadConfig(String),
    #[error("sample {sample}: every one of {attempts} base points hit the guard band")]
    ResampleBudget { sample: usize, attempts: usize },
    #[error(transparent)]
    Roof(#[from] RoofError),
    #[error(transparent)]
    Induction(#[from] InductionError),
}

pub type Result<T> = std::result::Result<T, WeakMixError>;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticConfig {
    /// Frequency `s ≠ 0`.
    pub s: f64,
    /// Orbit length `N ≥ 1`.
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub resample_budget: usize,
}

impl DiagnosticConfig {
    pub fn new(s: f64, n: usize, samples: usize, seed: u64) -> Self {
        DiagnosticConfig { s, n, samples, seed, resample_budget: DEFAULT_RESAMPLE_BUDGET }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s != 0.0 && self.s.is_finite()) {
            return Err(WeakMixError::BadConfig(format!("frequency must be finite and nonzero, got {}", self.s)));
        }
        if self.n == 0 {
            return Err(WeakMixError::BadConfig("orbit length must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(WeakMixError::BadConfig("sample count must be at least 1".into()));
        }
        if self.resample_budget == 0 {
            return Err(WeakMixError::BadConfig("resample budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dyadic checkpoints `1, 2, 4, … ≤ N`, plus `N` itself.
pub fn checkpoints(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 1usize;
    while c <= n {
        out.push(c);
        match c.checked_mul(2) {
            Some(next) => c = next,
            None => break,
        }
    }
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylSample {
    pub sample_id: usize,
    /// Base point actually used, after resampling.
    pub base_point: ExactScalar,
    pub resamples: usize,
    /// `(N′, W_{N′})` at each checkpoint.
    pub values: Vec<(usize, f64)>,
}

impl WeylSample {
    pub fn final_value(&self) -> f64 {
        self.values.last().map_or(f64::NAN, |v| v.1)
    }
}

/// Per-sample base-point stream: ChaCha8 keyed by the seed, one stream per
/// sample, so results do not depend on scheduling.
fn base_point_stream(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

fn draw_base_point(rng: &mut ChaCha8Rng) -> ExactScalar {
    let k: u64 = rng.gen_range(0..(1u64 << BASE_BITS));
    ExactScalar::from_ratio(k as i64, 1i64 << BASE_BITS)
}

/// Weyl sums along one orbit; `None` when the orbit hits the guard band.
fn weyl_one(t: &Iet, f: &RoofFunction, x: &ExactScalar, s: f64, cps: &[usize]) -> Result<Option<Vec<(usize, f64)>>> {
    let n = *cps.last().expect("at least one checkpoint");
    let mut phase = PhaseAccumulator::default();
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    let mut out = Vec::with_capacity(cps.len());
    let mut next_cp = 0usize;
    let tau = std::f64::consts::TAU;
    let push = |count: usize, re: &CompensatedSum, im: &CompensatedSum, out: &mut Vec<(usize, f64)>| {
        let w = re.value().hypot(im.value()) / count as f64;
        out.push((count, w.min(1.0)));
    };

    // term n uses S_n f(x) = Σ_{i<n} f(Tⁱx), so f is needed at i < N − 1
    re.add(1.0);
    if cps[next_cp] == 1 {
        push(1, &re, &im, &mut out);
        next_cp += 1;
    }
    let mut count = 1usize;
    let res = f.along_orbit(t, x, n.saturating_sub(1), |_, v| {
        // s·f(x) as an exact sum of two floats
        let p = s * v[0];
        let e = s.mul_add(v[0], -p);
        phase.add(p);
        phase.add(e);
        let (sn, cs) = (tau * phase.fraction()).sin_cos();
        re.add(cs);
        im.add(sn);
        count += 1;
        if next_cp < cps.len() && cps[next_cp] == count {
            push(count, &re, &im, &mut out);
            next_cp += 1;
        }
        true
    });
    match res {
        Ok(()) => Ok(Some(out)),
        Err(RoofError::OrbitGuardBand { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// `W_{N′}` at dyadic checkpoints for each sampled base point.
pub fn weyl_diagnostic(t: &Iet, f: &RoofFunction, cfg: &DiagnosticConfig) -> Result<Vec<WeylSample>> {
    cfg.validate()?;
    let cps = checkpoints(cfg.n);
    (0..cfg.samples)
        .into_par_iter()
        .map(|sample_id| {
            let mut rng = base_point_stream(cfg.seed, sample_id);
            for attempt in 0..cfg.resample_budget {
                let x = draw_base_point(&mut rng);
                if let Some(values) = weyl_one(t, f, &x, cfg.s, &cps)? {
                    return Ok(WeylSample { sample_id, base_point: x, resamples: attempt, values });
                }
            }
            Err(WeakMixError::ResampleBudget { sample: sample_id, attempts: cfg.resample_budget })
        })
        .collect()
}

/// Rows `(s, N, sample_id, W_N)`.
pub fn weyl_csv(s: f64, samples: &[WeylSample]) -> CsvTable {
    let mut t = CsvTable::new(["s_freq", "N_steps", "sample_id", "W_N"]);
    for smp in samples {
        for &(n, w) in &smp.values {
            t.push(vec![fmt_f64(s), n.to_string(), smp.sample_id.to_string(), fmt_f64(w)]);
        }
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectRow {
    pub s: f64,
    pub n: usize,
    pub mean: f64,
    pub max: f64,
}

/// Mean and maximum of `W_N` over samples at the final `N`, per frequency.
pub fn eigen_defect(t: &Iet, f: &RoofFunction, s_grid: &[f64], cfg: &DiagnosticConfig) -> Result<Vec<DefectRow>> {
    s_grid
        .iter()
        .map(|&s| {
            let c = DiagnosticConfig { s, ..cfg.clone() };
            let samples = weyl_diagnostic(t, f, &c)?;
            let finals: Vec<f64> = samples.iter().map(WeylSample::final_value).collect();
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            let max = finals.iter().copied().fold(0.0, f64::max);
            Ok(DefectRow { s, n: cfg.n, mean, max })
        })
        .collect()
}

pub fn defect_csv(rows: &[DefectRow]) -> CsvTable {
    let mut t = CsvTable::new(["s_freq", "N_steps", "mean_W_N", "max_W_N"]);
    for r in rows {
        t.push(vec![fmt_f64(r.s), r.n.to_string(), fmt_f64(r.mean), fmt_f64(r.max)]);
    }
    t
}

/// Stretch data for one tower.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerStretch {
    pub cell: usize,
    pub tower: usize,
    pub height: usize,
    pub width: f64,
    /// Some floor end lies on a singularity.
    pub endpoint_witness: bool,
    /// `min F″(x)·(b − a)²` over the evaluated samples.
    pub normalized_min: Option<f64>,
    pub skipped_samples: usize,
}

impl TowerStretch {
    /// Every sample hit the guard band.
    pub fn inconclusive(&self) -> bool {
        self.endpoint_witness && self.normalized_min.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StretchReport {
    pub s: f64,
    pub towers: Vec<TowerStretch>,
    /// Minimum over witnessed towers.
    pub global_min: Option<f64>,
}

impl StretchReport {
    /// At least one witnessed tower, none inconclusive, all minima positive.
    pub fn passes(&self) -> bool {
        let witnessed: Vec<&TowerStretch> = self.towers.iter().filter(|t| t.endpoint_witness).collect();
        !witnessed.is_empty() && witnessed.iter().all(|t| t.normalized_min.is_some_and(|m| m > 0.0))
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new([
            "cell",
            "tower",
            "height_steps",
            "width",
            "normalized_min_F2_width2",
            "J3_witness",
            "skipped_samples",
        ]);
        for r in &self.towers {
            t.push(vec![
                r.cell.to_string(),
                r.tower.to_string(),
                r.height.to_string(),
                fmt_f64(r.width),
                r.normalized_min.map_or_else(|| "NA".to_string(), fmt_f64),
                r.endpoint_witness.to_string(),
                r.skipped_samples.to_string(),
            ]);
        }
        t
    }
}

/// Builds the towers over every partition cell and, on each tower with a
/// singular floor end, samples `F″` on `grid` interior base points.
pub fn stretch_certificate(
    t: &Iet,
    f: &RoofFunction,
    part: &Partition,
    singularities: &[ExactScalar],
    s: f64,
    grid: usize,
    cap: usize,
) -> Result<StretchReport> {
    if !(s != 0.0 && s.is_finite()) {
        return Err(WeakMixError::BadConfig(format!("frequency must be finite and nonzero, got {s}")));
    }
    if grid == 0 {
        return Err(WeakMixError::BadConfig("grid must have at least one point".into()));
    }
    let abs_s = s.abs();
    let mut rows = Vec::new();
    for (ci, cell) in part.cells().enumerate() {
        let set = induction::towers(t, &cell, singularities, cap)?;
        for (ti, tw) in set.towers.iter().enumerate() {
            let width = tw.width();
            let w = width.to_f64();
            let mut row = TowerStretch {
                cell: ci,
                tower: ti,
                height: tw.height,
                width: w,
                endpoint_witness: tw.has_endpoint_hit(),
                normalized_min: None,
                skipped_samples: 0,
            };
            if row.endpoint_witness {
                let denom = ExactScalar::from_int(grid as i64 + 1);
                let mut best: Option<f64> = None;
                for j in 0..grid {
                    let frac = &ExactScalar::from_int(j as i64 + 1) / &denom;
                    let x = &tw.base.left + &(&width * &frac);
                    let mut sum = CompensatedSum::new();
                    match f.along_orbit(t, &x, tw.height, |_, v| {
                        sum.add(v[2]);
                        true
                    }) {
                        Ok(()) => {
                            let val = abs_s * sum.value() * (w * w);
                            best = Some(best.map_or(val, |b: f64| b.min(val)));
                        }
                        Err(RoofError::OrbitGuardBand { .. }) => row.skipped_samples += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
                row.normalized_min = best;
            }
            rows.push(row);
        }
    }
    let global_min = rows
        .iter()
        .filter(|r| r.endpoint_witness)
        .filter_map(|r| r.normalized_min)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    Ok(StretchReport { s, towers: rows, global_min })
}
