//! Parameter-grid sweeps and orbit simulation.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, ChaosCertificate, SearchConfig};
use crate::error::{Error, Result};
use crate::geom::{Point, Vec2};
use crate::map::BcnfParams;

/// Orbits with `|x|` above this count as divergent.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Endpoint-inclusive grid `lo + i (hi - lo) / (count - 1)`; a single
/// point sits at `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let r = Self { lo, hi, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "axis range needs finite bounds and count >= 1, got [{}, {}] x {}",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            // weighted form hits both endpoints exactly
            let n = (self.count - 1) as f64;
            ((n - i as f64) * self.lo + i as f64 * self.hi) / n
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub tau_l: AxisRange,
    pub tau_r: AxisRange,
    pub delta_l: f64,
    pub delta_r: f64,
    pub search: SearchConfig,
    pub workers: usize,
}

impl SweepSpec {
    pub fn cell_count(&self) -> usize {
        self.tau_l.count * self.tau_r.count
    }

    /// Parameters of cell `k` in row-major order, `tau_R` outer.
    pub fn params(&self, k: usize) -> BcnfParams {
        let (row, col) = (k / self.tau_l.count, k % self.tau_l.count);
        BcnfParams::new(
            self.tau_l.value(col),
            self.tau_r.value(row),
            self.delta_l,
            self.delta_r,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub tau_l: f64,
    pub tau_r: f64,
    pub chi_chaos: bool,
    pub beta: Option<f64>,
    pub p_max: Option<usize>,
    pub c: Option<f64>,
    pub lambda_bound: Option<f64>,
    /// Stage label, `error` when certification itself errored, empty on success.
    pub fail_stage: String,
}

impl SweepCell {
    pub fn from_certificate(cert: &ChaosCertificate) -> Self {
        Self {
            tau_l: cert.params.tau_l,
            tau_r: cert.params.tau_r,
            chi_chaos: cert.chi_chaos,
            beta: cert.beta,
            p_max: cert.p_max,
            c: cert.expansion_c,
            lambda_bound: cert.lambda_bound,
            fail_stage: cert.fail_stage.map(|s| s.to_string()).unwrap_or_default(),
        }
    }

    fn errored(m: &BcnfParams) -> Self {
        Self {
            tau_l: m.tau_l,
            tau_r: m.tau_r,
            chi_chaos: false,
            beta: None,
            p_max: None,
            c: None,
            lambda_bound: None,
            fail_stage: "error".into(),
        }
    }
}

pub fn certify_cell(m: &BcnfParams, cfg: &SearchConfig) -> SweepCell {
    match certify(m, cfg) {
        Ok(cert) => SweepCell::from_certificate(&cert),
        Err(_) => SweepCell::errored(m),
    }
}

/// Certifies every cell on a pool of `spec.workers` threads. Cells come
/// back in index order whatever the scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    spec.tau_l.validate()?;
    spec.tau_r.validate()?;
    spec.search.validate()?;
    if spec.workers == 0 {
        return Err(Error::InvalidConfig(
            "worker count must be at least 1".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..spec.cell_count())
            .into_par_iter()
            .map(|k| certify_cell(&spec.params(k), &spec.search))
            .collect()
    }))
}

pub const CSV_HEADER: &str = "tau_L,tau_R,chi_chaos,beta,p_max,c,lambda_bound,fail_stage";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(out: &mut W, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.tau_l,
            c.tau_r,
            c.chi_chaos,
            opt(c.beta),
            opt(c.p_max),
            opt(c.c),
            opt(c.lambda_bound),
            c.fail_stage
        )?;
    }
    Ok(())
}

/// `n` orbit points of `x0` after discarding `transient` iterates.
pub fn simulate(m: &BcnfParams, x0: Point, n: usize, transient: usize) -> Result<Vec<Point>> {
    let mut x = x0;
    let mut out = Vec::with_capacity(n);
    for step in 1..=transient + n {
        x = m.apply(x);
        let norm = x.norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { step, norm });
        }
        if step > transient {
            out.push(x);
        }
    }
    Ok(out)
}

pub fn write_orbit_csv<W: Write>(out: &mut W, points: &[Point]) -> io::Result<()> {
    writeln!(out, "x1,x2")?;
    for p in points {
        // adding zero turns -0 into 0
        writeln!(out, "{},{}", p.x1 + 0.0, p.x2 + 0.0)?;
    }
    Ok(())
}

/// Convenience for `simulate` from the origin.
pub fn simulate_origin(m: &BcnfParams, n: usize, transient: usize) -> Result<Vec<Point>> {
    simulate(m, Vec2::ZERO, n, transient)
}
