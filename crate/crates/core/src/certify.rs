//! The end-to-end search: seed scan, polygon placement, cone construction
//! and the resulting Lyapunov lower bound.

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::cone::{
    build_cone_interval, check_cone_expansion, first_invariance_violation, slope_fixed_points,
    ConeInterval, ExpansionReport, HRoots, SlopeFixedPoints, SlopeQuadruple,
};
use crate::error::{Error, Result};
use crate::geom::{Point, Vec2};
use crate::map::{gamma, BcnfParams, TangentState};
use crate::region::{
    build_polygon, compute_p_max, find_escape_indices, placement_report, verify_recurrence_sampled,
    InvariantPolygon,
};
use crate::words::{Symbol, WordSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub beta_min: f64,
    pub beta_step: f64,
    pub beta_max: f64,
    pub r_max: usize,
    pub ell_max: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beta_min: 0.01,
            beta_step: 0.01,
            beta_max: 5.0,
            r_max: 15,
            ell_max: 15,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let finite =
            self.beta_min.is_finite() && self.beta_step.is_finite() && self.beta_max.is_finite();
        if !finite
            || !(self.beta_min > 0.0)
            || !(self.beta_step > 0.0)
            || self.beta_min > self.beta_max
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < beta_min <= beta_max and beta_step > 0, got {} / {} / {}",
                self.beta_min, self.beta_step, self.beta_max
            )));
        }
        Ok(())
    }

    /// Grid values `beta_min + k beta_step` not exceeding `beta_max`.
    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        // the tolerance keeps the nominal endpoint despite rounding
        let n = ((self.beta_max - self.beta_min) / self.beta_step + 1e-9).floor() as usize;
        (0..=n).map(move |k| self.beta_min + k as f64 * self.beta_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C1" => Ok(Stage::C1),
            "C2" => Ok(Stage::C2),
            "C3" => Ok(Stage::C3),
            "C4" => Ok(Stage::C4),
            "C5" => Ok(Stage::C5),
            other => Err(Error::InvalidConfig(format!("unknown stage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCertificate {
    pub params: BcnfParams,
    pub chi_chaos: bool,
    /// The first grid value passing C1 and C2.
    pub beta: Option<f64>,
    pub r: Option<usize>,
    pub ell: Option<usize>,
    pub p_max: Option<usize>,
    pub word_set: Option<WordSet>,
    pub polygon: Option<InvariantPolygon>,
    /// Family `A_L^(j-1) A_R`, `j = 1..=p_max+1`.
    pub matrices: Vec<SlopeQuadruple>,
    pub fixed_points: Vec<SlopeFixedPoints>,
    pub cone: Option<ConeInterval>,
    pub expansion: Option<ExpansionReport>,
    pub expansion_c: Option<f64>,
    pub lambda_bound: Option<f64>,
    pub fail_stage: Option<Stage>,
    pub fail_detail: Option<String>,
}

impl ChaosCertificate {
    fn empty(params: BcnfParams) -> Self {
        Self {
            params,
            chi_chaos: false,
            beta: None,
            r: None,
            ell: None,
            p_max: None,
            word_set: None,
            polygon: None,
            matrices: Vec::new(),
            fixed_points: Vec::new(),
            cone: None,
            expansion: None,
            expansion_c: None,
            lambda_bound: None,
            fail_stage: None,
            fail_detail: None,
        }
    }

    fn fail(mut self, stage: Stage, detail: String) -> Self {
        self.chi_chaos = false;
        self.fail_stage = Some(stage);
        self.fail_detail = Some(detail);
        self
    }

    /// Longest word length, `p_max + 1`.
    pub fn l_max(&self) -> Option<usize> {
        self.p_max.map(|p| p + 1)
    }
}

/// `ln(c) / l_max`.
pub fn lambda_bound(c: f64, l_max: usize) -> Result<f64> {
    if !(c > 1.0) {
        return Err(Error::NotExpanding(c));
    }
    if l_max == 0 {
        return Err(Error::InvalidConfig("l_max must be at least 1".into()));
    }
    Ok(c.ln() / l_max as f64)
}

struct Placed {
    beta: f64,
    polygon: InvariantPolygon,
    p_max: usize,
}

enum SeedOutcome {
    Placed(Placed),
    Failed(Stage, String),
}

fn try_seed(m: &BcnfParams, beta: f64, cfg: &SearchConfig) -> Result<SeedOutcome> {
    let (r, ell) = match find_escape_indices(m, beta, cfg.r_max, cfg.ell_max) {
        Ok(v) => v,
        Err(Error::FailureC1(d)) => return Ok(SeedOutcome::Failed(Stage::C1, d)),
        Err(e) => return Err(e),
    };
    let polygon = match build_polygon(m, beta, r, ell) {
        Ok(p) => p,
        Err(e @ (Error::DegenerateChain(_) | Error::SelfIntersecting)) => {
            return Ok(SeedOutcome::Failed(
                Stage::C1,
                format!("beta = {beta}: {e}"),
            ))
        }
        Err(e) => return Err(e),
    };
    if let Some(v) = placement_report(&polygon).first_violation() {
        return Ok(SeedOutcome::Failed(
            Stage::C2,
            format!("beta = {beta}: {v}"),
        ));
    }
    match compute_p_max(m, &polygon) {
        Ok(p_max) => Ok(SeedOutcome::Placed(Placed {
            beta,
            polygon,
            p_max,
        })),
        Err(e) => Ok(SeedOutcome::Failed(
            Stage::C2,
            format!("beta = {beta}: {e}"),
        )),
    }
}

/// Runs stages C1 to C5. The seed scan stops at the first `beta` passing
/// C1 and C2; later failures do not resume it.
pub fn certify(m: &BcnfParams, cfg: &SearchConfig) -> Result<ChaosCertificate> {
    m.require_orientation_preserving()?;
    cfg.validate()?;
    let mut cert = ChaosCertificate::empty(*m);

    let mut placed = None;
    let mut last_failure: Option<(Stage, String)> = None;
    for beta in cfg.betas() {
        match try_seed(m, beta, cfg)? {
            SeedOutcome::Placed(p) => {
                placed = Some(p);
                break;
            }
            SeedOutcome::Failed(stage, detail) => {
                // a C2 failure outranks a later C1 failure
                if last_failure.as_ref().map_or(true, |(s, _)| stage >= *s) {
                    last_failure = Some((stage, detail));
                }
            }
        }
    }
    let Some(placed) = placed else {
        let (stage, detail) = last_failure.unwrap_or((Stage::C1, "empty seed grid".into()));
        return Ok(cert.fail(stage, format!("no seed passed C1 and C2; last: {detail}")));
    };

    let ws = WordSet::canonical(placed.p_max);
    cert.beta = Some(placed.beta);
    cert.r = Some(placed.polygon.r);
    cert.ell = Some(placed.polygon.ell);
    cert.p_max = Some(placed.p_max);
    cert.matrices = ws
        .matrices(m)
        .into_iter()
        .map(SlopeQuadruple::from)
        .collect();
    cert.word_set = Some(ws);
    cert.polygon = Some(placed.polygon);

    for (i, q) in cert.matrices.iter().enumerate() {
        match slope_fixed_points(q, i + 1) {
            Ok(fp) => cert.fixed_points.push(fp),
            Err(Error::FailureC3(why)) => return Ok(cert.fail(Stage::C3, why.to_string())),
            Err(e) => return Err(e),
        }
    }

    let cone = build_cone_interval(&cert.fixed_points)?;
    cert.cone = Some(cone);
    if let Some(i) = first_invariance_violation(&cone, &cert.fixed_points) {
        let m_unstab = cert.fixed_points[i].m_unstab;
        return Ok(cert.fail(
            Stage::C4,
            format!(
                "matrix {}: unstable slope {m_unstab} lies in [{}, {}]",
                i + 1,
                cone.lo,
                cone.hi
            ),
        ));
    }

    let report = check_cone_expansion(&cone, &cert.matrices);
    let first = report.first_failure();
    cert.expansion = Some(report.clone());
    if let Some((i, why)) = first {
        return Ok(cert.fail(Stage::C5, format!("matrix {}: {why}", i + 1)));
    }
    let c = report.c.expect("passing expansion report carries c");
    let l_max = cert.l_max().expect("p_max set");
    cert.lambda_bound = Some(lambda_bound(c, l_max)?);
    cert.expansion_c = Some(c);
    if let Some(cone) = cert.cone.as_mut() {
        cone.expansion_c = Some(c);
    }
    cert.chi_chaos = true;
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub n_orbit: usize,
    pub n_starts: usize,
    pub n_samples: usize,
    /// Allowed shortfall of the Lyapunov estimate below the bound.
    pub lyapunov_tol: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            n_orbit: 100_000,
            n_starts: 10,
            n_samples: 10_000,
            lyapunov_tol: 0.0,
            seed: 0,
        }
    }
}

/// Relative slack allowed in the word-boundary growth check.
pub const GROWTH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub lambda_bound: f64,
    pub lyapunov_estimates: Vec<f64>,
    pub lyapunov_ok: bool,
    /// Completed words over all starts.
    pub words_checked: usize,
    /// Smallest `ln|v_j| - ln|v_0| - j ln c` seen at a word boundary.
    pub min_growth_margin: f64,
    pub growth_ok: bool,
    pub invariance_ok: bool,
    pub recurrence_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.lyapunov_ok && self.growth_ok && self.invariance_ok && self.recurrence_ok
    }
}

/// Log-growth of a tangent vector and the worst margin against `c^j` at
/// each completed word (a word ends just before the next `R` step).
pub fn word_boundary_growth(
    m: &BcnfParams,
    x: Point,
    slope: f64,
    n: usize,
    c: f64,
) -> (usize, f64) {
    let mut state = TangentState::new(x, Vec2::new(1.0, slope));
    let mut log_norm = 0.0f64;
    state.v = state.v.scale(1.0 / state.v.norm());
    let ln_c = c.ln();
    let mut words = 0usize;
    let mut worst = f64::INFINITY;
    for k in 0..n {
        if k > 0 && gamma(state) == Symbol::R {
            words += 1;
            worst = worst.min(log_norm - words as f64 * ln_c);
        }
        state = m.tangent_step(state);
        let norm = state.v.norm();
        log_norm += norm.ln();
        state.v = state.v.scale(1.0 / norm);
    }
    (words, worst)
}

/// Numerical checks of a positive certificate.
pub fn cross_validate(
    cert: &ChaosCertificate,
    m: &BcnfParams,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    let (Some(c), Some(bound), Some(cone), Some(poly), Some(ws)) = (
        cert.expansion_c,
        cert.lambda_bound,
        cert.cone,
        cert.polygon.as_ref(),
        cert.word_set.as_ref(),
    ) else {
        return Err(Error::NotCertified);
    };
    if !cert.chi_chaos {
        return Err(Error::NotCertified);
    }
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let slope = cone.midpoint();

    let mut lyapunov_estimates = Vec::with_capacity(opts.n_starts);
    let mut words_checked = 0;
    let mut min_growth_margin = f64::INFINITY;
    for _ in 0..opts.n_starts {
        let x = poly.sample_recurrent(&mut rng);
        lyapunov_estimates
            .push(m.lyapunov_estimate(TangentState::new(x, Vec2::new(1.0, slope)), opts.n_orbit)?);
        let (words, margin) = word_boundary_growth(m, x, slope, opts.n_orbit, c);
        words_checked += words;
        min_growth_margin = min_growth_margin.min(margin);
    }
    let lyapunov_ok = lyapunov_estimates
        .iter()
        .all(|&e| e >= bound - opts.lyapunov_tol);
    let growth_ok = words_checked > 0 && min_growth_margin >= (1.0 - GROWTH_SLACK).ln();

    let invariance_ok = (0..opts.n_samples).all(|_| {
        let x = poly.sample(&mut rng);
        poly.contains_with_tol(m.apply(x), 1e-9)
    });
    let recurrence_ok = verify_recurrence_sampled(m, poly, ws, opts.n_samples, &mut rng);

    Ok(ValidationReport {
        lambda_bound: bound,
        lyapunov_estimates,
        lyapunov_ok,
        words_checked,
        min_growth_margin,
        growth_ok,
        invariance_ok,
        recurrence_ok,
    })
}

/// Per-matrix cone data in a certificate document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDiagnostic {
    pub j: usize,
    pub word: String,
    pub matrix: [f64; 4],
    pub m_stab: Option<f64>,
    pub m_unstab: Option<f64>,
    pub eta: Option<f64>,
    pub m_blowup: Option<f64>,
    pub h_roots: Option<HRoots>,
    pub c_j: Option<f64>,
    pub failure: Option<String>,
}

/// Flat serialized form of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "tau_R")]
    pub tau_r: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
    pub chi_chaos: bool,
    pub beta: Option<f64>,
    pub r: Option<usize>,
    pub ell: Option<usize>,
    pub p_max: Option<usize>,
    pub words: Vec<String>,
    #[serde(rename = "J_lo")]
    pub j_lo: Option<f64>,
    #[serde(rename = "J_hi")]
    pub j_hi: Option<f64>,
    pub c: Option<f64>,
    pub lambda_bound: Option<f64>,
    pub fail_stage: Option<Stage>,
    pub fail_detail: Option<String>,
    pub vertices: Vec<Point>,
    pub cone: Vec<ConeDiagnostic>,
}

impl From<&ChaosCertificate> for CertificateDocument {
    fn from(cert: &ChaosCertificate) -> Self {
        let words: Vec<String> = cert
            .word_set
            .as_ref()
            .map(|ws| ws.words().iter().map(|w| w.to_string()).collect())
            .unwrap_or_default();
        let cone = cert
            .matrices
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let fp = cert.fixed_points.get(i);
                let ex = cert.expansion.as_ref().and_then(|e| e.per_matrix.get(i));
                ConeDiagnostic {
                    j: i + 1,
                    word: words.get(i).cloned().unwrap_or_default(),
                    matrix: [q.a, q.b, q.c, q.d],
                    m_stab: fp.map(|f| f.m_stab),
                    m_unstab: fp.map(|f| f.m_unstab),
                    eta: fp.map(|f| f.eta),
                    m_blowup: fp.map(|f| f.m_blowup),
                    h_roots: ex.map(|e| e.roots),
                    c_j: ex.map(|e| e.c_j),
                    failure: ex.and_then(|e| e.failure).map(|f| f.to_string()),
                }
            })
            .collect();
        Self {
            tau_l: cert.params.tau_l,
            tau_r: cert.params.tau_r,
            delta_l: cert.params.delta_l,
            delta_r: cert.params.delta_r,
            chi_chaos: cert.chi_chaos,
            beta: cert.beta,
            r: cert.r,
            ell: cert.ell,
            p_max: cert.p_max,
            words,
            j_lo: cert.cone.map(|c| c.lo),
            j_hi: cert.cone.map(|c| c.hi),
            c: cert.expansion_c,
            lambda_bound: cert.lambda_bound,
            fail_stage: cert.fail_stage,
            fail_detail: cert.fail_detail.clone(),
            vertices: cert
                .polygon
                .as_ref()
                .map(|p| p.vertices.clone())
                .unwrap_or_default(),
            cone,
        }
    }
}
