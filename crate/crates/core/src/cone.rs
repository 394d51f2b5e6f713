//! Invariant expanding cones for a finite family of 2×2 matrices.
//!
//! For `M = [[a, b], [c, d]]` and a tangent direction `v = (1, m)` write
//!
//! ```text
//! G(m) = (c + d m) / (a + b m)                 slope of M v
//! H(m) = |M v|^2 - |v|^2
//!      = (b² + d² - 1) m² + 2 (a b + c d) m + a² + c² - 1
//! ```
//!
//! When `0 < det M < trace(M)²/4` and `b != 0`, `G` has a stable fixed slope
//! (the dominant eigendirection) and an unstable one. The cone spanned by
//! slopes in `J = [min m_stab, max m_stab]` is invariant under the whole
//! family as long as no unstable slope falls in `J`, and expanding when
//! every `H_j` is positive on `J`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};

/// Conservative margin: comparisons closer than this count as failures.
pub const MARGIN: f64 = 1e-12;

/// Entries of one family member, `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeQuadruple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<Mat2> for SlopeQuadruple {
    fn from(m: Mat2) -> Self {
        Self {
            a: m.a,
            b: m.b,
            c: m.c,
            d: m.d,
        }
    }
}

impl SlopeQuadruple {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.a, self.b, self.c, self.d)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Slope map `G`.
    pub fn slope_map(&self, m: f64) -> f64 {
        (self.c + self.d * m) / (self.a + self.b * m)
    }

    /// `dG/dm = det / (a + b m)²`.
    pub fn slope_map_derivative(&self, m: f64) -> f64 {
        let den = self.a + self.b * m;
        self.det() / (den * den)
    }

    /// Coefficients `(q2, q1, q0)` of `H(m) = q2 m² + q1 m + q0`.
    pub fn norm_excess_coeffs(&self) -> (f64, f64, f64) {
        (
            self.b * self.b + self.d * self.d - 1.0,
            2.0 * (self.a * self.b + self.c * self.d),
            self.a * self.a + self.c * self.c - 1.0,
        )
    }

    /// `H(m) = |M (1, m)|² - |(1, m)|²`.
    pub fn norm_excess(&self, m: f64) -> f64 {
        let (q2, q1, q0) = self.norm_excess_coeffs();
        (q2 * m + q1) * m + q0
    }

    /// `|M (1, m)| / |(1, m)|`.
    pub fn norm_ratio(&self, m: f64) -> f64 {
        let v = Vec2::new(1.0, m);
        (self.matrix() * v).norm() / v.norm()
    }
}

/// Why a matrix fails the admissibility test of stage C3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, thiserror::Error)]
pub enum Inadmissible {
    #[error("matrix {j}: det = {det} is not positive")]
    NonPositiveDeterminant { j: usize, det: f64 },
    #[error("matrix {j}: det = {det} is not below trace²/4 = {quarter_trace_sq}")]
    NonRealEigenvalues {
        j: usize,
        det: f64,
        quarter_trace_sq: f64,
    },
    #[error("matrix {j}: upper-right entry b vanishes")]
    ZeroOffDiagonal { j: usize },
}

/// Fixed points of the slope map of one admissible matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFixedPoints {
    pub m_stab: f64,
    pub m_unstab: f64,
    /// `dG/dm` at `m_stab`, equal to `lambda_2 / lambda_1`.
    pub eta: f64,
    pub m_blowup: f64,
    /// Dominant eigenvalue.
    pub lambda_1: f64,
    pub lambda_2: f64,
}

/// Stage C3 for a single matrix, then the two fixed slopes.
///
/// `j` only labels the error.
pub fn slope_fixed_points(q: &SlopeQuadruple, j: usize) -> Result<SlopeFixedPoints> {
    let det = q.det();
    let half_trace = 0.5 * q.trace();
    let quarter_trace_sq = half_trace * half_trace;
    if !(det > MARGIN) {
        return Err(Error::FailureC3(Inadmissible::NonPositiveDeterminant {
            j,
            det,
        }));
    }
    if !(quarter_trace_sq - det > MARGIN) {
        return Err(Error::FailureC3(Inadmissible::NonRealEigenvalues {
            j,
            det,
            quarter_trace_sq,
        }));
    }
    if !(q.b.abs() > MARGIN) {
        return Err(Error::FailureC3(Inadmissible::ZeroOffDiagonal { j }));
    }
    let root = (quarter_trace_sq - det).sqrt();
    // det > 0 so both eigenvalues share the sign of the trace
    let lambda_1 = half_trace + half_trace.signum() * root;
    let lambda_2 = det / lambda_1;
    Ok(SlopeFixedPoints {
        m_stab: (lambda_1 - q.a) / q.b,
        m_unstab: (lambda_2 - q.a) / q.b,
        eta: lambda_2 / lambda_1,
        m_blowup: -q.a / q.b,
        lambda_1,
        lambda_2,
    })
}

/// The slope interval `J` and, once stage C5 has passed, the expansion
/// factor of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeInterval {
    pub lo: f64,
    pub hi: f64,
    pub expansion_c: Option<f64>,
}

impl ConeInterval {
    pub fn contains(&self, m: f64) -> bool {
        m >= self.lo && m <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn build_cone_interval(fps: &[SlopeFixedPoints]) -> Result<ConeInterval> {
    if fps.is_empty() {
        return Err(Error::InvalidConfig(
            "cone needs at least one matrix".into(),
        ));
    }
    let (lo, hi) = fps
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
            (lo.min(f.m_stab), hi.max(f.m_stab))
        });
    Ok(ConeInterval {
        lo,
        hi,
        expansion_c: None,
    })
}

/// Stage C4: no unstable slope may lie in `J` (endpoints included, with a
/// margin).
pub fn check_cone_invariance(j: &ConeInterval, fps: &[SlopeFixedPoints]) -> bool {
    first_invariance_violation(j, fps).is_none()
}

/// Index of the first family member whose unstable slope lies in `J`.
pub fn first_invariance_violation(j: &ConeInterval, fps: &[SlopeFixedPoints]) -> Option<usize> {
    fps.iter()
        .position(|f| f.m_unstab >= j.lo - MARGIN && f.m_unstab <= j.hi + MARGIN)
}

/// Roots of `H_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HRoots {
    /// Leading coefficient vanishes; one root.
    Linear { root: f64 },
    /// Two distinct roots, labelled by the sign of `H'` there.
    Quadratic { incr: f64, decr: f64 },
    /// No root the tests can use.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionFailure {
    NoRealRoots,
    OrderingFailed,
    LinearRootFailed,
    NotExpanding,
}

impl fmt::Display for ExpansionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionFailure::NoRealRoots => "NoRealRoots",
            ExpansionFailure::OrderingFailed => "OrderingFailed",
            ExpansionFailure::LinearRootFailed => "LinearRootFailed",
            ExpansionFailure::NotExpanding => "NotExpanding",
        })
    }
}

/// Stage C5 diagnostics for one family member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub roots: HRoots,
    /// Which of `hi < m_decr`, `m_decr < m_incr`, `m_incr < lo` held.
    pub inequalities: Option<[bool; 3]>,
    /// Minimum of `|M v| / |v|` over the cone.
    pub c_j: f64,
    pub failure: Option<ExpansionFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub passed: bool,
    /// `min_j c_j`, reported only when every check passed.
    pub c: Option<f64>,
    pub per_matrix: Vec<ExpansionCheck>,
}

impl ExpansionReport {
    /// First failing member as `(index, reason)`, 0-based.
    pub fn first_failure(&self) -> Option<(usize, ExpansionFailure)> {
        self.per_matrix
            .iter()
            .enumerate()
            .find_map(|(i, c)| c.failure.map(|f| (i, f)))
    }
}

fn less(a: f64, b: f64) -> bool {
    b - a > MARGIN
}

/// Positivity of `H` on `J` decided from the roots of `H` alone.
pub fn h_positive_on_interval(
    q: &SlopeQuadruple,
    j: &ConeInterval,
) -> (HRoots, Option<[bool; 3]>, Option<ExpansionFailure>) {
    let (q2, q1, q0) = q.norm_excess_coeffs();
    if q2.abs() < MARGIN {
        if q1.abs() <= MARGIN {
            return (HRoots::None, None, Some(ExpansionFailure::LinearRootFailed));
        }
        let root = -q0 / q1;
        let ok = if q1 < 0.0 {
            less(j.hi, root)
        } else {
            less(root, j.lo)
        };
        let failure = (!ok).then_some(ExpansionFailure::LinearRootFailed);
        return (HRoots::Linear { root }, None, failure);
    }
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if !(disc > 0.0) {
        return (HRoots::None, None, Some(ExpansionFailure::NoRealRoots));
    }
    let s = disc.sqrt();
    // cancellation-free pair of roots
    let t = -0.5 * (q1 + q1.signum() * s);
    let (r1, r2) = if t == 0.0 {
        let r = (-q0 / q2).sqrt();
        (-r, r)
    } else {
        (t / q2, q0 / t)
    };
    if r1 == r2 {
        return (HRoots::None, None, Some(ExpansionFailure::NoRealRoots));
    }
    let slope_at = |m: f64| 2.0 * q2 * m + q1;
    let (incr, decr) = if slope_at(r1) > 0.0 {
        (r1, r2)
    } else {
        (r2, r1)
    };
    let ineq = [less(j.hi, decr), less(decr, incr), less(incr, j.lo)];
    let held = ineq.iter().filter(|&&b| b).count();
    let failure = (held < 2).then_some(ExpansionFailure::OrderingFailed);
    (HRoots::Quadratic { incr, decr }, Some(ineq), failure)
}

/// Exact minimum of `|M (1, m)| / |(1, m)|` over `m` in `[lo, hi]`.
///
/// With `P(m) = |M (1, m)|² = α m² + β m + γ`, the derivative of
/// `P / (1 + m²)` vanishes where `-β m² + 2 (α - γ) m + β = 0`.
pub fn min_norm_ratio(q: &SlopeQuadruple, lo: f64, hi: f64) -> f64 {
    let alpha = q.b * q.b + q.d * q.d;
    let beta = 2.0 * (q.a * q.b + q.c * q.d);
    let gamma = q.a * q.a + q.c * q.c;
    let ratio2 = |m: f64| ((alpha * m + beta) * m + gamma) / (1.0 + m * m);

    let mut candidates = vec![lo, hi];
    let (k2, k1, k0) = (-beta, 2.0 * (alpha - gamma), beta);
    if k2 == 0.0 {
        if k1 != 0.0 {
            candidates.push(-k0 / k1);
        }
    } else {
        let disc = k1 * k1 - 4.0 * k2 * k0;
        if disc >= 0.0 {
            let s = disc.sqrt();
            candidates.push((-k1 + s) / (2.0 * k2));
            candidates.push((-k1 - s) / (2.0 * k2));
        }
    }
    candidates
        .into_iter()
        .filter(|m| m.is_finite() && *m >= lo && *m <= hi)
        .map(ratio2)
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Stage C5 over the whole family.
pub fn check_cone_expansion(j: &ConeInterval, qs: &[SlopeQuadruple]) -> ExpansionReport {
    let mut per_matrix: Vec<ExpansionCheck> = qs
        .iter()
        .map(|q| {
            let (roots, inequalities, failure) = h_positive_on_interval(q, j);
            ExpansionCheck {
                roots,
                inequalities,
                c_j: min_norm_ratio(q, j.lo, j.hi),
                failure,
            }
        })
        .collect();
    for check in per_matrix.iter_mut() {
        if check.failure.is_none() && !(check.c_j > 1.0) {
            check.failure = Some(ExpansionFailure::NotExpanding);
        }
    }
    let passed = per_matrix.iter().all(|c| c.failure.is_none());
    let c = passed.then(|| {
        per_matrix
            .iter()
            .map(|c| c.c_j)
            .fold(f64::INFINITY, f64::min)
    });
    ExpansionReport {
        passed,
        c,
        per_matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::BcnfParams;

    fn quad(m: Mat2) -> SlopeQuadruple {
        m.into()
    }

    #[test]
    fn fixed_slopes_of_a_r() {
        let m = BcnfParams::with_delta(0.7, -1.4, 0.3);
        let q = quad(m.a_r());
        let fp = slope_fixed_points(&q, 1).unwrap();
        // eigenvalues (-1.4 ± sqrt(0.76)) / 2
        let s = 0.76f64.sqrt();
        let (l1, l2) = ((-1.4 - s) / 2.0, (-1.4 + s) / 2.0);
        assert!((fp.lambda_1 - l1).abs() < 1e-14);
        assert!((fp.lambda_2 - l2).abs() < 1e-14);
        assert!((fp.m_stab - (l1 + 1.4)).abs() < 1e-14);
        assert!((fp.m_stab - 0.2641).abs() < 1e-4);
        assert!((fp.m_unstab - 1.1359).abs() < 1e-4);
        assert!((q.slope_map(fp.m_stab) - fp.m_stab).abs() < 1e-12);
        assert!((q.slope_map(fp.m_unstab) - fp.m_unstab).abs() < 1e-12);
        assert!(fp.eta > 0.0 && fp.eta < 1.0);
        assert!((q.slope_map_derivative(fp.m_stab) - fp.eta).abs() < 1e-12);
        assert!((q.slope_map_derivative(fp.m_unstab) * fp.eta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_slope_lies_between_stable_and_blowup() {
        for (a, b, c, d) in [
            (2.0, 1.0, 0.5, 1.0),
            (-1.4, 1.0, -0.3, 0.0),
            (4.0, -2.0, 1.0, 0.5),
        ] {
            let q = SlopeQuadruple { a, b, c, d };
            let fp = slope_fixed_points(&q, 1).unwrap();
            let (lo, hi) = if fp.m_stab < fp.m_blowup {
                (fp.m_stab, fp.m_blowup)
            } else {
                (fp.m_blowup, fp.m_stab)
            };
            assert!(fp.m_unstab > lo && fp.m_unstab < hi, "{q:?} {fp:?}");
        }
    }

    #[test]
    fn repeated_eigenvalue_is_inadmissible() {
        // trace 2, det 1
        let q = SlopeQuadruple {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            d: 1.0,
        };
        assert!(matches!(
            slope_fixed_points(&q, 1),
            Err(Error::FailureC3(Inadmissible::NonRealEigenvalues { .. }))
        ));
    }

    #[test]
    fn complex_left_matrix_is_inadmissible() {
        let m = BcnfParams::with_delta(0.7, -1.4, 0.3);
        assert!(matches!(
            slope_fixed_points(&quad(m.a_l()), 2),
            Err(Error::FailureC3(Inadmissible::NonRealEigenvalues {
                j: 2,
                ..
            }))
        ));
    }

    #[test]
    fn other_admissibility_failures() {
        let neg = SlopeQuadruple {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: -1.0,
        };
        assert!(matches!(
            slope_fixed_points(&neg, 1),
            Err(Error::FailureC3(
                Inadmissible::NonPositiveDeterminant { .. }
            ))
        ));
        let diag = SlopeQuadruple {
            a: 2.0,
            b: 0.0,
            c: 1.0,
            d: 0.5,
        };
        assert!(matches!(
            slope_fixed_points(&diag, 1),
            Err(Error::FailureC3(Inadmissible::ZeroOffDiagonal { .. }))
        ));
    }

    fn fp_with(m_stab: f64, m_unstab: f64) -> SlopeFixedPoints {
        SlopeFixedPoints {
            m_stab,
            m_unstab,
            eta: 0.5,
            m_blowup: 10.0,
            lambda_1: 2.0,
            lambda_2: 1.0,
        }
    }

    #[test]
    fn interval_is_min_max() {
        let j = build_cone_interval(&[fp_with(0.41, 2.0), fp_with(0.26, 3.0)]).unwrap();
        assert_eq!((j.lo, j.hi), (0.26, 0.41));
        let single = build_cone_interval(&[fp_with(0.3, 2.0)]).unwrap();
        assert_eq!((single.lo, single.hi), (0.3, 0.3));
        assert!(build_cone_interval(&[]).is_err());
    }

    #[test]
    fn invariance_checks() {
        let fps = [fp_with(0.26, 2.0), fp_with(0.41, 3.0)];
        let j = build_cone_interval(&fps).unwrap();
        assert!(check_cone_invariance(&j, &fps));
        let mut bad = fps.to_vec();
        bad.push(fp_with(0.3, j.midpoint()));
        assert!(!check_cone_invariance(&j, &bad));
        // touching an endpoint is rejected
        let touching = [fp_with(0.26, 0.41), fp_with(0.41, 3.0)];
        assert!(!check_cone_invariance(&j, &touching));
    }

    #[test]
    fn linear_h_case() {
        // b = 1, d = 0: leading coefficient of H vanishes
        let q = SlopeQuadruple {
            a: -1.4,
            b: 1.0,
            c: -0.3,
            d: 0.0,
        };
        let (q2, q1, q0) = q.norm_excess_coeffs();
        assert_eq!(q2, 0.0);
        let root = -q0 / q1;
        let j = ConeInterval {
            lo: 0.2,
            hi: 0.3,
            expansion_c: None,
        };
        let (roots, _, failure) = h_positive_on_interval(&q, &j);
        assert_eq!(roots, HRoots::Linear { root });
        // q1 = 2(ab + cd) = -2.8 < 0, so positivity needs root > hi
        assert!(root > 0.3);
        assert_eq!(failure, None);
        let j_bad = ConeInterval {
            lo: 0.2,
            hi: root + 0.1,
            expansion_c: None,
        };
        assert_eq!(
            h_positive_on_interval(&q, &j_bad).2,
            Some(ExpansionFailure::LinearRootFailed)
        );
    }

    #[test]
    fn no_real_roots_fails() {
        // H(m) = m² + 1 > 0 everywhere, yet the stage demands two roots.
        // M = [[sqrt 2, 0], [0, sqrt 2]] gives H = m² + 1.
        let r = 2f64.sqrt();
        let q = SlopeQuadruple {
            a: r,
            b: 0.0,
            c: 0.0,
            d: r,
        };
        let j = ConeInterval {
            lo: 0.0,
            hi: 1.0,
            expansion_c: None,
        };
        assert_eq!(
            h_positive_on_interval(&q, &j).2,
            Some(ExpansionFailure::NoRealRoots)
        );
    }

    #[test]
    fn min_norm_ratio_against_dense_scan() {
        let q = SlopeQuadruple {
            a: 0.7,
            b: -1.3,
            c: 2.1,
            d: 0.4,
        };
        let (lo, hi) = (-3.0, 2.5);
        let exact = min_norm_ratio(&q, lo, hi);
        let scan = (0..=200_000)
            .map(|i| lo + (hi - lo) * i as f64 / 200_000.0)
            .map(|m| q.norm_ratio(m))
            .fold(f64::INFINITY, f64::min);
        assert!(exact <= scan + 1e-12);
        assert!(scan - exact < 1e-8);
    }
}
