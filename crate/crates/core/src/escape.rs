//! Preimages of the switching line under the left half-map and the
//! partition of the closed left half-plane by escape time.
//!
//! The line `f_L^{-p}(Σ)` is `x2 = m_p x1 + c_p` with
//!
//! ```text
//! m_1 = -tau_L,  c_1 = -1,
//! m_{p+1} = -delta_L / m_p - tau_L,   c_{p+1} = -c_p / m_p - 1.
//! ```
//!
//! A point of `x1 <= 0` lying between the lines `p` and `p - 1` needs exactly
//! `p` applications of `f_L` to reach `x1 > 0`. The escape horizon `p*` is
//! the first index with `m_p >= 0`; past it the last region extends to
//! infinity. When `tau_L >= 2 sqrt(delta_L)` the slopes converge without
//! ever turning non-negative and the region below the limiting line never
//! escapes.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::map::BcnfParams;

/// Ladder entries kept by default; further lines are generated on demand.
pub const DEFAULT_MAX_LADDER: usize = 64;

/// Band inside which a point is snapped onto a preimage line.
pub const LINE_SNAP_TOL: f64 = 1e-12;

/// Iteration guard for recurrences and escape-time loops.
const ITERATION_GUARD: usize = 1_000_000;

/// A count that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(p) => Some(p),
            Horizon::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Horizon::Infinite)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(p) => write!(f, "{p}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

/// One preimage line `x2 = slope * x1 + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub p: usize,
    pub slope: f64,
    pub intercept: f64,
}

impl LadderEntry {
    /// Signed vertical offset of `x` above the line, snapped to zero within
    /// [`LINE_SNAP_TOL`].
    pub fn offset(&self, x: Point) -> f64 {
        let d = x.x2 - (self.slope * x.x1 + self.intercept);
        if d.abs() <= LINE_SNAP_TOL {
            0.0
        } else {
            d
        }
    }

    fn next(&self, m: &BcnfParams) -> LadderEntry {
        LadderEntry {
            p: self.p + 1,
            slope: -m.delta_l / self.slope - m.tau_l,
            intercept: -self.intercept / self.slope - 1.0,
        }
    }
}

/// Limit of the preimage lines when `p*` is infinite.
///
/// The slopes always converge to `m_inf`. The intercepts converge to
/// `c_inf = -m_inf / (m_inf + 1)` only when `m_inf < -1`; otherwise they
/// decrease without bound, every point of the left half-plane eventually
/// escapes and `intercept` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderLimit {
    pub slope: f64,
    pub intercept: Option<f64>,
}

/// Region of the closed left half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `D_p`: exactly `p` left iterations to escape.
    D(usize),
    /// The forward-invariant set below the limiting line (only when `p*` is
    /// infinite).
    CoreE,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageLadder {
    params: BcnfParams,
    pub entries: Vec<LadderEntry>,
    pub p_star: Horizon,
    /// `arccos(tau_L / (2 sqrt(delta_L)))`, when `0 < tau_L < 2 sqrt(delta_L)`.
    pub phi_angle: Option<f64>,
    /// Limiting line of the ladder, when `p*` is infinite.
    pub limit: Option<LadderLimit>,
}

impl PreimageLadder {
    pub fn build(m: &BcnfParams) -> Result<Self> {
        Self::build_capped(m, DEFAULT_MAX_LADDER)
    }

    /// Build the ladder, storing at most `max_ladder` entries.
    pub fn build_capped(m: &BcnfParams, max_ladder: usize) -> Result<Self> {
        if m.delta_l <= 0.0 || !m.delta_l.is_finite() {
            return Err(Error::InvalidRegime(m.delta_l, m.delta_r));
        }
        let max_ladder = max_ladder.max(1);
        let closed = p_star_closed_form(m.tau_l, m.delta_l);
        let phi_angle = phi_angle(m.tau_l, m.delta_l);
        let mut entry = LadderEntry {
            p: 1,
            slope: -m.tau_l,
            intercept: -1.0,
        };
        let mut entries = vec![entry];

        if closed.is_infinite() {
            while entries.len() < max_ladder {
                entry = entry.next(m);
                entries.push(entry);
            }
            let disc = (m.tau_l * m.tau_l - 4.0 * m.delta_l).max(0.0);
            let m_inf = 0.5 * (-m.tau_l - disc.sqrt());
            let c_inf = (m_inf < -1.0).then(|| -m_inf / (m_inf + 1.0));
            return Ok(Self {
                params: *m,
                entries,
                p_star: Horizon::Infinite,
                phi_angle,
                limit: Some(LadderLimit {
                    slope: m_inf,
                    intercept: c_inf,
                }),
            });
        }

        while entry.slope < 0.0 {
            if entry.p >= ITERATION_GUARD {
                return Err(Error::CapExceeded(ITERATION_GUARD));
            }
            entry = entry.next(m);
            if entries.len() < max_ladder {
                entries.push(entry);
            }
        }
        Ok(Self {
            params: *m,
            entries,
            p_star: Horizon::Finite(entry.p),
            phi_angle,
            limit: None,
        })
    }

    pub fn params(&self) -> &BcnfParams {
        &self.params
    }

    /// Line `p` (1-based), regenerating past the stored entries if needed.
    pub fn line(&self, p: usize) -> LadderEntry {
        assert!(p >= 1, "preimage lines are indexed from 1");
        if let Some(e) = self.entries.get(p - 1) {
            return *e;
        }
        let mut e = *self.entries.last().expect("ladder is never empty");
        while e.p < p {
            e = e.next(&self.params);
        }
        e
    }

    /// Whether `x` lies in the never-escaping set below the limiting line.
    pub fn in_core(&self, x: Point) -> bool {
        match self.limit {
            Some(LadderLimit {
                slope,
                intercept: Some(c_inf),
            }) => x.x2 - (slope * x.x1 + c_inf) <= LINE_SNAP_TOL,
            _ => false,
        }
    }

    /// The `D_p` containing `x`, or [`Region::CoreE`].
    pub fn classify(&self, x: Point) -> Result<Region> {
        if x.x1 > 0.0 {
            return Err(Error::OutsideDomain(x.x1, x.x2));
        }
        if self.in_core(x) {
            return Ok(Region::CoreE);
        }
        let mut p = 1;
        loop {
            if let Horizon::Finite(ps) = self.p_star {
                if p == ps + 1 {
                    return Ok(Region::D(p));
                }
            }
            if self.line(p).offset(x) > 0.0 {
                return Ok(Region::D(p));
            }
            p += 1;
            if p > ITERATION_GUARD {
                return Err(Error::CapExceeded(ITERATION_GUARD));
            }
        }
    }
}

pub fn build_ladder(m: &BcnfParams) -> Result<PreimageLadder> {
    PreimageLadder::build(m)
}

pub fn classify_region(ladder: &PreimageLadder, x: Point) -> Result<Region> {
    ladder.classify(x)
}

fn phi_angle(tau_l: f64, delta_l: f64) -> Option<f64> {
    let s = 2.0 * delta_l.sqrt();
    (tau_l > 0.0 && tau_l < s).then(|| (tau_l / s).acos())
}

/// Escape horizon from the rotation angle of `A_L`.
pub fn p_star_closed_form(tau_l: f64, delta_l: f64) -> Horizon {
    if tau_l <= 0.0 {
        return Horizon::Finite(1);
    }
    match phi_angle(tau_l, delta_l) {
        Some(phi) => Horizon::Finite((PI / phi - 1.0).ceil().max(1.0) as usize),
        None => Horizon::Infinite,
    }
}

/// `m_p = -sqrt(delta_L) sin((p+1) phi) / sin(p phi)` for the complex
/// eigenvalue regime `0 < tau_L < 2 sqrt(delta_L)`.
pub fn m_p_explicit(p: usize, tau_l: f64, delta_l: f64) -> Result<f64> {
    let phi = phi_angle(tau_l, delta_l).ok_or_else(|| {
        Error::InvalidConfig("closed-form slope needs 0 < tau_L < 2 sqrt(delta_L)".into())
    })?;
    let denom = (p as f64 * phi).sin();
    if denom.abs() <= 1e-14 {
        return Err(Error::ResonantAngle(p));
    }
    Ok(-((p + 1) as f64 * phi).sin() / denom * delta_l.sqrt())
}

/// Smallest `p >= 1` with `(f_L^p(x))_1 > 0`, iterating `f_L` directly.
pub fn chi_l(m: &BcnfParams, x: Point, cap: usize) -> Result<Horizon> {
    if x.x1 > 0.0 {
        return Err(Error::OutsideDomain(x.x1, x.x2));
    }
    if p_star_closed_form(m.tau_l, m.delta_l).is_infinite() {
        let ladder = PreimageLadder::build_capped(m, 1)?;
        if ladder.in_core(x) {
            return Ok(Horizon::Infinite);
        }
    }
    let mut y = x;
    for p in 1..=cap {
        y = m.apply_left(y);
        if y.x1 > 0.0 {
            return Ok(Horizon::Finite(p));
        }
    }
    Err(Error::CapExceeded(cap))
}
