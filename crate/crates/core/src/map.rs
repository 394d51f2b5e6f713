//! The two-dimensional border-collision normal form
//!
//! ```text
//! f(x) = A_L x + b   if x1 <= 0
//!        A_R x + b   if x1 >= 0,      A_J = [[tau_J, 1], [-delta_J, 0]],  b = (1, 0)
//! ```
//!
//! together with its inverse, the reduction of a general continuous
//! two-piece affine map to this form, and the one-sided tangent dynamics
//! used for Lyapunov exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point, Vec2};
use crate::words::Symbol;

/// Half-width of the band around the switching line `x1 = 0` inside which a
/// point is treated as lying on it.
pub const SIGMA_TOL: f64 = 1e-12;

/// Steps between renormalizations of the tangent vector.
pub const RENORM_INTERVAL: usize = 32;

const TRANSLATION: Vec2 = Vec2::new(1.0, 0.0);

/// The four normal-form parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcnfParams {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "tau_R")]
    pub tau_r: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
}

impl BcnfParams {
    pub const fn new(tau_l: f64, tau_r: f64, delta_l: f64, delta_r: f64) -> Self {
        Self {
            tau_l,
            tau_r,
            delta_l,
            delta_r,
        }
    }

    /// Parameters with `delta_L = delta_R = delta`.
    pub const fn with_delta(tau_l: f64, tau_r: f64, delta: f64) -> Self {
        Self::new(tau_l, tau_r, delta, delta)
    }

    pub fn a_l(&self) -> Mat2 {
        Mat2::new(self.tau_l, 1.0, -self.delta_l, 0.0)
    }

    pub fn a_r(&self) -> Mat2 {
        Mat2::new(self.tau_r, 1.0, -self.delta_r, 0.0)
    }

    pub fn matrix(&self, s: Symbol) -> Mat2 {
        match s {
            Symbol::L => self.a_l(),
            Symbol::R => self.a_r(),
        }
    }

    pub fn translation(&self) -> Vec2 {
        TRANSLATION
    }

    /// First column of `A_R - A_L`; the second column is always zero.
    pub fn zeta(&self) -> Vec2 {
        Vec2::new(self.tau_r - self.tau_l, -self.delta_r + self.delta_l)
    }

    /// Rejects anything outside `delta_L > 0`, `delta_R > 0`.
    pub fn require_orientation_preserving(&self) -> Result<()> {
        if self.delta_l > 0.0
            && self.delta_r > 0.0
            && self.tau_l.is_finite()
            && self.tau_r.is_finite()
        {
            Ok(())
        } else {
            Err(Error::InvalidRegime(self.delta_l, self.delta_r))
        }
    }

    pub fn apply(&self, x: Point) -> Point {
        if x.x1 <= 0.0 {
            self.apply_left(x)
        } else {
            self.apply_right(x)
        }
    }

    /// `f_L(x) = A_L x + b`, regardless of the side of `x`.
    pub fn apply_left(&self, x: Point) -> Point {
        Vec2::new(self.tau_l * x.x1 + x.x2 + 1.0, -self.delta_l * x.x1)
    }

    /// `f_R(x) = A_R x + b`, regardless of the side of `x`.
    pub fn apply_right(&self, x: Point) -> Point {
        Vec2::new(self.tau_r * x.x1 + x.x2 + 1.0, -self.delta_r * x.x1)
    }

    pub fn iterate(&self, x: Point, n: usize) -> Point {
        (0..n).fold(x, |p, _| self.apply(p))
    }

    /// The unique preimage of `y`.
    ///
    /// Each affine piece is inverted and the candidate whose first
    /// coordinate lies on that piece's side of the switching line is kept.
    pub fn apply_inverse(&self, y: Point) -> Result<Point> {
        let det_product = self.delta_l * self.delta_r;
        if !(det_product > 0.0) {
            return Err(Error::NotInvertible(det_product));
        }
        let left = Self::invert_piece(self.tau_l, self.delta_l, y);
        if left.x1 <= 0.0 {
            return Ok(left);
        }
        Ok(Self::invert_piece(self.tau_r, self.delta_r, y))
    }

    fn invert_piece(tau: f64, delta: f64, y: Point) -> Point {
        let x1 = -y.x2 / delta;
        Vec2::new(x1, y.x1 - 1.0 - tau * x1)
    }

    pub fn iterate_inverse(&self, y: Point, n: usize) -> Result<Point> {
        (0..n).try_fold(y, |p, _| self.apply_inverse(p))
    }

    /// One step of the tangent map `(x, v) -> (f(x), A_{gamma(x, v)} v)`.
    pub fn tangent_step(&self, s: TangentState) -> TangentState {
        let a = self.matrix(gamma(s));
        TangentState {
            x: self.apply(s.x),
            v: a * s.v,
        }
    }

    /// Finite-time Lyapunov estimate `(1/n) ln(|v_n| / |v_0|)`.
    pub fn lyapunov_estimate(&self, s: TangentState, n: usize) -> Result<f64> {
        if s.v == Vec2::ZERO || !s.v.is_finite() {
            return Err(Error::DegenerateTangent);
        }
        if n == 0 {
            return Err(Error::InvalidConfig(
                "lyapunov_estimate needs n >= 1".into(),
            ));
        }
        let mut log_growth = -s.v.norm().ln();
        let mut state = s;
        for k in 1..=n {
            state = self.tangent_step(state);
            if k % RENORM_INTERVAL == 0 || k == n {
                let norm = state.v.norm();
                if norm == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                log_growth += norm.ln();
                state.v = state.v.scale(1.0 / norm);
            }
        }
        Ok(log_growth / n as f64)
    }
}

/// A point of the tangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentState {
    pub x: Point,
    pub v: Vec2,
}

impl TangentState {
    pub fn new(x: Point, v: Vec2) -> Self {
        Self { x, v }
    }
}

/// Symbol of the piece governing the one-sided derivative at `(x, v)`.
pub fn gamma(s: TangentState) -> Symbol {
    gamma_tol(s, SIGMA_TOL)
}

pub fn gamma_tol(s: TangentState, tol: f64) -> Symbol {
    if s.x.x1 < -tol {
        Symbol::L
    } else if s.x.x1 > tol {
        Symbol::R
    } else if s.v.x1 < 0.0 {
        Symbol::L
    } else {
        Symbol::R
    }
}

/// Symbols compatible with the position of `x`; both on the switching line.
pub fn gamma_set(x: Point) -> &'static [Symbol] {
    gamma_set_tol(x, SIGMA_TOL)
}

pub fn gamma_set_tol(x: Point, tol: f64) -> &'static [Symbol] {
    if x.x1 < -tol {
        &[Symbol::L]
    } else if x.x1 > tol {
        &[Symbol::R]
    } else {
        &[Symbol::L, Symbol::R]
    }
}

/// A general continuous planar map, affine on each side of `x1 = 0`:
///
/// ```text
/// g(x) = [[a_J, b], [c_J, d]] x + (p, q)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPwlMap {
    pub a_l: f64,
    pub a_r: f64,
    pub b: f64,
    pub c_l: f64,
    pub c_r: f64,
    pub d: f64,
    pub p: f64,
    pub q: f64,
}

impl GeneralPwlMap {
    pub fn apply(&self, x: Point) -> Point {
        let (a, c) = if x.x1 <= 0.0 {
            (self.a_l, self.c_l)
        } else {
            (self.a_r, self.c_r)
        };
        Vec2::new(
            a * x.x1 + self.b * x.x2 + self.p,
            c * x.x1 + self.d * x.x2 + self.q,
        )
    }

    /// `xi = (1 - d) p + b q`; zero exactly when the point where the image
    /// of the switching line crosses it is fixed.
    pub fn xi(&self) -> f64 {
        (1.0 - self.d) * self.p + self.b * self.q
    }

    /// Reduce to normal form. The returned coordinate change `h` satisfies
    /// `h(g(x)) = f(h(x))` for the returned parameters `f`.
    pub fn normalize(&self) -> Result<Normalized> {
        if self.b == 0.0 {
            return Err(Error::DegenerateMap(
                "b = 0: the image of the switching line does not cross it once",
            ));
        }
        let xi = self.xi();
        if xi == 0.0 {
            return Err(Error::DegenerateMap(
                "xi = 0: the switching-line crossing point is a fixed point",
            ));
        }
        let left = (self.a_l + self.d, self.a_l * self.d - self.b * self.c_l);
        let right = (self.a_r + self.d, self.a_r * self.d - self.b * self.c_r);
        let ((tau_l, delta_l), (tau_r, delta_r)) = if xi > 0.0 {
            (left, right)
        } else {
            (right, left)
        };
        Ok(Normalized {
            params: BcnfParams::new(tau_l, tau_r, delta_l, delta_r),
            change: CoordinateChange {
                matrix: Mat2::new(1.0 / xi, 0.0, -self.d / xi, self.b / xi),
                offset: Vec2::new(0.0, (self.d * self.p - self.b * self.q) / xi),
            },
        })
    }
}

/// Shorthand for [`GeneralPwlMap::normalize`] returning only the parameters.
pub fn normalize_to_bcnf(g: &GeneralPwlMap) -> Result<BcnfParams> {
    g.normalize().map(|n| n.params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub params: BcnfParams,
    pub change: CoordinateChange,
}

/// Affine change of variables `x ↦ M x + o`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateChange {
    pub matrix: Mat2,
    pub offset: Vec2,
}

impl CoordinateChange {
    pub fn apply(&self, x: Point) -> Point {
        self.matrix * x + self.offset
    }
}
