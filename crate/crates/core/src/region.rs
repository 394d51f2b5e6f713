//! The forward-invariant polygon grown from a seed on the switching line.
//!
//! Starting from `X = (0, beta)` the forward orbit is followed until it
//! first lands in `x1 <= 0` (after `r` steps, at `Z`) and the backward orbit
//! until it first lands in `x1 >= 0` (after `ell` steps). The polygon is
//!
//! ```text
//! U, f^-(ell-2)(X), ..., f^-1(X), X, f(X), ..., f^(r-1)(X), Z
//! ```
//!
//! closed from `Z` back to `U`, where `V = f^-(ell-1)(X)`, `U` is where the
//! line through `V` and `f(V)` meets `x2 = 0`, and `Y` is where the line
//! through `Z` and `f^-1(Z)` meets `x1 = 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::{chi_l, Horizon};
use crate::geom::{
    bounding_box, is_simple_ring, line_at_x1, line_at_x2, orient, ring_boundary_distance,
    ring_contains, Point, Vec2,
};
use crate::map::BcnfParams;
use crate::words::{itineraries, WordSet};

/// Boundary tolerance of [`InvariantPolygon::contains`].
pub const CONTAINS_TOL: f64 = 1e-10;

/// Placement margins below this count as failures.
pub const PLACEMENT_MARGIN: f64 = 1e-12;

/// Iteration cap when evaluating escape times at `Y` and `Z`.
pub const P_MAX_CAP: usize = 10_000;

const VERTEX_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantPolygon {
    pub beta: f64,
    pub r: usize,
    pub ell: usize,
    /// Chain order, starting at `U` and ending at `Z`.
    pub vertices: Vec<Point>,
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub u: Point,
    pub v: Point,
    /// `f(V)`.
    pub v_image: Point,
    /// `f^-1(U) = (0, U1 - 1)`.
    pub u_preimage: Point,
}

impl InvariantPolygon {
    /// Inside or on the boundary, with tolerance [`CONTAINS_TOL`].
    pub fn contains(&self, p: Point) -> bool {
        ring_contains(&self.vertices, p, CONTAINS_TOL)
    }

    pub fn contains_with_tol(&self, p: Point, tol: f64) -> bool {
        ring_contains(&self.vertices, p, tol)
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        ring_boundary_distance(&self.vertices, p)
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        sample_ring(&self.vertices, rng, |_| true)
    }

    /// Uniform sample of the part with `x1 > 0`.
    pub fn sample_recurrent<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        sample_ring(&self.vertices, rng, |p| p.x1 > 0.0)
    }
}

fn sample_ring<R: Rng + ?Sized>(
    vertices: &[Point],
    rng: &mut R,
    accept: impl Fn(Point) -> bool,
) -> Point {
    let (lo, hi) = bounding_box(vertices);
    loop {
        let p = Vec2::new(rng.gen_range(lo.x1..=hi.x1), rng.gen_range(lo.x2..=hi.x2));
        if accept(p) && ring_contains(vertices, p, 0.0) {
            return p;
        }
    }
}

/// First forward index `r` with `(f^r X)_1 <= 0` and first backward index
/// `ell` with `(f^-ell X)_1 >= 0`.
pub fn find_escape_indices(
    m: &BcnfParams,
    beta: f64,
    r_max: usize,
    ell_max: usize,
) -> Result<(usize, usize)> {
    if !(beta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let x = Vec2::new(0.0, beta);
    let r = forward_escape(m, x, r_max).ok_or_else(|| {
        Error::FailureC1(format!(
            "no forward escape within {r_max} steps at beta = {beta}"
        ))
    })?;
    let ell = backward_escape(m, x, ell_max)?.ok_or_else(|| {
        Error::FailureC1(format!(
            "no backward escape within {ell_max} steps at beta = {beta}"
        ))
    })?;
    Ok((r, ell))
}

fn forward_escape(m: &BcnfParams, x: Point, cap: usize) -> Option<usize> {
    let mut p = x;
    for i in 1..=cap {
        p = m.apply(p);
        if p.x1 <= 0.0 {
            return Some(i);
        }
    }
    None
}

fn backward_escape(m: &BcnfParams, x: Point, cap: usize) -> Result<Option<usize>> {
    let mut p = x;
    for j in 1..=cap {
        p = m.apply_inverse(p)?;
        if p.x1 >= 0.0 {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

pub fn build_polygon(m: &BcnfParams, beta: f64, r: usize, ell: usize) -> Result<InvariantPolygon> {
    if r < 2 || ell < 2 {
        return Err(Error::DegenerateChain(format!(
            "need r, ell >= 2, got r = {r}, ell = {ell}"
        )));
    }
    let x = Vec2::new(0.0, beta);
    let mut forward = vec![x];
    for _ in 0..r {
        forward.push(m.apply(*forward.last().unwrap()));
    }
    let mut backward = vec![x];
    for _ in 0..ell - 1 {
        backward.push(m.apply_inverse(*backward.last().unwrap())?);
    }

    let z = forward[r];
    let z_pre = forward[r - 1];
    if z.distance(z_pre) <= VERTEX_MERGE_TOL {
        return Err(Error::DegenerateChain(
            "Z coincides with its preimage".into(),
        ));
    }
    let y = line_at_x1(z, z_pre, 0.0).ok_or_else(|| {
        Error::DegenerateChain("line through Z and its preimage is vertical".into())
    })?;

    let v = backward[ell - 1];
    let v_image = backward[ell - 2];
    let u = line_at_x2(v, v_image, 0.0)
        .ok_or_else(|| Error::DegenerateChain("line through V and f(V) is horizontal".into()))?;

    let mut vertices = Vec::with_capacity(ell + r);
    vertices.push(u);
    vertices.extend(backward[1..ell - 1].iter().rev());
    vertices.extend_from_slice(&forward[..r]);
    vertices.push(z);
    debug_assert_eq!(vertices.len(), ell + r);

    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a.distance(b) <= VERTEX_MERGE_TOL {
            return Err(Error::DegenerateChain(format!(
                "vertices {i} and {} coincide",
                (i + 1) % n
            )));
        }
    }
    if !vertices.iter().all(|p| p.is_finite()) {
        return Err(Error::DegenerateChain("non-finite vertex".into()));
    }
    if !is_simple_ring(&vertices) {
        return Err(Error::SelfIntersecting);
    }

    Ok(InvariantPolygon {
        beta,
        r,
        ell,
        vertices,
        x,
        y,
        z,
        u,
        v,
        v_image,
        u_preimage: Vec2::new(0.0, u.x1 - 1.0),
    })
}

/// Signed margins of the three placement conditions; each must exceed
/// [`PLACEMENT_MARGIN`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    /// `Y2 - (f^-1 U)_2`.
    pub y_above_u_preimage: f64,
    /// Height of `Z` over the line through `f^-1(U)` and `V`.
    pub z_above_line: f64,
    /// Distance-like margin of `Z` to the right of the directed line `V -> f(V)`.
    pub z_right_of_line: f64,
}

impl PlacementReport {
    pub fn holds(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn first_violation(&self) -> Option<&'static str> {
        if !(self.y_above_u_preimage > PLACEMENT_MARGIN) {
            Some("Y does not lie above f^-1(U)")
        } else if !(self.z_above_line > PLACEMENT_MARGIN) {
            Some("Z does not lie above the line through f^-1(U) and V")
        } else if !(self.z_right_of_line > PLACEMENT_MARGIN) {
            Some("Z does not lie right of the line from V to f(V)")
        } else {
            None
        }
    }
}

pub fn placement_report(poly: &InvariantPolygon) -> PlacementReport {
    let z_above_line = match line_at_x1(poly.u_preimage, poly.v, poly.z.x1) {
        Some(p) => poly.z.x2 - p.x2,
        None => f64::NAN,
    };
    PlacementReport {
        y_above_u_preimage: poly.y.x2 - poly.u_preimage.x2,
        z_above_line,
        z_right_of_line: -orient(poly.v, poly.v_image, poly.z),
    }
}

/// Stage C2.
pub fn check_invariance_conditions(_m: &BcnfParams, poly: &InvariantPolygon) -> bool {
    placement_report(poly).holds()
}

/// `max(chi_L(Y), chi_L(Z))`.
pub fn compute_p_max(m: &BcnfParams, poly: &InvariantPolygon) -> Result<usize> {
    let escape = |p: Point, name: &'static str| match chi_l(m, p, P_MAX_CAP)? {
        Horizon::Finite(k) => Ok(k),
        Horizon::Infinite => Err(Error::InconsistentEscape(name)),
    };
    Ok(escape(poly.y, "Y")?.max(escape(poly.z, "Z")?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapPolygon {
    pub epsilon: f64,
    pub vertices: Vec<Point>,
}

impl TrapPolygon {
    pub fn contains(&self, p: Point) -> bool {
        ring_contains(&self.vertices, p, CONTAINS_TOL)
    }

    /// Inside and at least `margin` away from the boundary.
    pub fn contains_strictly(&self, p: Point, margin: f64) -> bool {
        ring_contains(&self.vertices, p, 0.0) && ring_boundary_distance(&self.vertices, p) > margin
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        sample_ring(&self.vertices, rng, |_| true)
    }
}

/// Moves vertex `j` (1-based, `U` first) a distance `epsilon^j` toward the
/// origin.
pub fn shrink_to_trap(poly: &InvariantPolygon, epsilon: f64) -> Result<TrapPolygon> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let vertices = poly
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let j = i + 1;
            let scale = 1.0 - epsilon.powi(j as i32) / p.norm();
            if scale > 0.0 {
                Ok(p.scale(scale))
            } else {
                Err(Error::EpsilonTooLarge(epsilon, j))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrapPolygon { epsilon, vertices })
}

/// Hausdorff distance between two vertex rings, measured on their edges.
pub fn hausdorff_vertices(a: &[Point], b: &[Point]) -> f64 {
    let one_way = |p: &[Point], q: &[Point]| {
        p.iter()
            .map(|&x| ring_boundary_distance(q, x))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Steps until the orbit of `x` first returns to `x1 > 0`.
pub fn first_return_time(m: &BcnfParams, x: Point, cap: usize) -> Option<usize> {
    let mut p = x;
    for n in 1..=cap {
        p = m.apply(p);
        if p.x1 > 0.0 {
            return Some(n);
        }
    }
    None
}

/// Samples points of the polygon with `x1 > 0` and checks that every
/// itinerary up to the first return decomposes over `ws`.
pub fn verify_recurrence_sampled<R: Rng + ?Sized>(
    m: &BcnfParams,
    poly: &InvariantPolygon,
    ws: &WordSet,
    samples: usize,
    rng: &mut R,
) -> bool {
    (0..samples).all(|_| {
        let x = poly.sample_recurrent(rng);
        match first_return_time(m, x, P_MAX_CAP) {
            Some(n) => itineraries(m, x, n)
                .iter()
                .all(|w| ws.generates(w.symbols())),
            None => false,
        }
    })
}
