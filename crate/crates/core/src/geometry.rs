//! Plot-ready export of the construction at one seed value.

use serde::{Deserialize, Serialize};

use crate::certify::SearchConfig;
use crate::cone::{
    build_cone_interval, check_cone_expansion, slope_fixed_points, ExpansionCheck,
    SlopeFixedPoints, SlopeQuadruple,
};
use crate::error::{Error, Result};
use crate::escape::{build_ladder, Horizon, LadderEntry};
use crate::geom::Point;
use crate::map::BcnfParams;
use crate::region::{build_polygon, compute_p_max, find_escape_indices, placement_report};
use crate::words::WordSet;

/// Samples per curve.
pub const CURVE_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoints {
    #[serde(rename = "U")]
    pub u: Point,
    #[serde(rename = "V")]
    pub v: Point,
    #[serde(rename = "X")]
    pub x: Point,
    #[serde(rename = "Y")]
    pub y: Point,
    #[serde(rename = "Z")]
    pub z: Point,
    pub f_inv_u: Point,
    pub f_v: Point,
}

/// One slope map `G_j` and its norm excess `H_j`, sampled as
/// `[m, G(m), H(m)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeCurve {
    pub j: usize,
    pub word: String,
    pub fixed_points: Option<SlopeFixedPoints>,
    pub expansion: Option<ExpansionCheck>,
    pub samples: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryDocument {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "tau_R")]
    pub tau_r: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
    pub beta: f64,
    pub r: usize,
    pub ell: usize,
    pub p_max: usize,
    pub vertices: Vec<Point>,
    pub marked: MarkedPoints,
    pub ladder: Vec<LadderEntry>,
    #[serde(rename = "J_lo")]
    pub j_lo: Option<f64>,
    #[serde(rename = "J_hi")]
    pub j_hi: Option<f64>,
    pub slope_maps: Vec<SlopeCurve>,
}

/// Builds the document at a given seed. Seed failures surface as
/// `FailureC1` or `FailureC2`; later stages only leave gaps.
pub fn build_geometry(m: &BcnfParams, beta: f64, cfg: &SearchConfig) -> Result<GeometryDocument> {
    m.require_orientation_preserving()?;
    let (r, ell) = find_escape_indices(m, beta, cfg.r_max, cfg.ell_max)?;
    let poly = build_polygon(m, beta, r, ell).map_err(|e| Error::FailureC1(e.to_string()))?;
    if let Some(v) = placement_report(&poly).first_violation() {
        return Err(Error::FailureC2(v.to_string()));
    }
    let p_max = compute_p_max(m, &poly).map_err(|e| Error::FailureC2(e.to_string()))?;

    let ladder = build_ladder(m)?;
    let wanted = ell.max(p_max) + 1;
    let lines = match ladder.p_star {
        Horizon::Finite(p) => wanted.min(p),
        Horizon::Infinite => wanted,
    };
    let ladder_entries = (1..=lines).map(|p| ladder.line(p)).collect();

    let ws = WordSet::canonical(p_max);
    let quads: Vec<SlopeQuadruple> = ws
        .matrices(m)
        .into_iter()
        .map(SlopeQuadruple::from)
        .collect();
    let fps: Vec<Option<SlopeFixedPoints>> = quads
        .iter()
        .enumerate()
        .map(|(i, q)| slope_fixed_points(q, i + 1).ok())
        .collect();
    let all: Option<Vec<SlopeFixedPoints>> = fps.iter().copied().collect();
    let cone = all.as_deref().map(build_cone_interval).transpose()?;
    let expansion = cone.map(|j| check_cone_expansion(&j, &quads));

    let (lo, hi) = cone.map_or((-1.0, 1.0), |j| (j.lo - 0.5, j.hi + 0.5));
    let slope_maps = quads
        .iter()
        .enumerate()
        .map(|(i, q)| SlopeCurve {
            j: i + 1,
            word: ws.words()[i].to_string(),
            fixed_points: fps[i],
            expansion: expansion.as_ref().map(|e| e.per_matrix[i]),
            samples: (0..CURVE_SAMPLES)
                .map(|k| {
                    let mm = lo + (hi - lo) * k as f64 / (CURVE_SAMPLES - 1) as f64;
                    [mm, q.slope_map(mm), q.norm_excess(mm)]
                })
                .collect(),
        })
        .collect();

    Ok(GeometryDocument {
        tau_l: m.tau_l,
        tau_r: m.tau_r,
        delta_l: m.delta_l,
        delta_r: m.delta_r,
        beta,
        r,
        ell,
        p_max,
        marked: MarkedPoints {
            u: poly.u,
            v: poly.v,
            x: poly.x,
            y: poly.y,
            z: poly.z,
            f_inv_u: poly.u_preimage,
            f_v: poly.v_image,
        },
        vertices: poly.vertices,
        ladder: ladder_entries,
        j_lo: cone.map(|j| j.lo),
        j_hi: cone.map(|j| j.hi),
        slope_maps,
    })
}
