//! Chaos certificates for the two-dimensional border-collision normal form.
//!
//! The pipeline runs [`map`] → [`escape`] → [`region`] → [`cone`] →
//! [`certify`]. [`sweep`] runs it over parameter grids and [`geometry`]
//! exports the intermediate objects for plotting.
//!
//! ```
//! use pwl_chaos::certify::{certify, SearchConfig};
//! use pwl_chaos::map::BcnfParams;
//!
//! let cert = certify(&BcnfParams::with_delta(0.7, -1.4, 0.3), &SearchConfig::default()).unwrap();
//! assert!(cert.chi_chaos);
//! ```

pub mod certify;
pub mod cone;
pub mod error;
pub mod escape;
pub mod geom;
pub mod geometry;
pub mod map;
pub mod region;
pub mod sweep;
pub mod words;

// Book chapters are compiled as doctests so the snippets cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/map.md")]
    mod map {}
    #[doc = include_str!("../../../book/src/escape.md")]
    mod escape {}
    #[doc = include_str!("../../../book/src/polygon.md")]
    mod polygon {}
    #[doc = include_str!("../../../book/src/cones.md")]
    mod cones {}
    #[doc = include_str!("../../../book/src/certificate.md")]
    mod certificate {}
    #[doc = include_str!("../../../book/src/sweep.md")]
    mod sweep {}
}
