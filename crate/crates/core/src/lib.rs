//! Direct and inverse scattering transforms of the Davey–Stewartson II
//! hierarchy, time evolution under the DS II and modified Novikov–Veselov
//! phases, and an exact operator calculus that re-derives the mNV nonlinearity
//! from the large-`k` expansions of the scattering solutions.
//!
//! The numerical side works on uniform square grids ([`Grid`]) holding complex
//! samples ([`ComplexField`]). Derivatives are spectral, the inverse operators
//! `∂̄⁻¹`, `∂⁻¹` are zero-padded FFT convolutions with the Cauchy kernel.
//!
//! ```
//! use mnv_core::{Grid, ComplexField, operators};
//! use num_complex::Complex64;
//!
//! let grid = Grid::new(6.0, 64).unwrap();
//! let f = ComplexField::from_fn(grid, |z| z * (-z.norm_sqr()).exp());
//! let back = operators::dbar_inv(&operators::dbar_z(&f));
//! assert!(back.max_abs_diff(&f) < 1e-3);
//! ```

pub mod checks;
pub mod error;
pub mod evolution;
mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod operators;
pub mod scattering;
pub mod solver;
pub mod symbolic;

pub use error::{Error, Result};
pub use field::{e_k, ComplexField};
pub use grid::Grid;
pub use solver::{Method, ScatteringSolution, SolverConfig};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/cauchy.md")]
    mod cauchy {}
    #[doc = include_str!("../../../book/src/dbar.md")]
    mod dbar {}
    #[doc = include_str!("../../../book/src/scattering.md")]
    mod scattering {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/symbolic.md")]
    mod symbolic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
