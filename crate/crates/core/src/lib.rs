//! Langevin sampling accelerated by a birth-death particle process and a
//! mode-discovering exploration component.
//!
//! The crate is organized bottom-up:
//!
//! * [`gaussian`]: Cholesky factors, multivariate normals, mixtures, kernel densities.
//! * [`target`]: the target-density interface and the benchmark targets.
//! * [`modes`]: quasi-Newton mode search and the mode atlas.
//! * [`sampler`]: Langevin, birth-death and mixture-proposal kernels, and the
//!   BDEC / BDLS / LEC / ULA drivers.
//! * [`diagnostics`]: expectations, exploration rate, marginal KL, grid χ².
//! * [`experiment`]: configs, presets, replicated runs and their output files.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod modes;
pub mod rng;
pub mod sampler;
pub mod target;

pub use error::{Error, Result};
