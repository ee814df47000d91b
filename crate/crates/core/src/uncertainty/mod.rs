//! Uncertainty sets with closed-form or numerically solved suprema:
//! Wasserstein balls (univariate and projected multivariate) and
//! mean-variance classes.

mod distortion;
mod meanvar;
mod wasserstein;

pub use distortion::Distortion;
pub use meanvar::{mv_table, pd_meanvar_coefficients, MeanVarianceClass, MvRow};
pub use wasserstein::{
    conjugate_exponent, has_moment, logit_levels, norm, MultiBenchmark, MultiWassersteinBall, WassersteinBall,
    WASSERSTEIN_GRID,
};
