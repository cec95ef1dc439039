//! Trigonometric-series density estimation on [0,1], hold-out and
//! "incomplete" V-fold cross-validation criteria, the oracle scaling of
//! their argmin fluctuations, and the time-changed Brownian process that
//! approximates the rescaled criteria, together with a Monte Carlo
//! experiment harness for checking the theory at desk scale.

pub mod density;
pub mod error;
pub mod grid;
pub mod harness;
pub mod ks;
pub mod limit;
pub mod linalg;
pub mod oracle;
pub mod series;
pub mod special;
pub mod splits;

pub use density::{
    check_hypotheses, cov_psi, make_family, nt_window, CoefficientSequence, DensityModel, Family,
    HypothesisConstants, HypothesisReport, Tail,
};
pub use error::{Error, Result};
pub use grid::{GridFunction, UnitGridFunction};
pub use limit::{
    approx_process, bridge_integral, build_gn, cond_cov_z, e_stat, g1_from_theta,
    gaussian_coupling, kernel_of_time_change, monotone_correct, simulate_path, CorrectionMode,
    CovKernel, EpsSpec, GaussianCoupling, GaussianPath, TimeChange,
};
pub use oracle::{f_n_at, k_star, oracle_risk, scaling, RiskShape, ScalingSummary, Window};
pub use series::{
    empirical_coeffs, empirical_contrast, exact_excess_risk, EmpiricalCoefficients, Sample,
};
pub use splits::{
    cv_crit, cv_curve, holdout_crit, holdout_curve, make_scheme, rescaled_processes, select_k,
    RescaledSet, Selection, SplitScheme,
};
