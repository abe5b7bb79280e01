//! Every tolerance, sample size and significance level used by the checks.

/// Relative tolerance of the exact identities.
pub const IDENTITY_REL_TOL: f64 = 1e-12;
pub const IDENTITY_TRIALS: usize = 10_000;

/// Two-sided significance of every KS test.
pub const KS_LEVEL: f64 = 0.01;
pub const LAW_SAMPLES: usize = 100_000;
pub const BETA2_VARIANCE_REL_TOL: f64 = 0.02;

pub const OU_MOMENT_SAMPLES: usize = 100_000;
pub const OU_MOMENT_REL_TOL: f64 = 0.05;

/// `tau(h) = C_TAU * h`, frozen.
pub const C_TAU: f64 = 1.0;
/// Accepted `mass(h) / mass(h/2)` window.
pub const REFINEMENT_FACTOR: (f64, f64) = (1.5, 3.0);
/// Relative slack of the Gronwall envelope.
pub const GRONWALL_REL_TOL: f64 = 1e-2;

/// Allowed shortfall of the block-maximum decay exponent below `kappa p`.
pub const ESTZ_MARGIN: f64 = 0.2;
/// Minimum exceedances for a radius to enter the decay fit.
pub const ESTZ_MIN_COUNT: usize = 5;

/// The running mean of gamma must settle below `-nu lambda_1 / 4` before this
/// fraction of the horizon.
pub const GAMMA_ONSET_FRACTION: f64 = 0.5;

/// Median Feller ratios must stay within this factor across the sweep.
pub const FELLER_SPREAD: f64 = 10.0;

/// Largest fraction of blown-up runs an ensemble experiment tolerates.
pub const BLOWUP_MAX_FRACTION: f64 = 0.01;

pub const CALIBRATION_SAMPLES: usize = 20_000;
pub const ETA_TRIALS: usize = 10_000;
