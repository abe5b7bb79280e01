//! Time integration of `v = u - z`:
//!
//! ```text
//! dv/dt = -nu A v - C (v + z) - B(u, u) + f + alpha z,     u = v + z
//! ```
//!
//! with `z` the stationary OU process (exact grid samples). The default
//! linear-implicit Euler inverts the diagonal `I + h nu A` exactly and treats
//! `B`, `C`, `f` and `z` explicitly; `u = v + z` is reconstructed at every
//! recorded time.

use crate::energy::{build_ledger, LedgerConstants, LedgerRow};
use crate::error::{Error, Result};
use crate::ou::{ou_stationary_init, OUState, OuStepper, OuStreams, OuTrajectory};
use crate::spectral::{Field, SpectralModel};
use crate::stable::StableParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    SemiImplicit,
    ExplicitEuler,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SemiImplicit => "semi_implicit",
            Scheme::ExplicitEuler => "explicit_euler",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_implicit" => Ok(Scheme::SemiImplicit),
            "explicit_euler" => Ok(Scheme::ExplicitEuler),
            other => Err(Error::param(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub h: f64,
    pub horizon: f64,
    pub nu: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
    /// Fractional power used for the `|A^delta .|` columns of the ledger.
    pub delta: f64,
}

impl IntegratorConfig {
    pub fn new(h: f64, horizon: f64) -> Self {
        Self {
            h,
            horizon,
            nu: 1.0,
            scheme: Scheme::SemiImplicit,
            record_stride: 1,
            delta: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::param(format!("time step h={} must be positive", self.h)));
        }
        if !(self.horizon >= self.h) {
            return Err(Error::param(format!("horizon T={} must be >= h={}", self.horizon, self.h)));
        }
        if !(self.nu > 0.0) {
            return Err(Error::param(format!("viscosity nu={} must be positive", self.nu)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::param(format!("delta={} outside [0, 1]", self.delta)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }

    /// Spacing of the recording grid.
    pub fn record_dt(&self) -> f64 {
        self.h * self.record_stride as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub trajectory: u64,
    pub config_hash: String,
    pub constants: LedgerConstants,
    pub cfg: IntegratorConfig,
}

/// Recorded samples of one path. `u[i] = v[i] + z[i]` coefficient-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub u: Vec<Field>,
    pub v: Vec<Field>,
    pub z: Vec<Vec<f64>>,
    pub ledger: Vec<LedgerRow>,
    pub meta: RunMeta,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the recorded time closest to `t`, if it lies on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let dt = self.meta.cfg.record_dt();
        let i = (t / dt).round();
        if i < 0.0 || i as usize >= self.len() || ((i * dt) - t).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::Coverage(format!(
                "time {t} is not on the recording grid [0, {}] with spacing {dt}",
                self.times.last().copied().unwrap_or(0.0)
            )));
        }
        Ok(i as usize)
    }

    pub fn dt(&self) -> f64 {
        self.meta.cfg.record_dt()
    }
}

/// One step of the `v` equation given the OU sample at the start of the step.
pub fn step_v(
    v: &Field,
    z_now: &[f64],
    cfg: &IntegratorConfig,
    model: &SpectralModel,
    alpha: f64,
) -> Result<Field> {
    let mut u = v.clone();
    u.add_head(z_now);
    let mut rhs = model.apply_b(&u, &u).scaled(-1.0);
    rhs.axpy(1.0, &model.forcing);
    {
        let r = rhs.coeffs_mut();
        let mut cu = vec![0.0; r.len()];
        model.coriolis.apply_into(u.coeffs(), &mut cu);
        for (ri, ci) in r.iter_mut().zip(&cu) {
            *ri -= ci;
        }
        for (ri, zi) in r.iter_mut().zip(z_now) {
            *ri += alpha * zi;
        }
    }
    let h = cfg.h;
    let lambda = model.basis.lambda();
    let next: Vec<f64> = match cfg.scheme {
        Scheme::SemiImplicit => v
            .coeffs()
            .iter()
            .zip(rhs.coeffs())
            .zip(lambda)
            .map(|((vi, ri), l)| (vi + h * ri) / (1.0 + h * cfg.nu * l))
            .collect(),
        Scheme::ExplicitEuler => v
            .coeffs()
            .iter()
            .zip(rhs.coeffs())
            .zip(lambda)
            .map(|((vi, ri), l)| vi + h * (ri - cfg.nu * l * vi))
            .collect(),
    };
    let next = Field::from_vec(next);
    if !next.is_finite() {
        return Err(Error::BlowUp {
            t: f64::NAN,
            partial: None,
        });
    }
    Ok(next)
}

/// Supplies the OU sample at each integrator step.
enum NoiseSource<'a> {
    Streaming {
        state: OUState,
        stepper: OuStepper,
        streams: OuStreams,
    },
    Path {
        path: &'a OuTrajectory,
        stride: usize,
        index: usize,
    },
}

impl NoiseSource<'_> {
    fn current(&self) -> &[f64] {
        match self {
            NoiseSource::Streaming { state, .. } => &state.z,
            NoiseSource::Path {
                path,
                stride,
                index,
            } => path.at(index * stride),
        }
    }

    fn advance(&mut self) {
        match self {
            NoiseSource::Streaming {
                state,
                stepper,
                streams,
            } => stepper.step(state, streams),
            NoiseSource::Path { index, .. } => *index += 1,
        }
    }
}

/// Everything `simulate` needs besides the initial condition.
#[derive(Clone, Copy, Debug)]
pub struct RunSpec<'a> {
    pub cfg: &'a IntegratorConfig,
    pub model: &'a SpectralModel,
    pub params: &'a StableParams,
    pub alpha: f64,
    pub eta: f64,
    pub seed: u64,
    pub trajectory: u64,
    pub config_hash: &'a str,
}

impl RunSpec<'_> {
    pub fn constants(&self) -> LedgerConstants {
        LedgerConstants::new(self.model.basis.lambda1(), self.eta, self.alpha, self.cfg.nu)
    }
}

/// Simulates one path from `u0` with the OU process started in its
/// stationary law and stepped exactly on the integrator grid.
pub fn simulate(u0: &Field, spec: &RunSpec<'_>) -> Result<TrajectoryRecord> {
    spec.cfg.validate()?;
    if u0.len() != spec.model.n() || !u0.is_finite() {
        return Err(Error::param("initial condition must be finite with N coefficients"));
    }
    let mut streams = OuStreams::new(spec.seed, spec.trajectory, spec.params.m());
    let state = ou_stationary_init(
        spec.params,
        &spec.model.basis,
        spec.alpha,
        spec.cfg.nu,
        &mut streams,
    )?;
    let stepper = OuStepper::new(&state, spec.params, spec.cfg.h)?;
    run(
        u0,
        spec,
        NoiseSource::Streaming {
            state,
            stepper,
            streams,
        },
    )
}

/// Simulates against a prerecorded OU path whose step divides `cfg.h`.
/// Used to run several step sizes on one noise realization.
pub fn simulate_on_path(u0: &Field, spec: &RunSpec<'_>, path: &OuTrajectory) -> Result<TrajectoryRecord> {
    spec.cfg.validate()?;
    let ratio = spec.cfg.h / path.h;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 {
        return Err(Error::param(format!(
            "integrator step {} is not a multiple of the path step {}",
            spec.cfg.h, path.h
        )));
    }
    if spec.cfg.steps() * stride >= path.len() {
        return Err(Error::Coverage("OU path shorter than the integration horizon".into()));
    }
    if path.m != spec.params.m() {
        return Err(Error::param("OU path mode count differs from the noise parameters"));
    }
    run(
        u0,
        spec,
        NoiseSource::Path {
            path,
            stride,
            index: 0,
        },
    )
}

fn run(u0: &Field, spec: &RunSpec<'_>, mut noise: NoiseSource<'_>) -> Result<TrajectoryRecord> {
    let cfg = spec.cfg;
    let steps = cfg.steps();
    let cap = steps / cfg.record_stride + 1;
    let mut times = Vec::with_capacity(cap);
    let mut us = Vec::with_capacity(cap);
    let mut vs = Vec::with_capacity(cap);
    let mut zs = Vec::with_capacity(cap);

    let mut v = u0.clone();
    for (vi, zi) in v.coeffs_mut().iter_mut().zip(noise.current()) {
        *vi -= zi;
    }
    let mut push = |t: f64, v: &Field, z: &[f64]| {
        let mut u = v.clone();
        u.add_head(z);
        times.push(t);
        us.push(u);
        vs.push(v.clone());
        zs.push(z.to_vec());
    };
    push(0.0, &v, noise.current());

    let meta = RunMeta {
        seed: spec.seed,
        trajectory: spec.trajectory,
        config_hash: spec.config_hash.to_string(),
        constants: spec.constants(),
        cfg: cfg.clone(),
    };
    let mut failure = None;
    for n in 0..steps {
        match step_v(&v, noise.current(), cfg, spec.model, spec.alpha) {
            Ok(next) => v = next,
            Err(_) => {
                failure = Some(n as f64 * cfg.h);
                break;
            }
        }
        noise.advance();
        if (n + 1) % cfg.record_stride == 0 {
            push((n + 1) as f64 * cfg.h, &v, noise.current());
        }
    }
    let ledger = build_ledger(&vs, &zs, spec.model, &meta.constants, cfg);
    let record = TrajectoryRecord {
        times,
        u: us,
        v: vs,
        z: zs,
        ledger,
        meta,
    };
    match failure {
        Some(t) => Err(Error::BlowUp {
            t,
            partial: Some(Box::new(record)),
        }),
        None => Ok(record),
    }
}
