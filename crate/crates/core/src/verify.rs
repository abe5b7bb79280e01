//! Named executable checks of the identities and inequalities.

use std::fmt::Write as _;

use log::{info, warn};
use rayon::prelude::*;

use crate::config::Setup;
use crate::energy::{self, ensemble_violation_mass, fit_adelta_constant, LedgerConstants, ViolationMass};
use crate::error::{Error, Result};
use crate::integrator::{simulate_on_path, IntegratorConfig, RunSpec, Scheme, TrajectoryRecord};
use crate::ou::{self, OuTrajectory};
use crate::rng::{domain, stream_id, RngStream};
use crate::spectral::{Bilinear, CoriolisOperator, Field, SparseTensor, SpectralModel};
use crate::stable::StableParams;
use crate::stats;
use crate::tolerances::*;

pub const CHECK_NAMES: [&str; 8] = [
    "poincare",
    "antisymmetry",
    "bsum",
    "ou_moments",
    "energy_chain",
    "estz",
    "gamma_negativity",
    "adelta_bound",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub metrics: Vec<(String, f64)>,
    pub seeds: Vec<u64>,
    pub constants: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(name: &str, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            metrics: Vec::new(),
            seeds: vec![seed],
            constants: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.push((key.to_string(), value));
        self
    }

    fn constant(&mut self, key: &str, value: f64) -> &mut Self {
        self.constants.push((key.to_string(), value));
        self
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(note.into());
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.status(), self.name);
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "  {k} = {v:.6e}");
        }
        for (k, v) in &self.constants {
            let _ = writeln!(s, "  const {k} = {v:.6e}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }
}

fn join_pairs(pairs: &[(String, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v:.9e}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// `check,status,residuals,seeds,constants`, one row per check.
pub fn report_csv(reports: &[CheckReport]) -> String {
    let mut s = String::from("check,status,residuals,seeds,constants\n");
    for r in reports {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.name,
            r.status(),
            join_pairs(&r.metrics),
            seeds.join(";"),
            join_pairs(&r.constants)
        );
    }
    s
}

/// Random field with normal coefficients and an overall scale drawn
/// log-uniformly from `[1e-3, 1e3]`.
fn random_field(n: usize, stream: &mut RngStream) -> Field {
    let scale = 10f64.powf(stream.uniform_in(-3.0, 3.0));
    Field::from_vec((0..n).map(|_| scale * stream.normal()).collect())
}

fn property_stream(seed: u64, check: u64) -> RngStream {
    RngStream::new(seed, stream_id(domain::PROPERTY, check, 0))
}

/// `|u|_V^2 >= lambda_1 |u|^2` and `|Au|^2 >= lambda_1 |u|_V^2`.
pub fn check_poincare(model: &SpectralModel, trials: usize, seed: u64) -> CheckReport {
    let basis = &model.basis;
    let l1 = basis.lambda1();
    let mut s = property_stream(seed, 1);
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let u = random_field(model.n(), &mut s);
        let h = u.norm_sq();
        let v = basis.pow_norm_sq(&u, 0.5);
        let a = basis.pow_norm_sq(&u, 1.0);
        if v < l1 * h * (1.0 - IDENTITY_REL_TOL) || a < l1 * v * (1.0 - IDENTITY_REL_TOL) {
            violations += 1;
        }
        worst = worst.min(v / (l1 * h)).min(a / (l1 * v));
    }
    let mut r = CheckReport::new("poincare", seed);
    r.metric("violations", violations as f64)
        .metric("worst_ratio", worst)
        .metric("trials", trials as f64)
        .constant("lambda1", l1);
    r.require(violations == 0, format!("{violations} Poincare violations"));
    r
}

/// `<B(u,v),v> = 0` and `<Cu,u> = 0` on random pairs.
pub fn check_antisymmetry(model: &SpectralModel, trials: usize, seed: u64) -> CheckReport {
    let mut s = property_stream(seed, 2);
    let n = model.n();
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_field(n, &mut s);
        let v = random_field(n, &mut s);
        let b = model.apply_b(&u, &v);
        let scale = b.norm() * v.norm();
        let rb = if scale > 0.0 { b.dot(&v).abs() / scale } else { b.dot(&v).abs() };
        let c = model.apply_c(&u);
        let scale = c.norm() * u.norm();
        let rc = if scale > 0.0 { c.dot(&u).abs() / scale } else { c.dot(&u).abs() };
        if rb > IDENTITY_REL_TOL || rc > IDENTITY_REL_TOL {
            violations += 1;
        }
        worst = worst.max(rb).max(rc);
    }
    let mut r = CheckReport::new("antisymmetry", seed);
    r.metric("violations", violations as f64)
        .metric("worst_relative", worst)
        .metric("trials", trials as f64);
    r.require(violations == 0, format!("{violations} antisymmetry violations"));
    r
}

/// `|<B(u,e_l),u>| <= eta |u|^2` for every noise mode `l`.
pub fn check_bsum(model: &SpectralModel, m: usize, eta: f64, trials: usize, seed: u64) -> CheckReport {
    let mut s = property_stream(seed, 3);
    let n = model.n();
    let mut violations = 0usize;
    let mut measured = 0.0f64;
    for _ in 0..trials {
        let u = random_field(n, &mut s);
        let usq = u.norm_sq();
        for l in 0..m {
            let val = model.trilinear(&u, &Field::unit(n, l), &u).abs();
            if val > eta * usq * (1.0 + IDENTITY_REL_TOL) {
                violations += 1;
            }
            if usq > 0.0 {
                measured = measured.max(val / usq);
            }
        }
    }
    let mut r = CheckReport::new("bsum", seed);
    r.metric("violations", violations as f64)
        .metric("measured_eta_lower", measured)
        .constant("eta_certified", eta);
    r.require(violations == 0, format!("{violations} bsum violations"));
    r
}

pub fn check_ou_moments(
    params: &StableParams,
    model: &SpectralModel,
    alpha: f64,
    nu: f64,
    p: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let rep = ou::moment_check(params, &model.basis, alpha, nu, p, n_samples, seed)?;
    let mut r = CheckReport::new("ou_moments", seed);
    let err = rep.max_rel_error();
    r.metric("max_rel_error", err)
        .metric("reference_moment", rep.reference_moment)
        .constant("p", p)
        .constant("beta", params.beta)
        .constant("alpha", alpha);
    for m in &rep.modes {
        r.metric(&format!("ratio_mode{}", m.mode), m.empirical / m.formula);
    }
    r.require(err <= OU_MOMENT_REL_TOL, format!("moment law off by {err:.3}"));
    Ok(r)
}

/// Everything an ensemble experiment needs.
#[derive(Clone, Debug)]
pub struct VerifyContext {
    pub model: SpectralModel,
    pub params: StableParams,
    pub nu: f64,
    pub alpha: f64,
    pub eta: f64,
    pub h: f64,
    pub horizon: f64,
    pub delta: f64,
    pub scheme: Scheme,
    pub runs: usize,
    pub u0: Field,
    /// Moment order for the OU and block-maximum checks.
    pub p: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl VerifyContext {
    /// Context for a configured setup; `runs` and `p` come from the
    /// `measure` section.
    pub fn from_setup(setup: &Setup) -> Result<Self> {
        Ok(Self {
            model: setup.model.clone(),
            params: setup.params.clone(),
            nu: setup.cfg.nu,
            alpha: setup.alpha,
            eta: setup.eta.certified,
            h: setup.cfg.h,
            horizon: setup.cfg.horizon,
            delta: setup.cfg.delta,
            scheme: setup.cfg.scheme,
            runs: setup.config.usize("measure.trajectories")?,
            u0: setup.u0.clone(),
            p: setup.config.f64("measure.p")?,
            seed: setup.seed,
            config_hash: setup.hash.clone(),
        })
    }

    pub fn config(&self, h: f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::new(h, self.horizon);
        cfg.nu = self.nu;
        cfg.delta = self.delta;
        cfg.scheme = self.scheme;
        cfg
    }

    fn spec<'a>(&'a self, cfg: &'a IntegratorConfig, seed: u64, trajectory: u64) -> RunSpec<'a> {
        RunSpec {
            cfg,
            model: &self.model,
            params: &self.params,
            alpha: self.alpha,
            eta: self.eta,
            seed,
            trajectory,
            config_hash: &self.config_hash,
        }
    }

    /// Runs `runs` trajectories at `h` and `h/2`, each pair driven by one OU
    /// path sampled at `h/2`. Blown-up pairs are dropped from both sides.
    pub fn refinement_pair(&self, seed: u64) -> Result<RefinementPair> {
        let (coarse_cfg, fine_cfg) = (self.config(self.h), self.config(self.h / 2.0));
        let out: Vec<Result<Option<(TrajectoryRecord, TrajectoryRecord)>>> = (0..self.runs as u64)
            .into_par_iter()
            .map(|traj| {
                let path = ou::simulate_ou(
                    &self.params,
                    &self.model.basis,
                    self.alpha,
                    self.nu,
                    self.h / 2.0,
                    self.horizon + self.h,
                    seed,
                    traj,
                )?;
                let run = |cfg: &IntegratorConfig, path: &OuTrajectory| {
                    simulate_on_path(&self.u0, &self.spec(cfg, seed, traj), path)
                };
                match (run(&coarse_cfg, &path), run(&fine_cfg, &path)) {
                    (Ok(c), Ok(f)) => Ok(Some((c, f))),
                    (Err(Error::BlowUp { .. }), _) | (_, Err(Error::BlowUp { .. })) => Ok(None),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                }
            })
            .collect();
        let mut coarse = Vec::new();
        let mut fine = Vec::new();
        let mut blow_ups = 0;
        for o in out {
            match o? {
                Some((c, f)) => {
                    coarse.push(c);
                    fine.push(f);
                }
                None => blow_ups += 1,
            }
        }
        if blow_ups > 0 {
            warn!("{blow_ups} of {} refinement pairs blew up", self.runs);
        }
        Ok(RefinementPair {
            coarse,
            fine,
            blow_ups,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RefinementPair {
    pub coarse: Vec<TrajectoryRecord>,
    pub fine: Vec<TrajectoryRecord>,
    pub blow_ups: usize,
}

impl RefinementPair {
    pub fn blowup_fraction(&self) -> f64 {
        self.blow_ups as f64 / (self.blow_ups + self.coarse.len()).max(1) as f64
    }
}

fn refinement_factor(coarse: f64, fine: f64) -> f64 {
    if fine > 0.0 {
        coarse / fine
    } else if coarse > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

fn in_window(x: f64) -> bool {
    (REFINEMENT_FACTOR.0..=REFINEMENT_FACTOR.1).contains(&x)
}

/// Noise-free linear run (`B = 0`, `C = 0`, `f = 0`) against the per-mode
/// closed forms `|v(t)|^2 = sum u0_l^2 e^{-2 nu lambda_l t}` and
/// `int_0^t |v|_V^2 = sum lambda_l u0_l^2 (1 - e^{-2 nu lambda_l t}) / (2 nu lambda_l)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearClosedForm {
    pub err_h: f64,
    pub err_h2: f64,
    pub integral_err_h: f64,
    pub integral_err_h2: f64,
    pub worst_dineq: f64,
    pub monotone: bool,
}

impl LinearClosedForm {
    pub fn order_ratio(&self) -> f64 {
        self.err_h / self.err_h2
    }

    pub fn integral_order_ratio(&self) -> f64 {
        self.integral_err_h / self.integral_err_h2
    }

    pub fn passed(&self) -> bool {
        in_window(self.order_ratio()) && in_window(self.integral_order_ratio()) && self.worst_dineq <= 0.0 && self.monotone
    }
}

pub fn linear_closed_form(ctx: &VerifyContext, horizon: f64) -> Result<LinearClosedForm> {
    let n = ctx.model.n();
    let basis = ctx.model.basis.clone();
    let model = SpectralModel::new(
        basis.clone(),
        Bilinear::Abstract(SparseTensor::zero(n)),
        CoriolisOperator::zero(n),
        Field::zeros(n),
    )?;
    let params = StableParams::new(ctx.params.beta, vec![0.0; ctx.params.m()])?;
    let u0 = if ctx.u0.norm() > 0.0 {
        ctx.u0.clone()
    } else {
        Field::from_vec(vec![1.0 / (n as f64).sqrt(); n])
    };
    let nu = ctx.nu;
    let lam = basis.lambda().to_vec();
    let exact_sq = |t: f64| -> f64 {
        lam.iter()
            .zip(u0.coeffs())
            .map(|(l, c)| c * c * (-2.0 * nu * l * t).exp())
            .sum()
    };
    let exact_int = |t: f64| -> f64 {
        lam.iter()
            .zip(u0.coeffs())
            .map(|(l, c)| l * c * c * (1.0 - (-2.0 * nu * l * t).exp()) / (2.0 * nu * l))
            .sum()
    };
    let run = |h: f64| -> Result<(f64, f64, f64, bool)> {
        let mut cfg = IntegratorConfig::new(h, horizon);
        cfg.nu = nu;
        cfg.delta = ctx.delta;
        cfg.scheme = ctx.scheme;
        let spec = RunSpec {
            cfg: &cfg,
            model: &model,
            params: &params,
            alpha: 0.0,
            eta: 0.0,
            seed: ctx.seed,
            trajectory: 0,
            config_hash: &ctx.config_hash,
        };
        let path = ou::simulate_ou(&params, &basis, 0.0, nu, h, horizon + h, ctx.seed, 0)?;
        let rec = simulate_on_path(&u0, &spec, &path)?;
        let err = rec
            .ledger
            .iter()
            .map(|r| (r.v_sq - exact_sq(r.t)).abs())
            .fold(0.0, f64::max);
        let ints = energy::time_integral_series(&rec, 0);
        let ierr = ints
            .iter()
            .enumerate()
            .map(|(i, c)| (c.integral / nu - exact_int(rec.times[i + 1])).abs())
            .fold(0.0, f64::max);
        let worst = energy::violation_mass(&rec, 0.0).worst();
        let monotone = rec.ledger.windows(2).all(|w| w[1].v_sq <= w[0].v_sq);
        Ok((err, ierr, worst, monotone))
    };
    let (e1, i1, w1, m1) = run(ctx.h)?;
    let (e2, i2, w2, m2) = run(ctx.h / 2.0)?;
    Ok(LinearClosedForm {
        err_h: e1,
        err_h2: e2,
        integral_err_h: i1,
        integral_err_h2: i2,
        worst_dineq: w1.max(w2),
        monotone: m1 && m2,
    })
}

/// Constants that drop every noise and forcing term from the ledger; the
/// chain must then be violated.
pub fn broken_constants(k: &LedgerConstants) -> LedgerConstants {
    LedgerConstants {
        eta: 0.0,
        c: 0.0,
        ..*k
    }
}

fn push_masses(r: &mut CheckReport, tag: &str, m: &ViolationMass) {
    r.metric(&format!("mass_dineq_{tag}"), m.dineq)
        .metric(&format!("mass_ineq_{tag}"), m.ineq)
        .metric(&format!("mass_intineq_{tag}"), m.intineq)
        .metric(&format!("worst_dineq_{tag}"), m.worst_dineq)
        .metric(&format!("worst_ineq_{tag}"), m.worst_ineq)
        .metric(&format!("worst_intineq_{tag}"), m.worst_intineq);
}

/// Refinement study of the differential, Gronwall and time-integral
/// inequalities at `h` and `h/2`, the linear closed-form case, and a negative
/// control with broken constants.
pub fn check_energy_chain(ctx: &VerifyContext) -> Result<CheckReport> {
    let pair = ctx.refinement_pair(ctx.seed)?;
    let mut r = CheckReport::new("energy_chain", ctx.seed);
    let tau_h = C_TAU * ctx.h;
    let mc = ensemble_violation_mass(&pair.coarse, tau_h);
    let mf = ensemble_violation_mass(&pair.fine, tau_h / 2.0);
    push_masses(&mut r, "h", &mc);
    push_masses(&mut r, "h2", &mf);
    let factors = [
        ("dineq", refinement_factor(mc.dineq, mf.dineq)),
        ("ineq", refinement_factor(mc.ineq, mf.ineq)),
        ("intineq", refinement_factor(mc.intineq, mf.intineq)),
    ];
    for (name, f) in factors {
        r.metric(&format!("factor_{name}"), f);
        if f.is_nan() {
            r.require(false, format!("{name}: no violations at h or h/2, refinement factor undefined"));
        } else {
            r.require(in_window(f), format!("{name}: refinement factor {f:.3} outside {REFINEMENT_FACTOR:?}"));
        }
    }
    r.require(mc.worst() <= tau_h, format!("worst residual {:.3e} above tau(h)={tau_h:.1e}", mc.worst()));

    let lin = linear_closed_form(ctx, ctx.horizon.min(1.0))?;
    r.metric("linear_order_ratio", lin.order_ratio())
        .metric("linear_integral_order_ratio", lin.integral_order_ratio())
        .metric("linear_err_h", lin.err_h)
        .metric("linear_worst_dineq", lin.worst_dineq);
    r.require(lin.passed(), "linear closed-form case not first order or inequality violated");

    let k = pair.coarse.first().map(|p| p.meta.constants).unwrap_or_else(|| {
        LedgerConstants::new(ctx.model.basis.lambda1(), ctx.eta, ctx.alpha, ctx.nu)
    });
    let broken: Vec<TrajectoryRecord> = pair
        .coarse
        .iter()
        .map(|p| energy::with_constants(p, &ctx.model, broken_constants(&k)))
        .collect();
    let mb = ensemble_violation_mass(&broken, tau_h);
    r.metric("negative_control_mass_dineq", mb.dineq);
    r.require(mb.dineq > 0.0, "negative control shows no violation");

    r.metric("blow_ups", pair.blow_ups as f64);
    r.require(pair.blowup_fraction() <= BLOWUP_MAX_FRACTION, "too many blow-ups");
    r.constant("c", k.c)
        .constant("c_prime", k.c_prime)
        .constant("eta", k.eta)
        .constant("alpha", k.alpha)
        .constant("tau_h", tau_h)
        .constant("h", ctx.h)
        .constant("runs", ctx.runs as f64);
    info!("energy chain: factors {factors:?}");
    Ok(r)
}

/// Block maxima `eta_n = max_{t in [n, n+1)} |z(t)|` of an OU path sampled
/// at step `h`.
pub fn block_maxima(path: &OuTrajectory, blocks: usize) -> Vec<f64> {
    let per = (1.0 / path.h).round() as usize;
    (0..blocks)
        .map(|b| {
            (b * per..(b + 1) * per)
                .map(|i| path.at(i).iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// `-slope` of `log P(eta >= n^kappa)` against `log n`.
    pub exponent: f64,
    pub se: f64,
    pub points: usize,
    pub exceedance: Vec<(usize, f64)>,
}

/// Decay of the exceedance frequency `P(eta >= n^kappa)` over `n`, with the
/// frequency estimated from all (stationary) blocks. Radii with fewer than
/// `ESTZ_MIN_COUNT` exceedances are left out; no usable radius means the
/// tail is below resolution and the exponent is reported as infinite.
pub fn exceedance_decay(maxima: &[f64], kappa: f64) -> DecayFit {
    let sorted = stats::sorted_copy(maxima);
    let total = sorted.len() as f64;
    let mut exceedance = Vec::new();
    let mut n = 1usize;
    loop {
        let x = (n as f64).powf(kappa);
        let count = sorted.len() - sorted.partition_point(|v| *v < x);
        if count < ESTZ_MIN_COUNT {
            break;
        }
        exceedance.push((n, count as f64 / total));
        n += 1;
    }
    let xs: Vec<f64> = exceedance.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = exceedance.iter().map(|(_, q)| q.ln()).collect();
    let (exponent, se) = match xs.len() {
        0 | 1 => (f64::INFINITY, 0.0),
        2 => (-(ys[1] - ys[0]) / (xs[1] - xs[0]), f64::NAN),
        _ => {
            let (_, b, se) = stats::ols(&xs, &ys);
            (-b, se)
        }
    };
    DecayFit {
        exponent,
        se,
        points: xs.len(),
        exceedance,
    }
}

/// Block-maximum growth: the exceedance frequency of `{eta_n >= n^kappa}`
/// must decay at least like `n^{-(kappa p - margin)}`, `kappa = 2/p`.
pub fn check_estz(
    params: &StableParams,
    model: &SpectralModel,
    alpha: f64,
    nu: f64,
    p: f64,
    blocks: usize,
    h: f64,
    seed: u64,
) -> Result<CheckReport> {
    if !(p > 0.0 && p < params.beta) {
        return Err(Error::MomentDivergence { p, beta: params.beta });
    }
    let kappa = 2.0 / p;
    let path = ou::simulate_ou(params, &model.basis, alpha, nu, h, blocks as f64, seed, 0)?;
    let maxima = block_maxima(&path, blocks);
    let fit = exceedance_decay(&maxima, kappa);
    let target = kappa * p - ESTZ_MARGIN;
    let mut r = CheckReport::new("estz", seed);
    r.metric("decay_exponent", fit.exponent)
        .metric("decay_se", fit.se)
        .metric("fit_points", fit.points as f64)
        .metric("target", target)
        .metric("max_block", maxima.iter().copied().fold(0.0, f64::max))
        .constant("kappa", kappa)
        .constant("p", p)
        .constant("blocks", blocks as f64);
    r.require(fit.exponent >= target, format!("decay exponent {:.3} below {target:.3}", fit.exponent));
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaAverage {
    /// `(1/t) int_0^t gamma` on the grid, from the first step on.
    pub running_mean: Vec<f64>,
    /// First grid time after which the running mean stays below the
    /// threshold; `None` if it never settles.
    pub onset: Option<f64>,
    pub threshold: f64,
    pub final_mean: f64,
    /// `max_{t >= onset} (int_0^t gamma + nu lambda_1 t / 4)`, nonpositive when
    /// `exp(int gamma) <= exp(-nu lambda_1 t / 4)` past onset.
    pub exp_excess: f64,
}

pub fn gamma_running_average(path: &OuTrajectory, k: &LedgerConstants) -> GammaAverage {
    let gam: Vec<f64> = (0..path.len())
        .map(|i| k.gamma(path.at(i).iter().map(|x| x.abs()).sum()))
        .collect();
    let integral = energy::cumulative_trapezoid(gam.iter().copied(), path.h);
    let threshold = -k.nu * k.lambda1 / 4.0;
    let running_mean: Vec<f64> = (1..path.len()).map(|i| integral[i] / path.time(i)).collect();
    let mut onset_idx = None;
    for (i, m) in running_mean.iter().enumerate().rev() {
        if *m >= threshold {
            break;
        }
        onset_idx = Some(i);
    }
    let onset = onset_idx.map(|i| path.time(i + 1));
    let exp_excess = onset_idx.map_or(f64::INFINITY, |i0| {
        (i0 + 1..path.len())
            .map(|i| integral[i] - threshold * path.time(i))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    GammaAverage {
        final_mean: running_mean.last().copied().unwrap_or(f64::NAN),
        running_mean,
        onset,
        threshold,
        exp_excess,
    }
}

/// Running time-average of gamma settles below `-nu lambda_1 / 4`.
pub fn check_gamma_negativity(
    params: &StableParams,
    model: &SpectralModel,
    eta: f64,
    alpha: f64,
    nu: f64,
    horizon: f64,
    h: f64,
    seed: u64,
) -> Result<CheckReport> {
    let path = ou::simulate_ou(params, &model.basis, alpha, nu, h, horizon, seed, 0)?;
    let k = LedgerConstants::new(model.basis.lambda1(), eta, alpha, nu);
    let avg = gamma_running_average(&path, &k);
    let mut r = CheckReport::new("gamma_negativity", seed);
    r.metric("final_mean", avg.final_mean)
        .metric("threshold", avg.threshold)
        .metric("onset", avg.onset.unwrap_or(f64::INFINITY))
        .metric("exp_excess", avg.exp_excess)
        .constant("eta", eta)
        .constant("alpha", alpha)
        .constant("horizon", horizon);
    let settled = avg.onset.is_some_and(|t| t <= GAMMA_ONSET_FRACTION * horizon);
    r.require(settled, "running mean of gamma does not settle below -nu lambda_1/4");
    r.require(avg.exp_excess <= 0.0, "exp(int gamma) exceeds exp(-nu lambda_1 t/4) past onset");
    Ok(r)
}

/// Noise with `alpha = 0` scaled so that `4 eta sum_l E|z_l| = nu lambda_1`,
/// which puts the mean of gamma at `+nu lambda_1 / 2`.
pub fn gamma_control_params(params: &StableParams, model: &SpectralModel, eta: f64, nu: f64) -> Result<StableParams> {
    if eta <= 0.0 {
        return Err(Error::param("negative control needs eta > 0"));
    }
    let m = params.m();
    let mut s = RngStream::new(0, stream_id(domain::MONTE_CARLO, 4, 0));
    let (abs_mean, _) = crate::stable::abs_moment_mc(params.beta, 1.0, CALIBRATION_SAMPLES, &mut s)?;
    let lam = model.basis.lambda();
    let sum: f64 = (0..m)
        .map(|l| ou::stationary_scale(params.beta, 1.0, nu * lam[l]) * abs_mean)
        .sum();
    let sigma = nu * model.basis.lambda1() / (4.0 * eta * sum);
    StableParams::new(params.beta, vec![sigma; m])
}

/// `|A^delta v|` envelope with `K` fitted on a calibration ensemble and
/// frozen, then checked on fresh seeds at `h` and `h/2`.
pub fn check_adelta_bound(ctx: &VerifyContext) -> Result<CheckReport> {
    let calib = ctx.refinement_pair(ctx.seed)?;
    let fresh_seed = ctx.seed.wrapping_add(1);
    let fresh = ctx.refinement_pair(fresh_seed)?;
    let mut r = CheckReport::new("adelta_bound", ctx.seed);
    r.seeds.push(fresh_seed);
    let Some(k) = fit_adelta_constant(&calib.coarse) else {
        r.require(false, "no constant up to 1e12 dominates the calibration ensemble");
        return Ok(r);
    };
    let tau_h = C_TAU * ctx.h;
    let excess = |recs: &[TrajectoryRecord], tol: f64| -> (f64, f64) {
        let mut mass = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for rec in recs {
            for (b, a) in energy::adelta_series(rec, k) {
                let e = if b.is_infinite() { f64::NEG_INFINITY } else { a - b };
                worst = worst.max(e);
                mass += (e - tol).max(0.0) * rec.dt();
            }
        }
        (mass / recs.len().max(1) as f64, worst)
    };
    let (mass_h, worst_h) = excess(&fresh.coarse, tau_h);
    let (mass_h2, worst_h2) = excess(&fresh.fine, tau_h / 2.0);
    r.metric("k_fitted", k)
        .metric("mass_h", mass_h)
        .metric("mass_h2", mass_h2)
        .metric("worst_h", worst_h)
        .metric("worst_h2", worst_h2)
        .metric("blow_ups", (calib.blow_ups + fresh.blow_ups) as f64)
        .constant("delta", ctx.delta)
        .constant("tau_h", tau_h)
        .constant("runs", ctx.runs as f64);
    r.require(worst_h <= tau_h, format!("fresh-seed excess {worst_h:.3e} above tau(h)={tau_h:.1e}"));
    r.require(mass_h2 <= mass_h, "violation mass does not improve under refinement");
    Ok(r)
}

/// Number of unit blocks in the block-maximum check.
pub const ESTZ_BLOCKS: usize = 1000;
/// Sampling step of OU paths in the block-maximum and gamma checks.
pub const OU_PATH_STEP: f64 = 1e-2;

fn canonical(name: &str) -> &str {
    name.strip_prefix("check_").unwrap_or(name)
}

pub fn validate_names(names: &[String]) -> Result<()> {
    match names.iter().find(|n| !CHECK_NAMES.contains(&canonical(n))) {
        Some(n) => Err(Error::UnknownCheck(n.clone())),
        None => Ok(()),
    }
}

pub fn run_check(name: &str, ctx: &VerifyContext) -> Result<CheckReport> {
    let m = ctx.params.m();
    match canonical(name) {
        "poincare" => Ok(check_poincare(&ctx.model, IDENTITY_TRIALS, ctx.seed)),
        "antisymmetry" => Ok(check_antisymmetry(&ctx.model, IDENTITY_TRIALS, ctx.seed)),
        "bsum" => Ok(check_bsum(&ctx.model, m, ctx.eta, IDENTITY_TRIALS, ctx.seed)),
        "ou_moments" => check_ou_moments(
            &ctx.params,
            &ctx.model,
            ctx.alpha,
            ctx.nu,
            ctx.p,
            OU_MOMENT_SAMPLES,
            ctx.seed,
        ),
        "energy_chain" => check_energy_chain(ctx),
        "estz" => check_estz(
            &ctx.params,
            &ctx.model,
            ctx.alpha,
            ctx.nu,
            ctx.p,
            ESTZ_BLOCKS,
            OU_PATH_STEP,
            ctx.seed,
        ),
        "gamma_negativity" => {
            let mut r = check_gamma_negativity(
                &ctx.params,
                &ctx.model,
                ctx.eta,
                ctx.alpha,
                ctx.nu,
                ctx.horizon.max(100.0),
                OU_PATH_STEP,
                ctx.seed,
            )?;
            if ctx.eta > 0.0 {
                let control = gamma_control_params(&ctx.params, &ctx.model, ctx.eta, ctx.nu)?;
                let c = check_gamma_negativity(
                    &control,
                    &ctx.model,
                    ctx.eta,
                    0.0,
                    ctx.nu,
                    ctx.horizon.max(100.0),
                    OU_PATH_STEP,
                    ctx.seed,
                )?;
                r.metric("negative_control_passed", if c.passed { 1.0 } else { 0.0 });
                r.require(!c.passed, "negative control passed");
            }
            Ok(r)
        }
        "adelta_bound" => check_adelta_bound(ctx),
        other => Err(Error::UnknownCheck(other.to_string())),
    }
}

/// Runs the named checks in parallel, preserving order.
pub fn run_checks(names: &[String], ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    validate_names(names)?;
    names.par_iter().map(|n| run_check(n, ctx)).collect()
}
