//! Krylov-Bogolyubov empirical measures, tightness, stabilization and the
//! Feller probe.

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{simulate, IntegratorConfig, RunSpec, TrajectoryRecord};
use crate::ou::BAND_Z;
use crate::rng::{domain, stream_id, RngStream, TRAJECTORY_LIMIT};
use crate::spectral::{Field, SpectralBasis};
use crate::stats;

pub const DEFAULT_COEFFS: usize = 8;

/// Number of radii in the tightness grid.
pub const TIGHTNESS_RADII: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `|u|`
    H,
    /// `|u|_V = |A^{1/2} u|`
    V,
    /// `|A^delta u|`
    Frac,
    Coeff(usize),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::H => "h".into(),
            Observable::V => "v".into(),
            Observable::Frac => "frac".into(),
            Observable::Coeff(i) => format!("c{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSchema {
    items: Vec<Observable>,
}

impl ObservableSchema {
    /// `h, v, frac, c0 .. c{k-1}`.
    pub fn standard(k: usize) -> Self {
        let mut items = vec![Observable::H, Observable::V, Observable::Frac];
        items.extend((0..k).map(Observable::Coeff));
        Self { items }
    }

    /// Parses a comma-separated list such as `h,frac,c0,c1`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut items = Vec::new();
        for tok in list.split(',').map(str::trim) {
            let ob = match tok {
                "h" => Observable::H,
                "v" => Observable::V,
                "frac" => Observable::Frac,
                _ => match tok.strip_prefix('c').map(str::parse::<usize>) {
                    Some(Ok(i)) => Observable::Coeff(i),
                    _ => return Err(Error::param(format!("unknown observable `{tok}` in `{list}`"))),
                },
            };
            if items.contains(&ob) {
                return Err(Error::param(format!("duplicate observable `{tok}`")));
            }
            items.push(ob);
        }
        if !items.contains(&Observable::Frac) {
            return Err(Error::param("observable list must contain `frac`"));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Observable] {
        &self.items
    }

    pub fn names(&self) -> Vec<String> {
        self.items.iter().map(Observable::name).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn frac_column(&self) -> usize {
        self.items.iter().position(|o| *o == Observable::Frac).unwrap_or(0)
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.items.iter().find(|o| matches!(o, Observable::Coeff(i) if *i >= n)) {
            Some(o) => Err(Error::param(format!("observable {} exceeds N={n}", o.name()))),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, u: &Field, basis: &SpectralBasis, delta: f64) -> Vec<f64> {
        self.items
            .iter()
            .map(|o| match o {
                Observable::H => u.norm(),
                Observable::V => basis.pow_norm_sq(u, 0.5).sqrt(),
                Observable::Frac => basis.pow_norm_sq(u, delta).sqrt(),
                Observable::Coeff(i) => u[*i],
            })
            .collect()
    }
}

/// Uniform-in-time law of the recorded states in `(burn_in, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub schema: ObservableSchema,
    pub delta: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub samples: Vec<Vec<f64>>,
}

impl EmpiricalMeasure {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// `|A^delta u|` of every sample.
    pub fn frac_values(&self) -> Vec<f64> {
        let c = self.schema.frac_column();
        self.samples.iter().map(|s| s[c]).collect()
    }

    /// Every `stride`-th sample, keeping at most `max` samples.
    pub fn thinned(&self, max: usize) -> EmpiricalMeasure {
        let stride = self.len().div_ceil(max.max(1)).max(1);
        fn pick<T: Clone>(v: &[T], stride: usize) -> Vec<T> {
            v.iter().step_by(stride).cloned().collect()
        }
        EmpiricalMeasure {
            schema: self.schema.clone(),
            delta: self.delta,
            horizon: self.horizon,
            burn_in: self.burn_in,
            times: pick(&self.times, stride),
            states: pick(&self.states, stride),
            samples: pick(&self.samples, stride),
        }
    }
}

/// Empirical measure of one record over `(burn_in, horizon]`.
pub fn build_mu_t(
    record: &TrajectoryRecord,
    basis: &SpectralBasis,
    schema: &ObservableSchema,
    burn_in: f64,
    horizon: f64,
    delta: f64,
) -> Result<EmpiricalMeasure> {
    build_mu_t_pooled(std::slice::from_ref(record), basis, schema, burn_in, horizon, delta)
}

/// Pooled measure over several records with equal weight per record.
pub fn build_mu_t_pooled(
    records: &[TrajectoryRecord],
    basis: &SpectralBasis,
    schema: &ObservableSchema,
    burn_in: f64,
    horizon: f64,
    delta: f64,
) -> Result<EmpiricalMeasure> {
    if records.is_empty() {
        return Err(Error::Coverage("no records to pool".into()));
    }
    if !(0.0 <= burn_in && burn_in < horizon) {
        return Err(Error::param(format!("burn_in {burn_in} must lie in [0, T={horizon})")));
    }
    schema.validate_for(basis.n())?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut count = None;
    for rec in records {
        let dt = rec.dt();
        let last = rec.times.last().copied().unwrap_or(0.0);
        if last < horizon - 1e-9 * dt.max(horizon) {
            return Err(Error::Coverage(format!(
                "record ends at t={last}, horizon T={horizon} requested"
            )));
        }
        // Grid points n dt with burn_in < n dt <= T.
        let first = (burn_in / dt + 1e-9).floor() as usize + 1;
        let end = (horizon / dt + 1e-9).floor() as usize;
        let kept = end + 1 - first;
        if *count.get_or_insert(kept) != kept {
            return Err(Error::Coverage("pooled records retain unequal sample counts".into()));
        }
        times.extend_from_slice(&rec.times[first..=end]);
        states.extend(rec.u[first..=end].iter().cloned());
    }
    if states.is_empty() {
        return Err(Error::Coverage("no recorded states in (burn_in, T]".into()));
    }
    let samples = states.par_iter().map(|u| schema.evaluate(u, basis, delta)).collect();
    Ok(EmpiricalMeasure {
        schema: schema.clone(),
        delta,
        horizon,
        burn_in,
        times,
        states,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessReport {
    pub p: f64,
    pub radii: Vec<f64>,
    /// `mu(|A^delta u| > R)`.
    pub tail_mass: Vec<f64>,
    /// `E|A^delta u|^p / R^p`.
    pub markov_bound: Vec<f64>,
    pub moment: f64,
    pub tail_exponent: f64,
    /// Half-width of the 99% band on `tail_exponent`.
    pub tail_exponent_band: f64,
    /// Radii used for the tail fit.
    pub fit_points: usize,
    /// All samples share one `|A^delta u|` value.
    pub degenerate: bool,
}

impl TightnessReport {
    pub fn markov_holds(&self) -> bool {
        self.tail_mass
            .iter()
            .zip(&self.markov_bound)
            .all(|(m, b)| *m <= b * (1.0 + 1e-12))
    }

    pub fn tail_nonincreasing(&self) -> bool {
        self.tail_mass.windows(2).all(|w| w[1] <= w[0])
    }

    /// `p_hat + band >= p`.
    pub fn tail_exponent_consistent(&self) -> bool {
        self.tail_exponent + self.tail_exponent_band >= self.p
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,tail_mass,markov_bound\n");
        for ((r, m), b) in self.radii.iter().zip(&self.tail_mass).zip(&self.markov_bound) {
            s.push_str(&format!("{r:.12e},{m:.12e},{b:.12e}\n"));
        }
        s
    }
}

/// Tail masses of `|A^delta u|` on a geometric radius grid from the median to
/// the largest sample, with the empirical Markov envelope and a log-log fit
/// of the upper tail.
pub fn tightness_report(mu: &EmpiricalMeasure, p: f64) -> Result<TightnessReport> {
    if p <= 0.0 {
        return Err(Error::param("tightness moment order must be positive"));
    }
    if mu.is_empty() {
        return Err(Error::Coverage("empty measure".into()));
    }
    let x = stats::sorted_copy(&mu.frac_values());
    let n = x.len() as f64;
    let moment = x.iter().map(|v| v.powf(p)).sum::<f64>() / n;
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let tail = |r: f64| (x.len() - x.partition_point(|v| *v <= r)) as f64 / n;

    if hi <= lo || hi <= 0.0 {
        let radii = if hi > 0.0 { vec![0.5 * hi, hi, 2.0 * hi] } else { vec![1.0] };
        let tail_mass = radii.iter().map(|r| tail(*r)).collect();
        let markov_bound = radii.iter().map(|r| moment / r.powf(p)).collect();
        return Ok(TightnessReport {
            p,
            radii,
            tail_mass,
            markov_bound,
            moment,
            tail_exponent: f64::INFINITY,
            tail_exponent_band: 0.0,
            fit_points: 0,
            degenerate: true,
        });
    }
    let r0 = stats::quantile_sorted(&x, 0.5).max(hi * 1e-6);
    let ratio = (hi / r0).powf(1.0 / (TIGHTNESS_RADII - 1) as f64);
    let radii: Vec<f64> = (0..TIGHTNESS_RADII).map(|i| r0 * ratio.powi(i as i32)).collect();
    let tail_mass: Vec<f64> = radii.iter().map(|r| tail(*r)).collect();
    let markov_bound = radii.iter().map(|r| moment / r.powf(p)).collect();

    // Fit on radii whose tail holds at least 10 samples and at most 10% mass.
    let (lx, ly): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&tail_mass)
        .filter(|(_, m)| **m * n >= 10.0 && **m <= 0.1)
        .map(|(r, m)| (r.ln(), m.ln()))
        .unzip();
    let (tail_exponent, band) = if lx.len() >= 3 {
        let (_, b, se) = stats::ols(&lx, &ly);
        (-b, BAND_Z * se)
    } else {
        warn!("tail fit has only {} usable radii", lx.len());
        (f64::NAN, f64::INFINITY)
    };
    Ok(TightnessReport {
        p,
        radii,
        tail_mass,
        markov_bound,
        moment,
        tail_exponent,
        tail_exponent_band: band,
        fit_points: lx.len(),
        degenerate: false,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_cross_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    // Row sums in parallel, total in fixed order so the result is bitwise
    // reproducible.
    let rows: Vec<f64> = a
        .par_iter()
        .map(|x| b.iter().map(|y| euclid(x, y)).sum::<f64>())
        .collect();
    let total: f64 = rows.iter().sum();
    total / (a.len() as f64 * b.len() as f64)
}

/// Energy distance `E|X-Y| - E|X-X'|/2 - E|Y-Y'|/2` between two sample
/// clouds (V-statistic), clamped at zero. Two point masses at distance `d`
/// give `d`.
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Coverage("energy distance of an empty cloud".into()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|x| x.len() != dim) {
        return Err(Error::SchemaMismatch("sample dimensions differ".into()));
    }
    let d = mean_cross_distance(a, b) - 0.5 * mean_cross_distance(a, a) - 0.5 * mean_cross_distance(b, b);
    Ok(d.max(0.0))
}

pub fn stabilization_distance(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<f64> {
    if mu1.schema != mu2.schema {
        return Err(Error::SchemaMismatch(format!(
            "{:?} vs {:?}",
            mu1.schema.names(),
            mu2.schema.names()
        )));
    }
    energy_distance(&mu1.samples, &mu2.samples)
}

/// Trajectory label derived from the bits of a state, so that resimulation
/// noise does not depend on sample order.
fn state_label(u: &Field) -> u64 {
    let mut h = Sha256::new();
    for c in u.coeffs() {
        h.update(c.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes")) & (TRAJECTORY_LIMIT - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceResidual {
    pub residual: f64,
    pub pushed: usize,
    pub blow_ups: usize,
}

/// Pushes every state of `mu` forward by time `shift` with fresh noise and
/// returns the energy distance between `mu` and the pushforward.
pub fn invariance_residual(mu: &EmpiricalMeasure, shift: f64, spec: &RunSpec<'_>) -> Result<InvarianceResidual> {
    let h = spec.cfg.h;
    let steps = (shift / h).round();
    if shift <= 0.0 || (steps * h - shift).abs() > 1e-9 * shift {
        return Err(Error::param(format!("shift {shift} must be a positive multiple of h={h}")));
    }
    let mut cfg = spec.cfg.clone();
    cfg.horizon = shift;
    cfg.record_stride = steps as usize;
    let basis = &spec.model.basis;
    let pushed: Vec<Option<Vec<f64>>> = mu
        .states
        .par_iter()
        .map(|u| {
            let run = RunSpec {
                cfg: &cfg,
                trajectory: state_label(u),
                ..*spec
            };
            match simulate(u, &run) {
                Ok(rec) => Some(mu.schema.evaluate(rec.u.last().expect("nonempty record"), basis, mu.delta)),
                Err(Error::BlowUp { .. }) => None,
                Err(e) => {
                    warn!("pushforward failed: {e}");
                    None
                }
            }
        })
        .collect();
    let blow_ups = pushed.iter().filter(|p| p.is_none()).count();
    let cloud: Vec<Vec<f64>> = pushed.into_iter().flatten().collect();
    if blow_ups > 0 {
        warn!("invariance residual: {blow_ups} of {} pushforwards blew up", mu.len());
    }
    Ok(InvarianceResidual {
        residual: energy_distance(&mu.samples, &cloud)?,
        pushed: cloud.len(),
        blow_ups,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FellerReport {
    pub radius: f64,
    pub t_eval: f64,
    pub pairs: usize,
    pub blow_ups: usize,
    pub max_distance: f64,
    pub median_distance: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

/// Distances at `t_eval` between the path from `u0` and paths from
/// `u0 + radius * w` for random unit directions `w`, all driven by one noise
/// realization.
pub fn feller_probe(
    u0: &Field,
    radius: f64,
    n_pairs: usize,
    t_eval: f64,
    spec: &RunSpec<'_>,
) -> Result<FellerReport> {
    if radius < 0.0 || n_pairs == 0 {
        return Err(Error::param("feller probe needs radius >= 0 and at least one pair"));
    }
    let mut cfg: IntegratorConfig = spec.cfg.clone();
    cfg.horizon = t_eval;
    cfg.record_stride = cfg.steps();
    let run = RunSpec { cfg: &cfg, ..*spec };
    let base = simulate(u0, &run)?;
    let u_base = base.u.last().expect("nonempty record").clone();
    let mut dir_stream = RngStream::new(spec.seed, stream_id(domain::PERTURBATION, spec.trajectory, 0));
    let starts: Vec<Field> = (0..n_pairs)
        .map(|_| {
            let w: Vec<f64> = (0..u0.len()).map(|_| dir_stream.normal()).collect();
            let w = Field::from_vec(w);
            let norm = w.norm();
            let mut u = u0.clone();
            u.axpy(radius / norm, &w);
            u
        })
        .collect();
    let dists: Vec<Option<f64>> = starts
        .par_iter()
        .map(|u| match simulate(u, &run) {
            Ok(rec) => Some((rec.u.last().expect("nonempty record") - &u_base).norm()),
            Err(_) => None,
        })
        .collect();
    let blow_ups = dists.iter().filter(|d| d.is_none()).count();
    let ok: Vec<f64> = dists.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::Coverage("every perturbed run blew up".into()));
    }
    let max_distance = ok.iter().copied().fold(0.0, f64::max);
    let median_distance = stats::median(&ok);
    let ratio = |d: f64| if radius > 0.0 { d / radius } else { 0.0 };
    info!("feller probe radius={radius:e}: median distance {median_distance:e}");
    Ok(FellerReport {
        radius,
        t_eval,
        pairs: ok.len(),
        blow_ups,
        max_distance,
        median_distance,
        max_ratio: ratio(max_distance),
        median_ratio: ratio(median_distance),
    })
}

/// Spread `max / min` of the median ratios over a radius sweep.
pub fn feller_spread(reports: &[FellerReport]) -> f64 {
    let r: Vec<f64> = reports.iter().map(|r| r.median_ratio).collect();
    let hi = r.iter().copied().fold(0.0, f64::max);
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationRow {
    pub horizon: f64,
    /// `d(mu_T, mu_2T)` when `2T` is among the horizons.
    pub distance_to_2t: Option<f64>,
    pub invariance_residual: f64,
}

/// Inputs of the full invariant-measure experiment.
#[derive(Clone, Debug)]
pub struct InvariantPlan<'a> {
    /// `spec.cfg.horizon` must cover the largest horizon.
    pub spec: RunSpec<'a>,
    pub u0: &'a Field,
    pub trajectories: usize,
    pub horizons: Vec<f64>,
    /// Absolute burn-in; `None` uses `T/10` for each horizon.
    pub burn_in: Option<f64>,
    pub schema: ObservableSchema,
    /// Moment order of the tightness report.
    pub p: f64,
    /// Time shift of the invariance residual.
    pub shift: f64,
    /// Sample cap for the resimulated clouds.
    pub max_samples: usize,
}

#[derive(Clone, Debug)]
pub struct InvariantResult {
    pub measures: Vec<EmpiricalMeasure>,
    pub rows: Vec<StabilizationRow>,
    /// Report on the measure with the largest horizon.
    pub tightness: TightnessReport,
    pub runs: usize,
    pub blow_ups: usize,
}

impl InvariantResult {
    pub fn blowup_fraction(&self) -> f64 {
        self.blow_ups as f64 / self.runs.max(1) as f64
    }

    /// `d(mu_T, mu_2T)` in order of increasing `T`.
    pub fn distances(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.distance_to_2t).collect()
    }
}

/// Pooled trajectories, `mu_T` on each horizon, nested stabilization
/// distances, invariance residuals and the tightness report of the longest
/// horizon.
pub fn run_invariant(plan: &InvariantPlan<'_>) -> Result<InvariantResult> {
    let mut horizons = plan.horizons.clone();
    horizons.sort_by(f64::total_cmp);
    let t_max = *horizons.last().ok_or_else(|| Error::param("no horizons given"))?;
    if plan.spec.cfg.horizon + 1e-9 < t_max {
        return Err(Error::param(format!(
            "run horizon {} shorter than largest measure horizon {t_max}",
            plan.spec.cfg.horizon
        )));
    }
    let results: Vec<Result<TrajectoryRecord>> = (0..plan.trajectories as u64)
        .into_par_iter()
        .map(|traj| {
            simulate(
                plan.u0,
                &RunSpec {
                    trajectory: traj,
                    ..plan.spec
                },
            )
        })
        .collect();
    let mut records = Vec::new();
    let mut blow_ups = 0;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::BlowUp { t, .. }) => {
                warn!("trajectory blew up at t={t}; excluded");
                blow_ups += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(Error::Coverage("every trajectory blew up".into()));
    }
    let basis = &plan.spec.model.basis;
    let delta = plan.spec.cfg.delta;
    let measures: Vec<EmpiricalMeasure> = horizons
        .iter()
        .map(|&t| {
            let burn = plan.burn_in.unwrap_or(t / 10.0);
            build_mu_t_pooled(&records, basis, &plan.schema, burn, t, delta)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(measures.len());
    for (i, mu) in measures.iter().enumerate() {
        let twice = measures
            .iter()
            .position(|m| (m.horizon - 2.0 * mu.horizon).abs() <= 1e-9 * mu.horizon);
        let distance_to_2t = twice
            .map(|j| stabilization_distance(mu, &measures[j]))
            .transpose()?;
        let res = invariance_residual(&mu.thinned(plan.max_samples), plan.shift, &plan.spec)?;
        info!(
            "T={}: d(mu_T, mu_2T)={distance_to_2t:?}, invariance residual={:.4e}",
            horizons[i], res.residual
        );
        rows.push(StabilizationRow {
            horizon: mu.horizon,
            distance_to_2t,
            invariance_residual: res.residual,
        });
    }
    let tightness = tightness_report(measures.last().expect("at least one horizon"), plan.p)?;
    Ok(InvariantResult {
        measures,
        rows,
        tightness,
        runs: plan.trajectories,
        blow_ups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_measure(x: Vec<f64>, count: usize) -> EmpiricalMeasure {
        let schema = ObservableSchema::standard(0);
        EmpiricalMeasure {
            schema,
            delta: 0.25,
            horizon: 1.0,
            burn_in: 0.0,
            times: vec![0.0; count],
            states: vec![Field::zeros(1); count],
            samples: vec![x; count],
        }
    }

    #[test]
    fn schema_parses_and_rejects() {
        let s = ObservableSchema::parse("h, frac,c0,c3").unwrap();
        assert_eq!(s.names(), vec!["h", "frac", "c0", "c3"]);
        assert!(ObservableSchema::parse("h,q").is_err());
        assert!(ObservableSchema::parse("h,h,frac").is_err());
        assert!(ObservableSchema::parse("h,v").is_err());
        assert!(ObservableSchema::parse("").is_err());
        assert!(s.validate_for(3).is_err());
        assert!(s.validate_for(4).is_ok());
    }

    #[test]
    fn point_masses_are_at_their_distance() {
        let a = vec![vec![0.0]; 5];
        let b = vec![vec![3.5]; 7];
        assert!((energy_distance(&a, &b).unwrap() - 3.5).abs() < 1e-14);
        assert_eq!(energy_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_tail_is_a_step() {
        let mu = point_measure(vec![2.0, 3.0, 1.5], 10);
        let t = tightness_report(&mu, 1.2).unwrap();
        assert!(t.degenerate);
        for (r, m) in t.radii.iter().zip(&t.tail_mass) {
            assert_eq!(*m, if *r < 1.5 { 1.0 } else { 0.0 });
        }
        assert!(t.markov_holds());
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let a = point_measure(vec![1.0, 1.0, 1.0], 2);
        let mut b = a.clone();
        b.schema = ObservableSchema::parse("h,frac,c0").unwrap();
        assert!(matches!(stabilization_distance(&a, &b), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn thinning_caps_the_sample_count() {
        let mu = point_measure(vec![1.0, 1.0, 1.0], 1001);
        assert_eq!(mu.thinned(100).len(), 91);
        assert!(mu.thinned(100).len() <= 100);
        assert_eq!(mu.thinned(5000).len(), 1001);
    }
}
