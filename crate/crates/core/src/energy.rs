//! Energy ledger of the `v` equation and the integral bounds built from it.
//!
//! With `S(t) = sum_l |z_l(t)|`, `w = alpha z - C z` and constants
//! `c = 2 / (nu lambda_1)`, `c' = nu lambda_1 / 8` the ledger tracks
//!
//! ```text
//! gamma(t) = -nu lambda_1 / 2 + 4 eta S(t)
//! p(t)     = c |f|^2 + c |w|^2 + 2 eta S(t) |z|^2
//! 1/2 d+|v|^2/dt + nu/2 |v|_V^2 <= 1/2 gamma |v|^2 + p          (differential)
//! ```
//!
//! and the Gronwall, time-integral and `|A^delta v|` bounds derived from it.

use crate::integrator::{IntegratorConfig, TrajectoryRecord};
use crate::spectral::{Field, SpectralModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerConstants {
    pub lambda1: f64,
    pub eta: f64,
    pub alpha: f64,
    pub nu: f64,
    /// Young constant on the `|f|^2` and `|alpha z - C z|^2` terms.
    pub c: f64,
    /// Share of `nu lambda_1 |v|^2` spent on each Young split.
    pub c_prime: f64,
}

impl LedgerConstants {
    pub fn new(lambda1: f64, eta: f64, alpha: f64, nu: f64) -> Self {
        Self {
            lambda1,
            eta,
            alpha,
            nu,
            c: 2.0 / (nu * lambda1),
            c_prime: nu * lambda1 / 8.0,
        }
    }

    pub fn gamma(&self, z_abs_sum: f64) -> f64 {
        -self.nu * self.lambda1 / 2.0 + 4.0 * self.eta * z_abs_sum
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub v_sq: f64,
    pub v_vnorm_sq: f64,
    pub v_frac_sq: f64,
    pub u_h: f64,
    pub u_v: f64,
    pub u_frac: f64,
    pub z_h: f64,
    pub z_abs_sum: f64,
    pub gamma: f64,
    pub p: f64,
    /// Forward difference of `|v|^2` on the recording grid; absent on the
    /// last row.
    pub dplus: Option<f64>,
    /// LHS minus RHS of the differential inequality.
    pub dineq_residual: Option<f64>,
    /// Source term `|A^{delta+1/2} f|^2 + |z|^2 + |A^{(1+2delta)/4} z|^4` of
    /// the `|A^delta v|` bound.
    pub adelta_source: f64,
}

impl LedgerRow {
    /// `|v|^2 |A^{1/2} v|^2`, the exponent density of the `|A^delta v|` bound.
    pub fn growth_density(&self) -> f64 {
        self.v_sq * self.v_vnorm_sq
    }
}

/// One ledger row for the state `(v, z)`; `v_next` is the state one recording
/// interval `dt` later.
pub fn energy_ledger_row(
    t: f64,
    v: &Field,
    z: &[f64],
    v_next: Option<&Field>,
    dt: f64,
    model: &SpectralModel,
    k: &LedgerConstants,
    delta: f64,
) -> LedgerRow {
    let basis = &model.basis;
    let v_sq = v.norm_sq();
    let v_vnorm_sq = basis.pow_norm_sq(v, 0.5);
    let v_frac_sq = basis.pow_norm_sq(v, delta);
    let mut u = v.clone();
    u.add_head(z);
    let un = basis.norms(&u, delta);
    let z_sq: f64 = z.iter().map(|x| x * x).sum();
    let z_abs_sum: f64 = z.iter().map(|x| x.abs()).sum();

    let mut w: Vec<f64> = z.iter().map(|x| k.alpha * x).collect();
    w.resize(basis.n(), 0.0);
    let mut cz = vec![0.0; basis.n()];
    model.coriolis.apply_into(z, &mut cz);
    let w_sq: f64 = w.iter().zip(&cz).map(|(a, b)| (a - b) * (a - b)).sum();
    let f_sq = model.forcing.norm_sq();

    let gamma = k.gamma(z_abs_sum);
    let p = k.c * f_sq + k.c * w_sq + 2.0 * k.eta * z_abs_sum * z_sq;
    let dplus = v_next.map(|vn| (vn.norm_sq() - v_sq) / dt);
    let dineq_residual = dplus.map(|d| 0.5 * d + 0.5 * k.nu * v_vnorm_sq - (0.5 * gamma * v_sq + p));

    let f_src = basis.pow_norm_sq(&model.forcing, delta + 0.5);
    let zq = basis.head_pow_norm_sq(z, (1.0 + 2.0 * delta) / 4.0);
    LedgerRow {
        t,
        v_sq,
        v_vnorm_sq,
        v_frac_sq,
        u_h: un.h,
        u_v: un.v,
        u_frac: un.frac,
        z_h: z_sq.sqrt(),
        z_abs_sum,
        gamma,
        p,
        dplus,
        dineq_residual,
        adelta_source: f_src + z_sq + zq * zq,
    }
}

pub(crate) fn build_ledger(
    vs: &[Field],
    zs: &[Vec<f64>],
    model: &SpectralModel,
    k: &LedgerConstants,
    cfg: &IntegratorConfig,
) -> Vec<LedgerRow> {
    let dt = cfg.record_dt();
    (0..vs.len())
        .map(|i| {
            energy_ledger_row(
                i as f64 * dt,
                &vs[i],
                &zs[i],
                vs.get(i + 1),
                dt,
                model,
                k,
                cfg.delta,
            )
        })
        .collect()
}

/// Trapezoid cumulative integral on a uniform grid; `out[0] = 0`.
pub(crate) fn cumulative_trapezoid(ys: impl Iterator<Item = f64>, dt: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for y in ys {
        if let Some(p) = prev {
            acc += 0.5 * dt * (p + y);
        }
        out.push(acc);
        prev = Some(y);
    }
    out
}

/// Gronwall envelope from `tau_idx` onward:
/// `|v(t)|^2 <= |v(tau)|^2 e^{int gamma} + int_tau^t e^{int_s^t gamma} 2 p(s) ds`.
/// Returns `(bound, actual)` for every recorded `t >= tau`.
pub fn gronwall_series(record: &TrajectoryRecord, tau_idx: usize) -> Vec<(f64, f64)> {
    let rows = &record.ledger[tau_idx..];
    let dt = record.dt();
    envelope(
        rows[0].v_sq,
        rows.iter().map(|r| (r.gamma, 2.0 * r.p, r.v_sq)),
        dt,
    )
}

/// Step recursion for `b' = g b + s` with trapezoid weights:
/// `b_{i+1} = e^{dG} b_i + dt/2 (e^{dG} s_i + s_{i+1})`.
fn envelope(b0: f64, rows: impl Iterator<Item = (f64, f64, f64)>, dt: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut b = b0;
    for (g, s, actual) in rows {
        if let Some((gp, sp)) = prev {
            let e = (0.5 * dt * (gp + g)).exp();
            b = e * b + 0.5 * dt * (e * sp + s);
        }
        out.push((b, actual));
        prev = Some((g, s));
    }
    out
}

/// Gronwall envelope for one pair `tau <= t` given as recorded times.
pub fn gronwall_bound(record: &TrajectoryRecord, tau: f64, t: f64) -> crate::error::Result<(f64, f64)> {
    let i = record.index_of(tau)?;
    let j = record.index_of(t)?;
    if j < i {
        return Err(crate::error::Error::param("gronwall_bound needs tau <= t"));
    }
    Ok(gronwall_series(record, i)[j - i])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeIntegralCheck {
    /// `nu int_tau^t |v|_V^2 ds`.
    pub integral: f64,
    /// `|v(tau)|^2 - |v(t)|^2 + int gamma |v|^2 + int 2p`, the integrated
    /// differential inequality.
    pub rhs: f64,
    pub residual: f64,
    /// `|v(tau)|^2 + sup |v|^2 int gamma^+ + int 2p`, the coarser sup form.
    pub rhs_sup: f64,
    pub residual_sup: f64,
}

/// Integrated form of the differential inequality over `[tau_idx, t_idx]`.
pub fn time_integral_check(record: &TrajectoryRecord, tau_idx: usize, t_idx: usize) -> TimeIntegralCheck {
    let rows = &record.ledger[tau_idx..=t_idx];
    let dt = record.dt();
    let nu = record.meta.constants.nu;
    let trap = |f: &dyn Fn(&LedgerRow) -> f64| {
        *cumulative_trapezoid(rows.iter().map(f), dt).last().unwrap_or(&0.0)
    };
    let integral = nu * trap(&|r| r.v_vnorm_sq);
    let g_v = trap(&|r| r.gamma * r.v_sq);
    let two_p = trap(&|r| 2.0 * r.p);
    let g_plus = trap(&|r| r.gamma.max(0.0));
    let sup_v = rows.iter().map(|r| r.v_sq).fold(0.0, f64::max);
    let first = rows[0].v_sq;
    let last = rows[rows.len() - 1].v_sq;
    let rhs = first - last + g_v + two_p;
    let rhs_sup = first + sup_v * g_plus + two_p;
    TimeIntegralCheck {
        integral,
        rhs,
        residual: integral - rhs,
        rhs_sup,
        residual_sup: integral - rhs_sup,
    }
}

/// Time-integral check between two recorded times.
pub fn v_norm_time_integral(record: &TrajectoryRecord, tau: f64, t: f64) -> crate::error::Result<TimeIntegralCheck> {
    let i = record.index_of(tau)?;
    let j = record.index_of(t)?;
    if j <= i {
        return Err(crate::error::Error::param("v_norm_time_integral needs tau < t"));
    }
    Ok(time_integral_check(record, i, j))
}

/// `|A^delta v|` envelope from `t = 0` with growth constant `k`:
///
/// ```text
/// |A^d v(t)|^2 <= e^{k G(t)} |A^d v(0)|^2 + k int_0^t e^{k (G(t) - G(s))} src(s) ds,
/// G(t) = int_0^t |v|^2 |A^{1/2} v|^2
/// ```
///
/// Returns `(bound, actual)` per recorded time. Overflowing envelopes are
/// `+inf`, which dominates trivially.
pub fn adelta_series(record: &TrajectoryRecord, k: f64) -> Vec<(f64, f64)> {
    let rows = &record.ledger;
    envelope(
        rows[0].v_frac_sq,
        rows.iter().map(|r| (k * r.growth_density(), k * r.adelta_source, r.v_frac_sq)),
        record.dt(),
    )
}

/// Smallest `k` (to a relative tolerance of 1e-3) for which every
/// `|A^delta v|` envelope dominates on all records. Searches over
/// `[1e-12, 1e12]` by bisection in `log k`; `None` if even `1e12` fails.
pub fn fit_adelta_constant(records: &[TrajectoryRecord]) -> Option<f64> {
    let holds = |k: f64| {
        records
            .iter()
            .all(|r| adelta_series(r, k).iter().all(|(b, a)| a <= b))
    };
    let (mut lo, mut hi) = (1e-12_f64.ln(), 1e12_f64.ln());
    if !holds(hi.exp()) {
        return None;
    }
    if holds(lo.exp()) {
        return Some(lo.exp());
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if holds(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi.exp())
}

/// Integrated differential inequality over `[tau_idx, t]` for every recorded
/// `t > tau`.
pub fn time_integral_series(record: &TrajectoryRecord, tau_idx: usize) -> Vec<TimeIntegralCheck> {
    let rows = &record.ledger[tau_idx..];
    let dt = record.dt();
    let nu = record.meta.constants.nu;
    let vv = cumulative_trapezoid(rows.iter().map(|r| r.v_vnorm_sq), dt);
    let gv = cumulative_trapezoid(rows.iter().map(|r| r.gamma * r.v_sq), dt);
    let pp = cumulative_trapezoid(rows.iter().map(|r| 2.0 * r.p), dt);
    let gp = cumulative_trapezoid(rows.iter().map(|r| r.gamma.max(0.0)), dt);
    let first = rows[0].v_sq;
    let mut sup = first;
    let mut out = Vec::with_capacity(rows.len().saturating_sub(1));
    for i in 1..rows.len() {
        sup = sup.max(rows[i].v_sq);
        let integral = nu * vv[i];
        let rhs = first - rows[i].v_sq + gv[i] + pp[i];
        let rhs_sup = first + sup * gp[i] + pp[i];
        out.push(TimeIntegralCheck {
            integral,
            rhs,
            residual: integral - rhs,
            rhs_sup,
            residual_sup: integral - rhs_sup,
        });
    }
    out
}

/// Start indices `0, T/4, T/2, 3T/4` used for the Gronwall and time-integral
/// envelopes.
pub fn envelope_starts(record: &TrajectoryRecord) -> Vec<usize> {
    let n = record.len();
    (0..4).map(|q| q * (n - 1) / 4).collect()
}

/// Time-integrated excess of each inequality over the tolerance `tol`, i.e.
/// `int (residual - tol)^+ dt`, together with the worst residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ViolationMass {
    pub dineq: f64,
    pub ineq: f64,
    pub intineq: f64,
    pub worst_dineq: f64,
    pub worst_ineq: f64,
    pub worst_intineq: f64,
}

impl ViolationMass {
    fn add(&mut self, o: &ViolationMass) {
        self.dineq += o.dineq;
        self.ineq += o.ineq;
        self.intineq += o.intineq;
        self.worst_dineq = self.worst_dineq.max(o.worst_dineq);
        self.worst_ineq = self.worst_ineq.max(o.worst_ineq);
        self.worst_intineq = self.worst_intineq.max(o.worst_intineq);
    }

    pub fn worst(&self) -> f64 {
        self.worst_dineq.max(self.worst_ineq).max(self.worst_intineq)
    }
}

pub fn violation_mass(record: &TrajectoryRecord, tol: f64) -> ViolationMass {
    let dt = record.dt();
    let excess = |r: f64| (r - tol).max(0.0) * dt;
    let mut m = ViolationMass {
        worst_dineq: f64::NEG_INFINITY,
        worst_ineq: f64::NEG_INFINITY,
        worst_intineq: f64::NEG_INFINITY,
        ..Default::default()
    };
    for r in record.ledger.iter().filter_map(|r| r.dineq_residual) {
        m.dineq += excess(r);
        m.worst_dineq = m.worst_dineq.max(r);
    }
    for start in envelope_starts(record) {
        for (b, a) in gronwall_series(record, start).into_iter().skip(1) {
            m.ineq += excess(a - b);
            m.worst_ineq = m.worst_ineq.max(a - b);
        }
        for c in time_integral_series(record, start) {
            m.intineq += excess(c.residual);
            m.worst_intineq = m.worst_intineq.max(c.residual);
        }
    }
    m
}

/// Mean violation mass over an ensemble, with worst residuals over all runs.
pub fn ensemble_violation_mass(records: &[TrajectoryRecord], tol: f64) -> ViolationMass {
    let mut total = ViolationMass {
        worst_dineq: f64::NEG_INFINITY,
        worst_ineq: f64::NEG_INFINITY,
        worst_intineq: f64::NEG_INFINITY,
        ..Default::default()
    };
    for r in records {
        total.add(&violation_mass(r, tol));
    }
    let n = records.len().max(1) as f64;
    total.dineq /= n;
    total.ineq /= n;
    total.intineq /= n;
    total
}

/// Same path with the ledger recomputed under other constants.
pub fn with_constants(record: &TrajectoryRecord, model: &SpectralModel, k: LedgerConstants) -> TrajectoryRecord {
    let mut out = record.clone();
    out.ledger = build_ledger(&record.v, &record.z, model, &k, &record.meta.cfg);
    out.meta.constants = k;
    out
}
