//! Galerkin realization of the Stokes operator `A`, the bilinear term `B`,
//! the Coriolis operator `C`, and the norms of `H`, `V` and `D(A^delta)`.

mod basis;
mod coriolis;
mod field;
mod nse2d;
mod tensor;

use log::{debug, info};
use nalgebra::DMatrix;

pub use basis::{EigenRule, Norms, SpectralBasis};
pub use coriolis::CoriolisOperator;
pub use field::Field;
pub use nse2d::{Nse2d, Parity, TorusMode};
pub use tensor::{SparseTensor, TensorEntry};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Backend realizing `B`.
#[derive(Clone, Debug, PartialEq)]
pub enum Bilinear {
    Abstract(SparseTensor),
    Nse2d(Nse2d),
}

impl Bilinear {
    pub fn apply(&self, u: &Field, v: &Field) -> Field {
        match self {
            Bilinear::Abstract(t) => t.apply(u, v),
            Bilinear::Nse2d(m) => m.apply(u, v),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Bilinear::Abstract(_) => "abstract",
            Bilinear::Nse2d(_) => "nse2d",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Bilinear::Abstract(t) if t.is_zero())
    }
}

/// Everything needed to evaluate the right-hand side of the Galerkin system.
/// Immutable after construction and shared freely between workers.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub basis: SpectralBasis,
    pub bilinear: Bilinear,
    pub coriolis: CoriolisOperator,
    pub forcing: Field,
}

impl SpectralModel {
    pub fn new(
        basis: SpectralBasis,
        bilinear: Bilinear,
        coriolis: CoriolisOperator,
        forcing: Field,
    ) -> Result<Self> {
        let n = basis.n();
        let bn = match &bilinear {
            Bilinear::Abstract(t) => t.n(),
            Bilinear::Nse2d(m) => m.n(),
        };
        if bn != n || forcing.len() != n {
            return Err(Error::param(format!(
                "dimension mismatch: basis N={n}, bilinear N={bn}, forcing N={}",
                forcing.len()
            )));
        }
        Ok(Self {
            basis,
            bilinear,
            coriolis,
            forcing,
        })
    }

    /// Torus backend on a `grid x grid` mesh with `m` noise modes, beta-plane
    /// rotation at `rate`, and no forcing.
    pub fn nse2d(grid: usize, m: usize, rate: f64) -> Result<Self> {
        let backend = Nse2d::new(grid)?;
        let basis = SpectralBasis::new(backend.eigenvalues(), m)?;
        let coriolis = backend.beta_plane_coriolis(rate);
        let n = basis.n();
        Self::new(basis, Bilinear::Nse2d(backend), coriolis, Field::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn apply_a(&self, u: &Field) -> Field {
        self.basis.apply_a(u)
    }

    pub fn apply_frac_a(&self, u: &Field, delta: f64) -> Result<Field> {
        self.basis.apply_frac_a(u, delta)
    }

    pub fn apply_b(&self, u: &Field, v: &Field) -> Field {
        self.bilinear.apply(u, v)
    }

    pub fn apply_c(&self, u: &Field) -> Field {
        self.coriolis.apply(u)
    }

    pub fn norms(&self, u: &Field, delta: f64) -> Norms {
        self.basis.norms(u, delta)
    }

    /// `<B(u,v),w>`.
    pub fn trilinear(&self, u: &Field, v: &Field, w: &Field) -> f64 {
        self.apply_b(u, v).dot(w)
    }

    /// Matrix of the quadratic form `u -> <B(u, e_l), u>`.
    fn bsum_form(&self, l: usize) -> DMatrix<f64> {
        let n = self.n();
        let el = Field::unit(n, l);
        let mut mat = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.apply_b(&Field::unit(n, j), &el);
            for (i, &x) in col.coeffs().iter().enumerate() {
                mat[(j, i)] = x;
            }
        }
        mat
    }

    /// Frobenius norm of the full trilinear tensor.
    pub fn tensor_frobenius(&self) -> f64 {
        match &self.bilinear {
            Bilinear::Abstract(t) => t.frobenius(),
            Bilinear::Nse2d(_) => {
                let n = self.n();
                let mut s = 0.0;
                for j in 0..n {
                    let ej = Field::unit(n, j);
                    for k in 0..n {
                        s += self.apply_b(&ej, &Field::unit(n, k)).norm_sq();
                    }
                }
                s.sqrt()
            }
        }
    }

    /// Certified constant in
    /// `|<B(u,v),w>| <= c_B |u|^1/2 |u|_V^1/2 |v|^1/2 |v|_V^1/2 |w|_V`,
    /// obtained from `|b(u,v,w)| <= ||b||_F |u||v||w|` and the Poincare
    /// inequality on each factor.
    pub fn bilinear_bound_constant(&self) -> f64 {
        self.tensor_frobenius() / self.basis.lambda1()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaEstimate {
    /// Certified `eta` (max over noise modes of the exact quadratic-form bound).
    pub certified: f64,
    /// Per-mode certified bounds.
    pub per_mode: Vec<f64>,
    /// Largest `|<B(u,e_l),u>|` seen over random unit `u`.
    pub mc_lower: f64,
    pub trials: usize,
}

/// Minimum number of Monte-Carlo directions in [`estimate_eta`].
pub const MIN_ETA_TRIALS: usize = 1000;

/// Bound `eta` with `|<B(u,e_l),u>| <= eta |u|^2` for the noise modes.
///
/// For each mode the form is `u^T M_l u` with `M_l[j][i] = b(e_j, e_l, e_i)`;
/// its supremum over the unit sphere is the spectral radius of the symmetric
/// part of `M_l`, which is computed exactly. A Monte-Carlo lower bound is
/// logged alongside.
pub fn estimate_eta(model: &SpectralModel, trials: usize, stream: &mut RngStream) -> Result<EtaEstimate> {
    if trials < MIN_ETA_TRIALS {
        return Err(Error::param(format!("estimate_eta needs >= {MIN_ETA_TRIALS} trials")));
    }
    let n = model.n();
    let m = model.basis.m();
    let mut per_mode = Vec::with_capacity(m);
    let mut forms = Vec::with_capacity(m);
    for l in 0..m {
        let mat = model.bsum_form(l);
        let sym = (&mat + mat.transpose()) * 0.5;
        let bound = if sym.iter().all(|x| *x == 0.0) {
            0.0
        } else {
            sym.clone()
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0f64, |a, e| a.max(e.abs()))
        };
        per_mode.push(bound);
        forms.push(sym);
    }
    let certified = per_mode.iter().copied().fold(0.0, f64::max);

    let mut mc_lower: f64 = 0.0;
    for _ in 0..trials {
        let mut u = nalgebra::DVector::from_fn(n, |_, _| stream.normal());
        let norm = u.norm();
        if norm == 0.0 {
            continue;
        }
        u /= norm;
        for sym in &forms {
            mc_lower = mc_lower.max(u.dot(&(sym * &u)).abs());
        }
    }
    debug!("eta per mode: {per_mode:?}");
    info!("eta: certified {certified:.6e}, Monte-Carlo lower bound {mc_lower:.6e} ({trials} trials)");
    Ok(EtaEstimate {
        certified,
        per_mode,
        mc_lower,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abstract_model(n: usize, m: usize, gens: &[(usize, usize, usize, f64)]) -> SpectralModel {
        let basis = SpectralBasis::from_rule(&EigenRule::Sphere, n, m).unwrap();
        let t = SparseTensor::from_generators(n, gens).unwrap();
        SpectralModel::new(basis, Bilinear::Abstract(t), CoriolisOperator::zero(n), Field::zeros(n)).unwrap()
    }

    #[test]
    fn zero_tensor_gives_zero_eta() {
        let model = abstract_model(4, 2, &[]);
        let mut s = RngStream::new(1, 1);
        let eta = estimate_eta(&model, 1000, &mut s).unwrap();
        assert_eq!(eta.certified, 0.0);
        assert_eq!(eta.mc_lower, 0.0);
    }

    #[test]
    fn crafted_tensor_has_unit_eta() {
        // b_{121} = 1 = -b_{112} (one-based). <B(u,e_2),u> = u_1^2 and
        // <B(u,e_1),u> = -u_1 u_2; the sup over the unit circle is 1.
        let model = abstract_model(2, 2, &[(0, 1, 0, 1.0)]);
        let mut s = RngStream::new(1, 1);
        let eta = estimate_eta(&model, 2000, &mut s).unwrap();
        assert_eq!(eta.certified, 1.0);
        assert!((eta.per_mode[0] - 0.5).abs() < 1e-15);
        assert!(eta.mc_lower <= eta.certified && eta.mc_lower > 0.99);
    }

    #[test]
    fn too_few_trials_rejected() {
        let model = abstract_model(2, 1, &[]);
        let mut s = RngStream::new(1, 1);
        assert!(estimate_eta(&model, 10, &mut s).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let basis = SpectralBasis::from_rule(&EigenRule::Sphere, 3, 1).unwrap();
        let r = SpectralModel::new(
            basis,
            Bilinear::Abstract(SparseTensor::zero(4)),
            CoriolisOperator::zero(3),
            Field::zeros(3),
        );
        assert!(r.is_err());
    }
}
