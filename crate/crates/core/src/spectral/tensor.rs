use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::field::Field;

/// One stored coefficient `b(e_j, e_k, e_l)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEntry {
    pub j: u32,
    pub k: u32,
    pub l: u32,
    pub b: f64,
}

/// Sparse trilinear form `b_{jkl}`, antisymmetric in its last two slots.
///
/// Entries are only ever inserted in pairs `(j,k,l,b)` / `(j,l,k,-b)`, so
/// `<B(u,v),v> = 0` holds for every stored tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseTensor {
    n: usize,
    entries: Vec<TensorEntry>,
}

impl SparseTensor {
    pub fn zero(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    /// Builds from generating triples; each `(j,k,l,b)` with `k != l`
    /// contributes `b_{jkl} += b` and `b_{jlk} -= b`.
    pub fn from_generators(n: usize, gens: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(2 * gens.len());
        for &(j, k, l, b) in gens {
            if j >= n || k >= n || l >= n {
                return Err(Error::param(format!("tensor index ({j},{k},{l}) out of range for N={n}")));
            }
            if k == l {
                return Err(Error::param(format!(
                    "generator ({j},{k},{l}) sits on the k=l diagonal, which antisymmetry forces to zero"
                )));
            }
            if !b.is_finite() {
                return Err(Error::param("tensor coefficient must be finite"));
            }
            let (j, k, l) = (j as u32, k as u32, l as u32);
            entries.push(TensorEntry { j, k, l, b });
            entries.push(TensorEntry { j, k: l, l: k, b: -b });
        }
        Ok(Self::merged(n, entries))
    }

    /// Random sparse tensor with about `density * N^2 (N-1) / 2` generators of
    /// standard-normal size times `scale`.
    pub fn random(n: usize, density: f64, scale: f64, stream: &mut RngStream) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::param(format!("tensor density {density} outside [0, 1]")));
        }
        if n < 2 {
            return Ok(Self::zero(n));
        }
        let total = n * n * (n - 1) / 2;
        let count = ((total as f64) * density).round() as usize;
        let mut gens = Vec::with_capacity(count);
        for _ in 0..count {
            let j = stream.index_below(n);
            let k = stream.index_below(n);
            let mut l = stream.index_below(n - 1);
            if l >= k {
                l += 1;
            }
            gens.push((j, k, l, scale * stream.normal()));
        }
        Self::from_generators(n, &gens)
    }

    fn merged(n: usize, mut entries: Vec<TensorEntry>) -> Self {
        entries.sort_by_key(|e| (e.l, e.j, e.k));
        let mut out: Vec<TensorEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match out.last_mut() {
                Some(last) if (last.j, last.k, last.l) == (e.j, e.k, e.l) => last.b += e.b,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.b != 0.0);
        Self { n, entries: out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `B(u,v)_l = sum_{j,k} b_{jkl} u_j v_k`.
    pub fn apply(&self, u: &Field, v: &Field) -> Field {
        let mut out = Field::zeros(self.n);
        let (u, v) = (u.coeffs(), v.coeffs());
        let o = out.coeffs_mut();
        for e in &self.entries {
            o[e.l as usize] += e.b * u[e.j as usize] * v[e.k as usize];
        }
        out
    }

    /// Frobenius norm `sqrt(sum b_{jkl}^2)`.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|e| e.b * e.b).sum::<f64>().sqrt()
    }
}
