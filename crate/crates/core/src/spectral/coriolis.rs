use crate::rng::RngStream;

use super::basis::SpectralBasis;
use super::field::Field;

/// Skew-symmetric operator stored as rotation generators `(i, j, w)`:
/// `C e_i += w e_j`, `C e_j -= w e_i`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CoriolisOperator {
    n: usize,
    blocks: Vec<(usize, usize, f64)>,
    commutes_with_a: bool,
}

impl CoriolisOperator {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            blocks: Vec::new(),
            commutes_with_a: true,
        }
    }

    pub(crate) fn from_blocks(n: usize, blocks: Vec<(usize, usize, f64)>, commutes_with_a: bool) -> Self {
        Self {
            n,
            blocks,
            commutes_with_a,
        }
    }

    /// 2x2 rotation blocks at rate `rate` pairing consecutive modes of equal
    /// eigenvalue; unpaired modes are left alone. Commutes with `A`.
    pub fn rotation_blocks(basis: &SpectralBasis, rate: f64) -> Self {
        let lambda = basis.lambda();
        let mut blocks = Vec::new();
        let mut i = 0;
        while i + 1 < lambda.len() {
            if lambda[i] == lambda[i + 1] {
                if rate != 0.0 {
                    blocks.push((i, i + 1, rate));
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        Self::from_blocks(basis.n(), blocks, true)
    }

    /// Dense random skew operator with normal entries of size `scale`. Does
    /// not commute with `A` in general.
    pub fn random_skew(basis: &SpectralBasis, scale: f64, stream: &mut RngStream) -> Self {
        let n = basis.n();
        let mut blocks = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                blocks.push((i, j, scale * stream.normal()));
            }
        }
        let commutes = blocks.iter().all(|&(i, j, w)| w == 0.0 || basis.lambda()[i] == basis.lambda()[j]);
        Self::from_blocks(n, blocks, commutes)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn commutes_with_a(&self) -> bool {
        self.commutes_with_a
    }

    pub fn blocks(&self) -> &[(usize, usize, f64)] {
        &self.blocks
    }

    pub fn apply(&self, u: &Field) -> Field {
        let mut out = Field::zeros(self.n);
        self.apply_into(u.coeffs(), out.coeffs_mut());
        out
    }

    /// `out += C x` for a vector on the leading modes (shorter than `N` allowed).
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let get = |i: usize| x.get(i).copied().unwrap_or(0.0);
        for &(i, j, w) in &self.blocks {
            out[j] += w * get(i);
            out[i] -= w * get(j);
        }
    }

    /// Largest rotation rate magnitude, an upper bound on the operator norm
    /// when blocks are disjoint.
    pub fn max_rate(&self) -> f64 {
        self.blocks.iter().map(|b| b.2.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_rotation_action() {
        let basis = SpectralBasis::new(vec![1.0, 1.0, 3.0], 1).unwrap();
        let c = CoriolisOperator::rotation_blocks(&basis, 0.7);
        assert_eq!(c.apply(&Field::unit(3, 0)), Field::from_vec(vec![0.0, 0.7, 0.0]));
        assert_eq!(c.apply(&Field::unit(3, 1)), Field::from_vec(vec![-0.7, 0.0, 0.0]));
        assert_eq!(c.apply(&Field::unit(3, 2)), Field::zeros(3));
    }

    #[test]
    fn zero_rate_is_zero_operator() {
        let basis = SpectralBasis::new(vec![1.0, 1.0], 1).unwrap();
        let c = CoriolisOperator::rotation_blocks(&basis, 0.0);
        assert!(c.is_zero());
        assert_eq!(c.apply(&Field::from_vec(vec![1.0, 2.0])), Field::zeros(2));
    }

    #[test]
    fn random_skew_flags_noncommuting() {
        let basis = SpectralBasis::new(vec![1.0, 2.0, 3.0], 1).unwrap();
        let mut s = RngStream::new(1, 1);
        let c = CoriolisOperator::random_skew(&basis, 1.0, &mut s);
        assert!(!c.commutes_with_a());
    }
}
