use crate::error::{Error, Result};

use super::field::Field;

/// Rule generating the eigenvalues of the abstract Stokes operator.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenRule {
    /// `l(l+1)` with multiplicity `2l+1`, `l >= 1` (vector harmonics on S^2).
    Sphere,
    /// Sorted `|k|^2` over nonzero `k` in Z^2, with lattice multiplicity.
    Torus,
    Explicit(Vec<f64>),
}

impl EigenRule {
    pub fn eigenvalues(&self, n: usize) -> Result<Vec<f64>> {
        let lambda = match self {
            EigenRule::Sphere => (1u64..)
                .flat_map(|l| std::iter::repeat_n((l * (l + 1)) as f64, (2 * l + 1) as usize))
                .take(n)
                .collect(),
            EigenRule::Torus => torus_eigenvalues(n),
            EigenRule::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::param(format!(
                        "explicit eigenvalue list has {} entries, expected N={n}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        Ok(lambda)
    }
}

fn torus_eigenvalues(n: usize) -> Vec<f64> {
    let mut r = 1i64;
    loop {
        let mut v: Vec<i64> = Vec::new();
        for kx in -r..=r {
            for ky in -r..=r {
                let k2 = kx * kx + ky * ky;
                if k2 > 0 {
                    v.push(k2);
                }
            }
        }
        v.sort_unstable();
        // Every |k|^2 <= r^2 is fully enumerated inside the box of half-width r.
        let complete = v.iter().filter(|&&k2| k2 <= r * r).count();
        if complete >= n {
            return v.into_iter().take(n).map(|k| k as f64).collect();
        }
        r *= 2;
    }
}

/// Truncated eigenbasis of `A`: `N` nondecreasing eigenvalues, the first `m`
/// of which carry noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    lambda: Vec<f64>,
    m: usize,
}

impl SpectralBasis {
    pub fn new(lambda: Vec<f64>, m: usize) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::param("basis needs at least one mode"));
        }
        if !(lambda[0] > 0.0) {
            return Err(Error::param(format!("lambda_1={} must be positive", lambda[0])));
        }
        if lambda.windows(2).any(|w| !(w[0] <= w[1])) || lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::param("eigenvalues must be finite and nondecreasing"));
        }
        if m == 0 || m > lambda.len() {
            return Err(Error::param(format!("noise modes m={m} must satisfy 1 <= m <= N={}", lambda.len())));
        }
        Ok(Self { lambda, m })
    }

    pub fn from_rule(rule: &EigenRule, n: usize, m: usize) -> Result<Self> {
        Self::new(rule.eigenvalues(n)?, m)
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Poincare constant.
    pub fn lambda1(&self) -> f64 {
        self.lambda[0]
    }

    pub fn lambda_head(&self) -> &[f64] {
        &self.lambda[..self.m]
    }

    pub fn apply_a(&self, u: &Field) -> Field {
        Field::from_vec(u.coeffs().iter().zip(&self.lambda).map(|(x, l)| l * x).collect())
    }

    /// `A^delta` for `delta` in `[0, 1]`.
    pub fn apply_frac_a(&self, u: &Field, delta: f64) -> Result<Field> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param(format!("delta={delta} outside [0, 1]")));
        }
        Ok(self.frac_unchecked(u, delta))
    }

    pub(crate) fn frac_unchecked(&self, u: &Field, delta: f64) -> Field {
        if delta == 0.0 {
            return u.clone();
        }
        if delta == 1.0 {
            return self.apply_a(u);
        }
        Field::from_vec(
            u.coeffs()
                .iter()
                .zip(&self.lambda)
                .map(|(x, l)| l.powf(delta) * x)
                .collect(),
        )
    }

    /// `|A^s u|^2 = sum lambda_l^{2s} u_l^2` for any real `s >= 0`.
    pub fn pow_norm_sq(&self, u: &Field, s: f64) -> f64 {
        let two_s = 2.0 * s;
        u.coeffs()
            .iter()
            .zip(&self.lambda)
            .map(|(x, l)| {
                let w = if two_s == 0.0 {
                    1.0
                } else if two_s == 1.0 {
                    *l
                } else if two_s == 2.0 {
                    l * l
                } else {
                    l.powf(two_s)
                };
                w * x * x
            })
            .sum()
    }

    /// Same as [`Self::pow_norm_sq`] for a vector on the leading modes.
    pub fn head_pow_norm_sq(&self, head: &[f64], s: f64) -> f64 {
        head.iter()
            .zip(&self.lambda)
            .map(|(x, l)| l.powf(2.0 * s) * x * x)
            .sum()
    }

    /// `(|u|, |u|_V, |A^delta u|)`.
    pub fn norms(&self, u: &Field, delta: f64) -> Norms {
        Norms {
            h: u.norm(),
            v: self.pow_norm_sq(u, 0.5).sqrt(),
            frac: self.pow_norm_sq(u, delta).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub h: f64,
    pub v: f64,
    pub frac: f64,
}
