use std::ops::{Add, Index, IndexMut, Sub};

/// Coefficients of a velocity field in the orthonormal eigenbasis of `A`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Field {
    coeffs: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![0.0; n] }
    }

    /// The basis vector `e_l` (zero-based).
    pub fn unit(n: usize, l: usize) -> Self {
        let mut f = Self::zeros(n);
        f.coeffs[l] = 1.0;
        f
    }

    pub fn from_vec(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Field) {
        for (s, xi) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * xi;
        }
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_vec(self.coeffs.iter().map(|x| a * x).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_finite())
    }

    /// Adds a vector living on the leading modes (e.g. the OU coordinates).
    pub fn add_head(&mut self, head: &[f64]) {
        for (s, h) in self.coeffs.iter_mut().zip(head) {
            *s += h;
        }
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coeffs[i]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.coeffs[i]
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        Field::from_vec(self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        Field::from_vec(self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect())
    }
}
