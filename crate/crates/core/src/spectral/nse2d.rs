//! Two-dimensional incompressible Navier-Stokes on the periodic torus
//! `[0, 2pi)^2`, truncated to a dealiased square of wavevectors and written in
//! a real orthonormal basis of divergence-free velocity fields:
//!
//! ```text
//! e_{k,c}(x) = (k_perp / |k|) sqrt(2) cos(k.x)
//! e_{k,s}(x) = (k_perp / |k|) sqrt(2) sin(k.x),     k_perp = (-k_y, k_x)
//! ```
//!
//! for `k` in the upper half plane. Inner products are averages over the
//! torus, so the basis is orthonormal and `A = -Laplacian` has eigenvalue
//! `|k|^2`. The nonlinearity `P[(u.grad) v]` is evaluated pseudo-spectrally on
//! an `n x n` grid; with `|k_x|, |k_y| <= kmax` and `3 kmax < n` the quadratic
//! products are alias free, so the result is the exact Galerkin projection.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::coriolis::CoriolisOperator;
use super::field::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusMode {
    pub kx: i32,
    pub ky: i32,
    pub parity: Parity,
}

impl TorusMode {
    pub fn k_sq(&self) -> i32 {
        self.kx * self.kx + self.ky * self.ky
    }
}

#[derive(Clone)]
pub struct Nse2d {
    grid: usize,
    kmax: i32,
    modes: Vec<TorusMode>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Nse2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nse2d")
            .field("grid", &self.grid)
            .field("kmax", &self.kmax)
            .field("modes", &self.modes.len())
            .finish()
    }
}

impl PartialEq for Nse2d {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.kmax == other.kmax
    }
}

impl Nse2d {
    /// Grid of `grid x grid` points, retaining `|k_x|, |k_y| <= (grid-1)/3`.
    pub fn new(grid: usize) -> Result<Self> {
        if grid < 4 {
            return Err(Error::param(format!("nse2d grid {grid} too small (need >= 4)")));
        }
        let kmax = ((grid - 1) / 3) as i32;
        let mut modes = Vec::new();
        for kx in 0..=kmax {
            for ky in -kmax..=kmax {
                if kx > 0 || ky > 0 {
                    for parity in [Parity::Cos, Parity::Sin] {
                        modes.push(TorusMode { kx, ky, parity });
                    }
                }
            }
        }
        modes.sort_by_key(|m| (m.k_sq(), m.kx, m.ky, m.parity == Parity::Sin));
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            kmax,
            modes,
            fwd: planner.plan_fft_forward(grid),
            inv: planner.plan_fft_inverse(grid),
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn kmax(&self) -> i32 {
        self.kmax
    }

    pub fn modes(&self) -> &[TorusMode] {
        &self.modes
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.k_sq() as f64).collect()
    }

    pub fn mode_index(&self, kx: i32, ky: i32, parity: Parity) -> Option<usize> {
        self.modes
            .iter()
            .position(|m| m.kx == kx && m.ky == ky && m.parity == parity)
    }

    /// Rotation of each `(cos_k, sin_k)` pair at rate `rate * k_x / |k|^2`,
    /// the beta-plane term in this basis. Commutes with `A`.
    pub fn beta_plane_coriolis(&self, rate: f64) -> CoriolisOperator {
        let mut blocks = Vec::new();
        for (i, m) in self.modes.iter().enumerate() {
            if m.parity == Parity::Cos {
                let j = self
                    .mode_index(m.kx, m.ky, Parity::Sin)
                    .expect("every cos mode has a sin partner");
                let w = rate * m.kx as f64 / m.k_sq() as f64;
                if w != 0.0 {
                    blocks.push((i, j, w));
                }
            }
        }
        CoriolisOperator::from_blocks(self.n(), blocks, true)
    }

    fn grid_index(&self, kx: i32, ky: i32) -> usize {
        let n = self.grid as i32;
        (ky.rem_euclid(n) * n + kx.rem_euclid(n)) as usize
    }

    /// Velocity components in Fourier space (full-plane, Hermitian).
    fn spectral_velocity(&self, u: &Field, ux: &mut [Complex<f64>], uy: &mut [Complex<f64>]) {
        ux.fill(Complex::ZERO);
        uy.fill(Complex::ZERO);
        for (m, &a) in self.modes.iter().zip(u.coeffs()) {
            if a == 0.0 {
                continue;
            }
            // cos: s = a / sqrt2, sin: s = -i a / sqrt2
            let s = match m.parity {
                Parity::Cos => Complex::new(a / SQRT_2, 0.0),
                Parity::Sin => Complex::new(0.0, -a / SQRT_2),
            };
            let kn = (m.k_sq() as f64).sqrt();
            let (px, py) = (-m.ky as f64 / kn, m.kx as f64 / kn);
            let ip = self.grid_index(m.kx, m.ky);
            let im = self.grid_index(-m.kx, -m.ky);
            ux[ip] += s * px;
            uy[ip] += s * py;
            ux[im] += s.conj() * px;
            uy[im] += s.conj() * py;
        }
    }

    fn fft2(&self, buf: &mut [Complex<f64>], inverse: bool, scratch: &mut [Complex<f64>]) {
        let n = self.grid;
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(buf);
        transpose(buf, scratch, n);
        plan.process(scratch);
        transpose(scratch, buf, n);
    }

    /// `B(u, v) = P[(u . grad) v]` in basis coordinates.
    pub fn apply(&self, u: &Field, v: &Field) -> Field {
        let n2 = self.grid * self.grid;
        let zero = Complex::ZERO;
        let mut ux = vec![zero; n2];
        let mut uy = vec![zero; n2];
        let mut vx = vec![zero; n2];
        let mut vy = vec![zero; n2];
        let mut scratch = vec![zero; n2];
        self.spectral_velocity(u, &mut ux, &mut uy);
        self.spectral_velocity(v, &mut vx, &mut vy);

        // Gradients of v: d/dx -> i kx, d/dy -> i ky.
        let n = self.grid as i32;
        let wavenumber = |i: usize| {
            let i = i as i32;
            if i > n / 2 {
                i - n
            } else {
                i
            }
        };
        let mut dvx_dx = vx.clone();
        let mut dvx_dy = vx;
        let mut dvy_dx = vy.clone();
        let mut dvy_dy = vy;
        for iy in 0..self.grid {
            let ky = wavenumber(iy) as f64;
            for ix in 0..self.grid {
                let kx = wavenumber(ix) as f64;
                let p = iy * self.grid + ix;
                dvx_dx[p] *= Complex::new(0.0, kx);
                dvx_dy[p] *= Complex::new(0.0, ky);
                dvy_dx[p] *= Complex::new(0.0, kx);
                dvy_dy[p] *= Complex::new(0.0, ky);
            }
        }
        for buf in [&mut ux, &mut uy, &mut dvx_dx, &mut dvx_dy, &mut dvy_dx, &mut dvy_dy] {
            self.fft2(buf, true, &mut scratch);
        }

        let mut wx = vec![zero; n2];
        let mut wy = vec![zero; n2];
        for p in 0..n2 {
            let (a, b) = (ux[p].re, uy[p].re);
            wx[p] = Complex::new(a * dvx_dx[p].re + b * dvx_dy[p].re, 0.0);
            wy[p] = Complex::new(a * dvy_dx[p].re + b * dvy_dy[p].re, 0.0);
        }
        self.fft2(&mut wx, false, &mut scratch);
        self.fft2(&mut wy, false, &mut scratch);
        let norm = 1.0 / n2 as f64;

        let mut out = Field::zeros(self.n());
        for (c, m) in out.coeffs_mut().iter_mut().zip(&self.modes) {
            let p = self.grid_index(m.kx, m.ky);
            let kn = (m.k_sq() as f64).sqrt();
            let q = (wx[p] * (-m.ky as f64) + wy[p] * (m.kx as f64)) * (norm / kn);
            *c = match m.parity {
                Parity::Cos => SQRT_2 * q.re,
                Parity::Sin => -SQRT_2 * q.im,
            };
        }
        out
    }

    /// Velocity `(u_x, u_y)` sampled on the `grid x grid` mesh, row-major in `y`.
    pub fn velocity_on_grid(&self, u: &Field) -> (Vec<f64>, Vec<f64>) {
        let n2 = self.grid * self.grid;
        let mut ux = vec![Complex::ZERO; n2];
        let mut uy = vec![Complex::ZERO; n2];
        let mut scratch = vec![Complex::ZERO; n2];
        self.spectral_velocity(u, &mut ux, &mut uy);
        self.fft2(&mut ux, true, &mut scratch);
        self.fft2(&mut uy, true, &mut scratch);
        (ux.iter().map(|c| c.re).collect(), uy.iter().map(|c| c.re).collect())
    }
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], n: usize) {
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
}
