//! Exact discrete Helmholtz splitting `u = u_S + u_P` by Fourier projection.
//!
//! Per mode `xi != 0`: `P(xi) = xi xi^T / |xi|^2`, `u_P = P u`, `u_S = u - u_P`.
//! The constant mode is divergence-free and goes wholly to `u_S`; the potential
//! `phi` is normalized to zero mean.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{from_fourier, to_fourier, Grid, ScalarField, VectorField};

/// Relative projector residual above which a field is not treated as a gradient.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Divergence-free part (carries the mean).
    pub u_s: VectorField,
    /// Gradient part, `grad(phi)`.
    pub u_p: VectorField,
    /// Zero-mean potential.
    pub phi: ScalarField,
}

struct Split {
    s_hat: Vec<Vec<Complex64>>,
    p_hat: Vec<Vec<Complex64>>,
    phi_hat: Vec<Complex64>,
}

fn split_hat(grid: &Grid, hats: Vec<Vec<Complex64>>) -> Split {
    let zero = Complex64::new(0.0, 0.0);
    let d = grid.dim();
    let mut p_hat = vec![vec![zero; grid.len()]; d];
    let mut phi_hat = vec![zero; grid.len()];
    grid.for_each_mode(|i, xi| {
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        if k2 == 0.0 {
            return;
        }
        let dot: Complex64 = (0..d).map(|a| hats[a][i] * xi[a]).sum();
        for a in 0..d {
            p_hat[a][i] = dot * (xi[a] / k2);
        }
        // phi_hat = (xi . u_hat) / (i |xi|^2)
        phi_hat[i] = Complex64::new(dot.im, -dot.re) / k2;
    });
    let mut s_hat = hats;
    for (s, p) in s_hat.iter_mut().zip(&p_hat) {
        s.iter_mut().zip(p).for_each(|(a, b)| *a -= b);
    }
    Split {
        s_hat,
        p_hat,
        phi_hat,
    }
}

fn hats(u: &VectorField) -> Vec<Vec<Complex64>> {
    u.components()
        .iter()
        .map(|c| to_fourier(u.grid(), c))
        .collect()
}

fn back(grid: &Grid, hat: Vec<Vec<Complex64>>) -> VectorField {
    let comps = hat.into_iter().map(|h| from_fourier(grid, h)).collect();
    VectorField::from_components(*grid, comps).expect("shape preserved")
}

pub fn decompose(u: &VectorField) -> Decomposition {
    let grid = *u.grid();
    let split = split_hat(&grid, hats(u));
    Decomposition {
        u_s: back(&grid, split.s_hat),
        u_p: back(&grid, split.p_hat),
        phi: ScalarField::from_values(grid, from_fourier(&grid, split.phi_hat))
            .expect("shape preserved"),
    }
}

/// Gradient part `P u` only.
pub fn gradient_part(u: &VectorField) -> VectorField {
    let grid = *u.grid();
    back(&grid, split_hat(&grid, hats(u)).p_hat)
}

/// Zero-mean `phi` with `grad(phi) = u_p`, provided `u_p` is a gradient field.
pub fn potential_of_gradient(u_p: &VectorField) -> Result<ScalarField> {
    let grid = *u_p.grid();
    let split = split_hat(&grid, hats(u_p));
    // Parseval: the residual u - P u is the divergence-free part.
    let total: f64 = hats_norm(&split.s_hat) + hats_norm(&split.p_hat);
    let residual = hats_norm(&split.s_hat);
    if total > 0.0 {
        let rel = (residual / total).sqrt();
        if rel > GRADIENT_TOLERANCE {
            return Err(Error::NotGradient(rel));
        }
    }
    Ok(ScalarField::from_values(grid, from_fourier(&grid, split.phi_hat)).expect("shape preserved"))
}

fn hats_norm(h: &[Vec<Complex64>]) -> f64 {
    h.iter().flatten().map(|v| v.norm_sqr()).sum()
}
