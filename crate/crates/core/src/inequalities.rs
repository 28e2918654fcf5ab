//! Empirical constants: Hardy quotients, the smallness constant `Λ`, the
//! weaker constant `a`, the closed-form `Λ`-condition, and the weighted
//! regularity constant of the gradient projector.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{hardy_profile, random_band_limited, random_scalar, sample_catalog_field};
use crate::error::{Error, Result};
use crate::grid::{
    corrected_weighted_norm, from_fourier, gradient, norm, scalar_dirichlet_energy, to_fourier, weighted_norm, Field, Grid,
    ScalarField, VectorField,
};
use crate::helmholtz::gradient_part;
use crate::krylov::{lanczos_largest, random_unit};
use crate::lame::{check_coefficients, LameParams, Potential, PotentialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    GeneralizedEig,
    FamilySup,
}

#[derive(Clone, Debug)]
pub struct ConstantEstimate {
    pub value: f64,
    pub maximizer: Field,
    pub method: Method,
    pub resolution: Grid,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-12,
            seed: 0x5eed,
        }
    }
}

fn require_nonzero(psi: &ScalarField) -> Result<()> {
    if psi.max_abs() == 0.0 {
        Err(Error::ZeroField)
    } else {
        Ok(())
    }
}

/// `∫|ψ|²/|x|² / ∫|∇ψ|²` (classical) or `∫|ψ|²/|x| / ∫|x||∇ψ|²` (weighted).
///
/// The non-smooth weights are integrated with the lattice-corrected rule of
/// [`corrected_weighted_norm`]; the plain midpoint sum would miss an `O(h)`
/// share of the singular integral.
pub fn hardy_quotient(psi: &ScalarField, weighted: bool) -> Result<f64> {
    require_nonzero(psi)?;
    let d = psi.grid().dim();
    if weighted {
        if d < 2 {
            return Err(Error::InvalidArgument("weighted Hardy quotient needs d >= 2".into()));
        }
        let num = corrected_weighted_norm(psi, -0.5).powi(2);
        let den = corrected_weighted_norm(&gradient(psi), 0.5).powi(2);
        Ok(num / den)
    } else {
        if d < 3 {
            return Err(Error::InvalidArgument("classical Hardy quotient needs d >= 3".into()));
        }
        Ok(corrected_weighted_norm(psi, -1.0).powi(2) / scalar_dirichlet_energy(psi))
    }
}

/// Sharp continuum constant `4/(d-2)²` or, weighted, `4/(d-1)²`.
pub fn hardy_constant(d: usize, weighted: bool) -> f64 {
    let k = if weighted { d as f64 - 1.0 } else { d as f64 - 2.0 };
    4.0 / (k * k)
}

/// `(∫|x|²|V|²|ψ|² / ∫|∇ψ|²)^{1/2}` for one test function.
pub fn lambda_quotient(v: &Potential, psi: &ScalarField) -> Result<f64> {
    require_nonzero(psi)?;
    v.grid().check_same(psi.grid())?;
    let w = weight_x_abs_v(v);
    let h = psi.grid().cell_volume();
    let num: f64 = psi.values().iter().zip(&w).map(|(p, w)| w * w * p.norm_sqr()).sum::<f64>() * h;
    Ok((num / scalar_dirichlet_energy(psi)).sqrt())
}

fn weight_x_abs_v(v: &Potential) -> Vec<f64> {
    let vals = v.values().values();
    let mut w = vec![0.0; vals.len()];
    v.grid().for_each_node(|i, x| w[i] = norm(x) * vals[i].norm());
    w
}

/// Pseudo-inverse of `-Δ` on zero-mean fields.
fn inverse_laplacian(grid: &Grid, k2: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let mut hat = to_fourier(grid, x);
    hat.iter_mut()
        .zip(k2)
        .for_each(|(h, k)| *h = if *k == 0.0 { Complex64::new(0.0, 0.0) } else { *h / k });
    from_fourier(grid, hat)
}

/// Smallest discrete `Λ`: the square root of the top eigenvalue of
/// `W (-Δ)⁺ W`, `W = |x||V|`, which shares its nonzero spectrum with the
/// pencil `(|x|²|V|², -Δ)` on zero-mean fields. The maximizer is
/// `ψ = (-Δ)⁺ W w` for the top eigenvector `w`.
pub fn estimate_lambda(v: &Potential, opts: &LanczosOptions) -> Result<ConstantEstimate> {
    let grid = *v.grid();
    let w = weight_x_abs_v(v);
    if w.iter().all(|x| *x == 0.0) {
        return Ok(ConstantEstimate {
            value: 0.0,
            maximizer: Field::Scalar(ScalarField::zeros(grid)),
            method: Method::GeneralizedEig,
            resolution: grid,
        });
    }
    let k2 = grid.wavenumber_squares();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let wx: Vec<Complex64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        inverse_laplacian(&grid, &k2, &wx)
            .into_iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .collect()
    };
    let start: Vec<Complex64> = random_unit(grid.len(), opts.seed)
        .into_iter()
        .map(|c| Complex64::new(c.re, 0.0))
        .collect();
    let (theta, top) = lanczos_largest(&apply, start, opts.max_iter, opts.tol)?;
    let wtop: Vec<Complex64> = top.iter().zip(&w).map(|(a, b)| a * b).collect();
    let psi = ScalarField::from_values(grid, inverse_laplacian(&grid, &k2, &wtop))?;
    Ok(ConstantEstimate {
        value: theta.max(0.0).sqrt(),
        maximizer: Field::Scalar(psi),
        method: Method::GeneralizedEig,
        resolution: grid,
    })
}

/// `∫|V||ψ|² / ∫|∇ψ|²`.
///
/// For the analytic `a/|x|²` family the singular integral uses the
/// lattice-corrected rule; sampled potentials use the plain sum.
pub fn smallness_a_quotient(v: &Potential, psi: &ScalarField) -> Result<f64> {
    require_nonzero(psi)?;
    v.grid().check_same(psi.grid())?;
    if let Some(PotentialSpec::InverseSquare(a)) = v.spec() {
        return Ok(a.norm() * corrected_weighted_norm(psi, -1.0).powi(2) / scalar_dirichlet_energy(psi));
    }
    let h = psi.grid().cell_volume();
    let num: f64 = psi
        .values()
        .iter()
        .zip(v.values().values())
        .map(|(p, v)| v.norm() * p.norm_sqr())
        .sum::<f64>()
        * h;
    Ok(num / scalar_dirichlet_energy(psi))
}

/// Left side of the `Λ`-condition; the condition holds iff the result is `< 1`.
///
/// Returns `+∞` outside the domain (`d < 3`, non-elliptic coefficients,
/// negative `Λ` or `C`), where the condition cannot hold.
pub fn lambda_condition_lhs(lambda: f64, p: &LameParams, d: usize, c: f64) -> f64 {
    if d < 3 || !check_coefficients(p).ellipticity || lambda < 0.0 || c < 0.0 {
        return f64::INFINITY;
    }
    let d = d as f64;
    let a = lambda / p.min_speed();
    4.0 * a * d * (2.0 * d - 3.0) / (d - 2.0) * (c + 1.0)
        + 8.0 * a.powf(1.5) * d.powf(1.5) / (d - 2.0).sqrt() * (c + 1.0).powf(1.5)
}

/// `‖|x|^s P f‖ / ‖|x|^s f‖`, `P` the gradient-part projector.
pub fn regularity_ratio(f: &VectorField, s: f64) -> Result<f64> {
    let den = weighted_norm(f, s);
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(weighted_norm(&gradient_part(f), s) / den)
}

/// Family supremum of [`regularity_ratio`] over `trials` seeded random fields
/// plus catalog fields (a pure gradient among them, so the value is `>= 1`).
pub fn estimate_regularity_constant(
    grid: &Grid,
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    let d = grid.dim() as f64;
    if !(s > -d && s < d) {
        return Err(Error::InvalidArgument(format!("s = {s} outside (-{d}, {d})")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let l = grid.half_width();
    let sigma = l / 6.0;
    let mut fields: Vec<VectorField> = ["gaussian_gradient", "gaussian_rotation"]
        .iter()
        .map(|name| sample_catalog_field(name, &[sigma], grid))
        .collect::<Result<_>>()?;
    fields.push(sample_catalog_field("gaussian_bump", &[sigma, 1.0], grid)?);

    let random: Vec<VectorField> = (0..trials)
        .into_par_iter()
        .map(|t| regularity_trial(grid, seed, t as u64))
        .collect();
    fields.extend(random);

    let ratios: Vec<f64> = fields
        .par_iter()
        .map(|f| regularity_ratio(f, s))
        .collect::<Result<_>>()?;
    let (best, value) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if *r > acc.1 { (i, *r) } else { acc });
    Ok(ConstantEstimate {
        value,
        maximizer: Field::Vector(fields.swap_remove(best)),
        method: Method::FamilySup,
        resolution: *grid,
    })
}

/// One seeded random trial: a band-limited field, localized by a Gaussian
/// envelope of random center and width on odd trials.
fn regularity_trial(grid: &Grid, seed: u64, t: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    let max_mode = rng.random_range(1..=(grid.n() / 4).max(1));
    let f = random_band_limited(grid, max_mode, &mut rng);
    if t.is_multiple_of(2) {
        return f;
    }
    let l = grid.half_width();
    let width = rng.random_range(0.1 * l..0.3 * l);
    let center: Vec<f64> = (0..grid.dim()).map(|_| rng.random_range(-0.3 * l..0.3 * l)).collect();
    let env = ScalarField::from_fn(*grid, |x| {
        let r2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    });
    f.pointwise(env.values())
}

/// Scalar test family: Gaussians of several widths, the cut-off power
/// profiles, and seeded localized random fields.
pub fn scalar_test_family(grid: &Grid, trials: usize, seed: u64) -> Result<Vec<ScalarField>> {
    let l = grid.half_width();
    let mut family: Vec<ScalarField> = Vec::new();
    for frac in [0.05, 0.1, 0.15] {
        let sigma = frac * l;
        family.push(ScalarField::from_fn(*grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        }));
    }
    if grid.dim() >= 2 {
        for eps in [0.05, 0.1, 0.2, 0.5] {
            family.push(hardy_profile(grid, eps)?);
        }
    }
    let random: Vec<ScalarField> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let f = random_scalar(grid, rng.random_range(1..=(grid.n() / 4).max(1)), &mut rng);
            let width = rng.random_range(0.05 * l..0.15 * l);
            let vals = f
                .values()
                .iter()
                .zip(grid.radii())
                .map(|(v, r)| v * (-r * r / (2.0 * width * width)).exp())
                .collect();
            ScalarField::from_values(*grid, vals).expect("length matches")
        })
        .collect();
    family.extend(random);
    Ok(family)
}

fn family_sup(family: Vec<ScalarField>, q: impl Fn(&ScalarField) -> Result<f64> + Sync, grid: &Grid) -> Result<ConstantEstimate> {
    let values: Vec<f64> = family.par_iter().map(&q).collect::<Result<_>>()?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if *r > acc.1 { (i, *r) } else { acc });
    let mut family = family;
    Ok(ConstantEstimate {
        value,
        maximizer: Field::Scalar(family.swap_remove(best)),
        method: Method::FamilySup,
        resolution: *grid,
    })
}

/// Supremum of the Hardy quotient over [`scalar_test_family`].
pub fn hardy_family_sup(grid: &Grid, weighted: bool, trials: usize, seed: u64) -> Result<ConstantEstimate> {
    family_sup(scalar_test_family(grid, trials, seed)?, |psi| hardy_quotient(psi, weighted), grid)
}

/// Supremum of [`smallness_a_quotient`] over [`scalar_test_family`] plus the
/// maximizer of `Λ`.
pub fn estimate_smallness_a(v: &Potential, trials: usize, seed: u64, opts: &LanczosOptions) -> Result<ConstantEstimate> {
    let grid = *v.grid();
    let mut family = scalar_test_family(&grid, trials, seed)?;
    if let Field::Scalar(psi) = estimate_lambda(v, opts)?.maximizer {
        if psi.max_abs() > 0.0 {
            family.push(psi);
        }
    }
    family_sup(family, |psi| smallness_a_quotient(v, psi), &grid)
}
