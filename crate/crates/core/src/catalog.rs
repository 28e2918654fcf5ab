//! Analytic test fields sampled on a grid.
//!
//! Integer parameters (axes, components) are 1-based, matching the usual
//! `x_1, ..., x_d` labelling. Gaussian families must decay inside the box:
//! `|center| + 6 sigma <= L`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{norm, Grid, ScalarField, VectorField};

/// Names accepted by [`sample_catalog_field`].
pub const CATALOG: &[&str] = &[
    "gaussian_bump",
    "divfree_mode",
    "gradient_mode",
    "plane_mode",
    "hardy_optimizer",
    "gaussian_gradient",
    "gaussian_rotation",
];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bad(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParams {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn index_param(name: &str, value: f64, dim: usize, what: &str) -> Result<usize> {
    if value.fract() != 0.0 || value < 1.0 || value > dim as f64 {
        return Err(bad(name, format!("{what} must be an integer in 1..={dim}, got {value}")));
    }
    Ok(value as usize - 1)
}

fn mode_param(name: &str, value: f64, grid: &Grid) -> Result<f64> {
    let half = (grid.n() / 2) as f64;
    if value.fract() != 0.0 || value.abs() >= half {
        return Err(bad(name, format!("mode must be an integer with |m| < {half}, got {value}")));
    }
    Ok(value)
}

fn arity(name: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(bad(name, format!("expected {allowed:?} parameters, got {}", params.len())))
    }
}

fn gaussian_width(name: &str, sigma: f64, center: &[f64], grid: &Grid) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(bad(name, "sigma must be positive"));
    }
    if norm(center) + 6.0 * sigma > grid.half_width() * (1.0 + 1e-12) {
        return Err(bad(
            name,
            format!(
                "field does not decay on the box: need |center| + 6 sigma <= L = {}",
                grid.half_width()
            ),
        ));
    }
    Ok(())
}

/// Optional trailing center coordinates; empty means the origin.
fn center_param(name: &str, rest: &[f64], dim: usize) -> Result<Vec<f64>> {
    match rest.len() {
        0 => Ok(vec![0.0; dim]),
        k if k == dim => Ok(rest.to_vec()),
        k => Err(bad(name, format!("center needs {dim} coordinates, got {k}"))),
    }
}

/// Samples a named analytic family.
///
/// | name | params | field |
/// |---|---|---|
/// | `gaussian_bump` | `sigma, component` | `e_c exp(-|x|^2 / 2 sigma^2)` |
/// | `divfree_mode` | `axis, component, m` (component != axis) | `e_c sin(pi m x_a / L)` |
/// | `gradient_mode` | `axis, m` | `grad cos(pi m x_a / L)` |
/// | `plane_mode` | `axis, component, m` | `e_c exp(i pi m x_a / L)` |
/// | `hardy_optimizer` | `eps` | `e_1` times [`hardy_profile`] |
/// | `gaussian_gradient` | `sigma [, center]` | `((x - x0) / sigma) g`, a pure gradient |
/// | `gaussian_rotation` | `sigma [, center]` | `(-(x_2 - x0_2), x_1 - x0_1, 0, ..) g / sigma`, divergence-free |
///
/// with `g = exp(-|x - x0|^2 / 2 sigma^2)`.
pub fn sample_catalog_field(name: &str, params: &[f64], grid: &Grid) -> Result<VectorField> {
    let d = grid.dim();
    let l = grid.half_width();
    match name {
        "gaussian_bump" => {
            arity(name, params, &[2])?;
            let sigma = params[0];
            gaussian_width(name, sigma, &[], grid)?;
            let comp = index_param(name, params[1], d, "component")?;
            Ok(VectorField::from_fn(*grid, |x, out| {
                out[comp] = c((-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp());
            }))
        }
        "divfree_mode" => {
            arity(name, params, &[3])?;
            let axis = index_param(name, params[0], d, "axis")?;
            let comp = index_param(name, params[1], d, "component")?;
            if axis == comp {
                return Err(bad(name, "component must differ from axis"));
            }
            let m = mode_param(name, params[2], grid)?;
            Ok(VectorField::from_fn(*grid, |x, out| {
                out[comp] = c((PI * m * x[axis] / l).sin());
            }))
        }
        "gradient_mode" => {
            arity(name, params, &[2])?;
            let axis = index_param(name, params[0], d, "axis")?;
            let m = mode_param(name, params[1], grid)?;
            let k = PI * m / l;
            Ok(VectorField::from_fn(*grid, |x, out| {
                out[axis] = c(-k * (k * x[axis]).sin());
            }))
        }
        "plane_mode" => {
            arity(name, params, &[3])?;
            let axis = index_param(name, params[0], d, "axis")?;
            let comp = index_param(name, params[1], d, "component")?;
            let m = mode_param(name, params[2], grid)?;
            Ok(VectorField::from_fn(*grid, |x, out| {
                out[comp] = Complex64::from_polar(1.0, PI * m * x[axis] / l);
            }))
        }
        "hardy_optimizer" => {
            arity(name, params, &[1])?;
            let profile = hardy_profile(grid, params[0])?;
            let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
            comps[0] = profile.into_values();
            VectorField::from_components(*grid, comps)
        }
        "gaussian_gradient" | "gaussian_rotation" => {
            if params.is_empty() {
                return Err(bad(name, "expected sigma [, center]"));
            }
            let sigma = params[0];
            let center = center_param(name, &params[1..], d)?;
            gaussian_width(name, sigma, &center, grid)?;
            if name == "gaussian_rotation" && d < 2 {
                return Err(bad(name, "needs d >= 2"));
            }
            let rotation = name == "gaussian_rotation";
            Ok(VectorField::from_fn(*grid, |x, out| {
                let y: Vec<f64> = x.iter().zip(&center).map(|(a, b)| a - b).collect();
                let g = (-y.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp();
                if rotation {
                    out[0] = c(-y[1] / sigma * g);
                    out[1] = c(y[0] / sigma * g);
                } else {
                    for (o, yi) in out.iter_mut().zip(&y) {
                        *o = c(yi / sigma * g);
                    }
                }
            }))
        }
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}

/// `C^infinity` step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Near-extremal profile for the classical Hardy quotient:
/// `|x|^{-(d-2)/2 + eps}`, cut off smoothly between `L/4` and `L/2`.
pub fn hardy_profile(grid: &Grid, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(bad("hardy_optimizer", "eps must be positive"));
    }
    let l = grid.half_width();
    let alpha = -(grid.dim() as f64 - 2.0) / 2.0 + eps;
    Ok(ScalarField::from_fn(*grid, |x| {
        let r = norm(x);
        c(r.powf(alpha) * smooth_step((l / 2.0 - r) / (l / 4.0)))
    }))
}

/// Real random field whose Fourier support is `|m_a| <= max_mode` on every axis.
pub fn random_band_limited<R: Rng + ?Sized>(grid: &Grid, max_mode: usize, rng: &mut R) -> VectorField {
    let comps = (0..grid.dim())
        .map(|_| random_scalar(grid, max_mode, rng).into_values())
        .collect();
    VectorField::from_components(*grid, comps).expect("component shapes match the grid")
}

/// Scalar analogue of [`random_band_limited`].
pub fn random_scalar<R: Rng + ?Sized>(grid: &Grid, max_mode: usize, rng: &mut R) -> ScalarField {
    let max = max_mode.min(grid.n() / 2 - 1) as i64;
    let mut hat = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, h) in hat.iter_mut().enumerate() {
        let idx = grid.unravel(i);
        if idx.iter().all(|&j| grid.mode_index(j).abs() <= max) {
            *h = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let values = crate::grid::from_fourier(grid, hat)
        .into_iter()
        .map(|v| c(v.re * grid.len() as f64))
        .collect();
    ScalarField::from_values(*grid, values).expect("length matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{divergence, inner_l2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn divfree_mode_matches_definition() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let u = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &g).unwrap();
        let mut max_err: f64 = 0.0;
        g.for_each_node(|i, x| {
            let want = (PI * x[0] / 2.0).sin();
            max_err = max_err.max((u.components()[1][i].re - want).abs());
            assert_eq!(u.components()[0][i], c(0.0));
            assert_eq!(u.components()[2][i], c(0.0));
        });
        assert!(max_err < 1e-15);
    }

    #[test]
    fn gradient_mode_matches_definition() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let u = sample_catalog_field("gradient_mode", &[1.0, 1.0], &g).unwrap();
        g.for_each_node(|i, x| {
            let want = -(PI / 2.0) * (PI * x[0] / 2.0).sin();
            assert!((u.components()[0][i].re - want).abs() < 1e-15);
        });
    }

    #[test]
    fn gaussian_bump_sampled_at_nodes() {
        let g = Grid::new(3, 16, 8.0).unwrap();
        let u = sample_catalog_field("gaussian_bump", &[1.0, 1.0], &g).unwrap();
        g.for_each_node(|i, x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert_eq!(u.components()[0][i], c((-r2 / 2.0).exp()));
        });
    }

    #[test]
    fn catalog_modes_are_orthogonal() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let a = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &g).unwrap();
        let b = sample_catalog_field("gradient_mode", &[1.0, 1.0], &g).unwrap();
        assert!(inner_l2(&a, &b).unwrap().norm() < 1e-14);
    }

    #[test]
    fn rejects_wide_gaussians_and_unknown_names() {
        let g = Grid::new(3, 16, 8.0).unwrap();
        assert!(sample_catalog_field("gaussian_bump", &[1.5, 1.0], &g).is_err());
        assert!(sample_catalog_field("gaussian_rotation", &[1.0, 3.0, 0.0, 0.0], &g).is_err());
        assert!(matches!(
            sample_catalog_field("nope", &[], &g),
            Err(Error::UnknownCatalog(_))
        ));
        assert!(sample_catalog_field("gradient_mode", &[4.0, 1.0], &g).is_err());
    }

    #[test]
    fn rotation_is_divergence_free() {
        let g = Grid::new(3, 48, 12.0).unwrap();
        let u = sample_catalog_field("gaussian_rotation", &[1.5], &g).unwrap();
        assert!(divergence(&u).max_abs() < 1e-9);
    }

    #[test]
    fn random_fields_are_real_and_band_limited() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_scalar(&g, 3, &mut rng);
        assert!(u.values().iter().all(|v| v.im == 0.0));
        let hat = crate::grid::to_fourier(&g, u.values());
        for (i, h) in hat.iter().enumerate() {
            let idx = g.unravel(i);
            if idx.iter().any(|&j| g.mode_index(j).abs() > 3) {
                assert!(h.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }
}
