//! Solves `Δ*u + k u - V u = f`, evaluates the a-priori quantities and
//! sweeps `k` over a rectangle of the complex plane.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{corrected_weighted_norm, dirichlet_energy, weighted_norm, Grid, VectorField};
use crate::helmholtz::decompose;
use crate::krylov::{gmres, GmresOptions};
use crate::lame::{free_shifted_inverse, LameParams, Potential};
use crate::multiplier::twisted_gradient;

type C = Complex64;

/// Required `‖Δ*u + ku - Vu - f‖ / ‖f‖`.
pub const SOLVE_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct ResolventOptions {
    /// Imaginary shift: the system is solved at `k + iη`.
    pub eta: f64,
    /// Free condition estimate above which `k` counts as resonant.
    pub resonance_threshold: f64,
    pub gmres: GmresOptions,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self {
            eta: 0.0,
            resonance_threshold: 1e10,
            gmres: GmresOptions {
                tol: 1e-11,
                max_iter: 3000,
                restart: 80,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: VectorField,
    pub residual: f64,
    pub iterations: usize,
    /// Condition estimate of the free part `-Δ* - k`.
    pub free_condition: f64,
}

/// `Δ*u + k u - V u` on a flat vector.
fn apply_system(grid: &Grid, p: &LameParams, v: &Potential, k: C, x: &[C]) -> Vec<C> {
    let mut y = crate::lame::apply_free_flat(grid, p, x);
    let vv = v.values().values();
    for (yc, xc) in y.chunks_exact_mut(grid.len()).zip(x.chunks_exact(grid.len())) {
        for ((yi, xi), vi) in yc.iter_mut().zip(xc).zip(vv) {
            *yi = -*yi + (k - vi) * xi;
        }
    }
    y
}

fn resonant(grid: &Grid, k: C, mode: usize, wave: &'static str, condition: f64) -> Error {
    let idx = grid.unravel(mode);
    Error::Resonant {
        k,
        mode: idx.iter().map(|&j| grid.mode_index(j)).collect(),
        wave,
        condition,
    }
}

/// Solves the system; see [`solve_with`].
pub fn solve(grid: &Grid, p: &LameParams, v: &Potential, k: C, f: &VectorField) -> Result<VectorField> {
    Ok(solve_with(grid, p, v, k, f, &ResolventOptions::default())?.u)
}

/// `V = 0` is solved exactly per Fourier mode; otherwise GMRES with the
/// free resolvent as right preconditioner. Near-singular free parts are
/// reported as resonant when `V = 0`.
pub fn solve_with(
    grid: &Grid,
    p: &LameParams,
    v: &Potential,
    k: C,
    f: &VectorField,
    opts: &ResolventOptions,
) -> Result<Solution> {
    p.require_elliptic()?;
    grid.check_same(f.grid())?;
    grid.check_same(v.grid())?;
    let z = k + C::new(0.0, opts.eta);
    let b: Vec<C> = f.to_flat();
    let minus_b: Vec<C> = b.iter().map(|x| -x).collect();
    let (x, iterations, condition) = if v.is_zero() {
        let inv = free_shifted_inverse(grid, p, z, &minus_b);
        let condition = inv.max_den / inv.min_den;
        if !(condition <= opts.resonance_threshold) {
            return Err(resonant(grid, z, inv.worst_mode, inv.worst_wave, condition));
        }
        (inv.x, 0, condition)
    } else {
        let probe = free_shifted_inverse(grid, p, z, &vec![C::new(0.0, 0.0); b.len()]);
        let condition = probe.max_den / probe.min_den;
        let apply = |x: &[C]| apply_system(grid, p, v, z, x);
        let precond = |x: &[C]| {
            let mut y = free_shifted_inverse(grid, p, z, x).x;
            y.iter_mut().for_each(|c| *c = -*c);
            y
        };
        let out = gmres(&apply, &precond, &b, &opts.gmres)?;
        (out.x, out.iterations, condition)
    };
    let r = apply_system(grid, p, v, z, &x);
    let bn = crate::krylov::norm2(&b);
    let res = crate::krylov::norm2(&r.iter().zip(&b).map(|(a, c)| a - c).collect::<Vec<_>>());
    let rel = if bn == 0.0 { res } else { res / bn };
    if !(rel <= SOLVE_RESIDUAL) {
        return Err(Error::NoConvergence {
            iterations,
            residual: rel,
        });
    }
    Ok(Solution {
        u: VectorField::from_flat(*grid, &x)?,
        residual: rel,
        iterations,
        free_condition: condition,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `|k₂| ≤ k₁`
    Oscillatory,
    /// `|k₂| > k₁`
    Dissipative,
}

impl Branch {
    pub fn of(k: C) -> Self {
        if k.im.abs() <= k.re {
            Branch::Oscillatory
        } else {
            Branch::Dissipative
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AprioriReport {
    pub branch: Branch,
    /// `‖∇u_S⁻‖`, `‖∇u_P⁻‖`; `None` when `k₁ < 0`.
    pub twisted_s: Option<f64>,
    pub twisted_p: Option<f64>,
    pub grad_u: f64,
    pub weighted_f: f64,
    pub inverse_weighted_u: f64,
}

impl AprioriReport {
    fn ratio(&self, x: f64) -> f64 {
        if self.weighted_f == 0.0 {
            0.0
        } else {
            x / self.weighted_f
        }
    }

    /// `‖|x|⁻¹u‖ / ‖|x|f‖`.
    pub fn resolvent_ratio(&self) -> f64 {
        self.ratio(self.inverse_weighted_u)
    }

    /// `‖∇u‖ / ‖|x|f‖`.
    pub fn gradient_ratio(&self) -> f64 {
        self.ratio(self.grad_u)
    }

    pub fn twisted_ratios(&self) -> (Option<f64>, Option<f64>) {
        (self.twisted_s.map(|x| self.ratio(x)), self.twisted_p.map(|x| self.ratio(x)))
    }
}

/// Tolerance on the relative residual accepted by [`apriori_report`].
pub const APRIORI_TOLERANCE: f64 = 1e-6;

/// Norms entering the a-priori estimates for a solution `u` of
/// `Δ*u + ku - Vu = f`. `‖|x|⁻¹u‖` uses the lattice-corrected singular rule.
pub fn apriori_report(u: &VectorField, f: &VectorField, k: C, p: &LameParams, v: &Potential) -> Result<AprioriReport> {
    let grid = *u.grid();
    grid.check_same(f.grid())?;
    let r = apply_system(&grid, p, v, k, &u.to_flat());
    let fl = f.to_flat();
    let res = crate::krylov::norm2(&r.iter().zip(&fl).map(|(a, b)| a - b).collect::<Vec<_>>());
    let scale = crate::krylov::norm2(&fl).max(crate::krylov::norm2(&r));
    if res > APRIORI_TOLERANCE * scale {
        return Err(Error::InvalidPair(res / scale));
    }
    let dec = decompose(u);
    let twisted = |w: &VectorField, c: f64| -> Result<Option<f64>> {
        if k.re < 0.0 {
            return Ok(None);
        }
        let rows = twisted_gradient(w, c, k)?;
        Ok(Some(rows.iter().map(|r| r.norm().powi(2)).sum::<f64>().sqrt()))
    };
    Ok(AprioriReport {
        branch: Branch::of(k),
        twisted_s: twisted(&dec.u_s, p.speed_s())?,
        twisted_p: twisted(&dec.u_p, p.speed_p())?,
        grad_u: dirichlet_energy(u).sqrt(),
        weighted_f: weighted_norm(f, 1.0),
        inverse_weighted_u: corrected_weighted_norm(u, -1.0),
    })
}

/// Rectangle `[re_min, re_max] × [im_min, im_max]` sampled at `n_re × n_im`
/// points including the corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

impl KRegion {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if self.n_re == 0 || self.n_im == 0 || !ok(self.re) || !ok(self.im) {
            return Err(Error::InvalidArgument(format!("bad k region {self:?}")));
        }
        Ok(())
    }

    /// Real part outer, imaginary part inner.
    pub fn points(&self) -> Vec<C> {
        let re = axis(self.re.0, self.re.1, self.n_re);
        let im = axis(self.im.0, self.im.1, self.n_im);
        re.iter().flat_map(|a| im.iter().map(move |b| C::new(*a, *b))).collect()
    }

    /// Doubled resolution: `2n - 1` points per axis, nesting the current ones.
    pub fn refined(&self) -> Self {
        let up = |n: usize| if n == 1 { 1 } else { 2 * n - 1 };
        Self {
            n_re: up(self.n_re),
            n_im: up(self.n_im),
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSweepResult {
    pub k_points: Vec<C>,
    /// `‖|x|⁻¹u‖ / ‖|x|f‖`, `None` where `k` was skipped as resonant.
    pub ratios: Vec<Option<f64>>,
    pub sup_ratio: f64,
    pub worst_k: C,
    pub skipped: Vec<C>,
}

/// Solves at every `k` in parallel; resonant points are skipped.
pub fn sweep(
    grid: &Grid,
    p: &LameParams,
    v: &Potential,
    f: &VectorField,
    k_points: &[C],
    opts: &ResolventOptions,
) -> Result<ResolventSweepResult> {
    let results: Vec<Result<Option<f64>>> = k_points
        .par_iter()
        .map(|&k| match solve_with(grid, p, v, k, f, opts) {
            Ok(sol) => {
                let num = corrected_weighted_norm(&sol.u, -1.0);
                let den = weighted_norm(f, 1.0);
                Ok(Some(if den == 0.0 { 0.0 } else { num / den }))
            }
            Err(Error::Resonant { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let ratios: Vec<Option<f64>> = results.into_iter().collect::<Result<_>>()?;
    let skipped: Vec<C> = k_points
        .iter()
        .zip(&ratios)
        .filter(|(_, r)| r.is_none())
        .map(|(k, _)| *k)
        .collect();
    let best = ratios
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|x| (i, x)))
        .fold(None, |acc: Option<(usize, f64)>, (i, x)| match acc {
            Some((_, m)) if m >= x => acc,
            _ => Some((i, x)),
        });
    let Some((i, sup_ratio)) = best else {
        return Err(Error::EmptySweep(k_points.len()));
    };
    Ok(ResolventSweepResult {
        k_points: k_points.to_vec(),
        ratios,
        sup_ratio,
        worst_k: k_points[i],
        skipped,
    })
}
