//! Eigenvalue experiments for the discretized `-Δ* + V`.
//!
//! Small systems (`N = d·n^d ≤ 6000`) are solved densely: Hermitian
//! eigensolver for real `V`, general complex eigensolver otherwise. Larger
//! systems use shift-invert Arnoldi around a complex shift, with the inner
//! solves done by GMRES preconditioned with the exact free resolvent.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::krylov::{arnoldi_dominant, gmres, norm2, ArnoldiOptions, GmresOptions};
use crate::lame::{apply_free_flat, free_shifted_inverse, LameParams, Potential};

/// Largest `N` solved with a dense eigensolver.
pub const DENSE_LIMIT: usize = 6000;

/// Required `‖Av - λv‖ / ‖v‖` for every reported pair.
pub const EIGEN_RESIDUAL: f64 = 1e-8;

type C = Complex64;

/// Matrix-free `-Δ* + V` on a fixed grid.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    grid: Grid,
    params: LameParams,
    potential: Potential,
}

pub fn assemble(grid: Grid, p: LameParams, v: Potential) -> Result<OperatorHandle> {
    p.require_elliptic()?;
    grid.check_same(v.grid())?;
    Ok(OperatorHandle {
        grid,
        params: p,
        potential: v,
    })
}

impl OperatorHandle {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &LameParams {
        &self.params
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `N = d·n^d`.
    pub fn dimension(&self) -> usize {
        self.grid.dim() * self.grid.len()
    }

    /// Apply to a component-major flat vector.
    pub fn apply_flat(&self, x: &[C]) -> Vec<C> {
        let mut y = apply_free_flat(&self.grid, &self.params, x);
        let v = self.potential.values().values();
        for (yc, xc) in y.chunks_exact_mut(self.grid.len()).zip(x.chunks_exact(self.grid.len())) {
            for ((yi, xi), vi) in yc.iter_mut().zip(xc).zip(v) {
                *yi += vi * xi;
            }
        }
        y
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        self.grid.check_same(u.grid())?;
        VectorField::from_flat(self.grid, &self.apply_flat(&u.to_flat()))
    }

    /// Dense matrix, column by column through the matrix-free apply.
    pub fn to_dense(&self) -> Mat<C> {
        let n = self.dimension();
        let mut m = Mat::<C>::zeros(n, n);
        let mut e = vec![C::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C::new(1.0, 0.0);
            let col = self.apply_flat(&e);
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
            e[j] = C::new(0.0, 0.0);
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    DenseHermitian,
    DenseGeneral,
    ShiftInvert,
}

/// Eigenpairs nearest a shift, with per-pair diagnostics.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub grid: Grid,
    pub method: SolveMethod,
    pub eigenvalues: Vec<C>,
    pub vectors: Vec<VectorField>,
    /// `‖Av - λv‖ / ‖v‖` through the matrix-free apply.
    pub residuals: Vec<f64>,
    /// Mass fraction in `|x| ≤ L/2`.
    pub localization: Vec<f64>,
    /// Relative drift to the matched eigenvalue on the doubled domain; `None`
    /// until [`classify_point_spectrum`] has run.
    pub drift: Vec<Option<f64>>,
    pub candidate: Vec<bool>,
}

impl SpectralReport {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn candidates(&self) -> Vec<C> {
        self.eigenvalues
            .iter()
            .zip(&self.candidate)
            .filter(|(_, c)| **c)
            .map(|(e, _)| *e)
            .collect()
    }

    pub fn min_real_part(&self) -> Option<f64> {
        self.eigenvalues.iter().map(|e| e.re).min_by(f64::total_cmp)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub n_eigs: usize,
    pub shift: C,
    /// Arnoldi subspace size; `0` picks `max(2·n_eigs + 10, 24)`.
    pub ncv: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Force the iterative path even when a dense solve is allowed.
    pub force_iterative: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            n_eigs: 6,
            shift: C::new(0.0, 0.0),
            ncv: 0,
            max_restarts: 200,
            seed: 0x5eed,
            force_iterative: false,
        }
    }
}

/// The `n_eigs` eigenpairs nearest `shift`, ordered by distance to it.
pub fn compute_spectrum(h: &OperatorHandle, opts: &SpectrumOptions) -> Result<SpectralReport> {
    if opts.n_eigs == 0 {
        return Err(Error::InvalidArgument("n_eigs must be at least 1".into()));
    }
    let n = h.dimension();
    let nev = opts.n_eigs.min(n);
    let (method, mut pairs) = if n <= DENSE_LIMIT && !opts.force_iterative {
        dense_pairs(h)?
    } else {
        (SolveMethod::ShiftInvert, shift_invert_pairs(h, nev, opts)?)
    };
    pairs.sort_by(|a, b| (a.0 - opts.shift).norm().total_cmp(&(b.0 - opts.shift).norm()));
    pairs.truncate(nev);

    let mut report = SpectralReport {
        grid: h.grid,
        method,
        eigenvalues: Vec::with_capacity(nev),
        vectors: Vec::with_capacity(nev),
        residuals: Vec::with_capacity(nev),
        localization: Vec::with_capacity(nev),
        drift: vec![None; pairs.len()],
        candidate: vec![false; pairs.len()],
    };
    for (lam, v) in pairs {
        let av = h.apply_flat(&v);
        let r: f64 = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - lam * x).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / norm2(&v);
        if !(r <= EIGEN_RESIDUAL) {
            return Err(Error::NoConvergence {
                iterations: opts.max_restarts,
                residual: r,
            });
        }
        let field = VectorField::from_flat(h.grid, &v)?;
        report.localization.push(localization_score(&field)?);
        report.eigenvalues.push(lam);
        report.vectors.push(field);
        report.residuals.push(r);
    }
    Ok(report)
}

/// Eigenpairs as `(value, vector)`.
type Pairs = Vec<(C, Vec<C>)>;

fn dense_pairs(h: &OperatorHandle) -> Result<(SolveMethod, Pairs)> {
    let a = h.to_dense();
    let n = a.nrows();
    if h.potential.is_real() {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let pairs = (0..n)
            .map(|i| {
                let v = (0..n).map(|r| evd.U()[(r, i)]).collect();
                (evd.S()[i], v)
            })
            .collect();
        Ok((SolveMethod::DenseHermitian, pairs))
    } else {
        let evd = a.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let pairs = (0..n)
            .map(|i| {
                let v = (0..n).map(|r| evd.U()[(r, i)]).collect();
                (evd.S()[i], v)
            })
            .collect();
        Ok((SolveMethod::DenseGeneral, pairs))
    }
}

fn shift_invert_pairs(h: &OperatorHandle, nev: usize, opts: &SpectrumOptions) -> Result<Pairs> {
    let sigma = opts.shift;
    let shifted = |x: &[C]| -> Vec<C> {
        let mut y = h.apply_flat(x);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi -= sigma * xi);
        y
    };
    let precond = |x: &[C]| free_shifted_inverse(&h.grid, &h.params, sigma, x).x;
    let gm = GmresOptions {
        tol: 1e-12,
        max_iter: 4000,
        restart: 80,
    };
    let inverse = |x: &[C]| -> Result<Vec<C>> { Ok(gmres(&shifted, &precond, x, &gm)?.x) };
    let ncv = if opts.ncv == 0 { (2 * nev + 10).max(24) } else { opts.ncv };
    let ao = ArnoldiOptions {
        nev,
        ncv,
        max_restarts: opts.max_restarts,
        tol: 1e-12,
        seed: opts.seed,
    };
    let pairs = arnoldi_dominant(&inverse, h.dimension(), &ao)?;
    Ok(pairs.into_iter().map(|(nu, v)| (sigma + nu.inv(), v)).collect())
}

/// Mass fraction of `v` in the ball `|x| ≤ L/2`.
pub fn localization_score(v: &VectorField) -> Result<f64> {
    let grid = v.grid();
    let r0 = grid.half_width() / 2.0;
    let radii = grid.radii();
    let mut inside = 0.0;
    let mut total = 0.0;
    for c in v.components() {
        for (x, r) in c.iter().zip(&radii) {
            let m = x.norm_sqr();
            total += m;
            if *r <= r0 {
                inside += m;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(inside / total)
}

/// Thresholds of [`classify_point_spectrum`].
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub max_drift: f64,
    pub min_localization: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            max_drift: 1e-2,
            min_localization: 0.5,
        }
    }
}

fn relative_drift(a: C, b: C) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Marks the eigenvalues of `on_l` that reappear on the doubled domain
/// `on_2l` within `max_drift` (relative) and are localized on both.
pub fn classify_point_spectrum(
    on_l: &SpectralReport,
    on_2l: &SpectralReport,
    opts: &ClassifyOptions,
) -> Result<SpectralReport> {
    let (g1, g2) = (on_l.grid, on_2l.grid);
    let same_spacing = (g1.spacing() - g2.spacing()).abs() <= 1e-9 * g1.spacing();
    if g1.dim() != g2.dim() || !same_spacing || g2.half_width() <= g1.half_width() {
        return Err(Error::InvalidArgument(
            "reports must share dimension and spacing, the second on the larger domain".into(),
        ));
    }
    let mut out = on_l.clone();
    for (i, lam) in on_l.eigenvalues.iter().enumerate() {
        let best = on_2l
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(j, mu)| (j, relative_drift(*lam, *mu)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        out.drift[i] = best.map(|b| b.1);
        out.candidate[i] = match best {
            Some((j, drift)) => {
                drift <= opts.max_drift
                    && on_l.localization[i] > opts.min_localization
                    && on_2l.localization[j] > opts.min_localization
            }
            None => false,
        };
    }
    Ok(out)
}
