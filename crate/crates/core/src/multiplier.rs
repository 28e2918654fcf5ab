//! Numerical oracle for the multiplier identities of the decoupled system
//! `c Δu + k u = f` (`c` one of the speeds `μ`, `λ+2μ`).
//!
//! Pairing convention: `u` is real and `∫ φ u f` means `∫ φ Σ_i u_i f_i`,
//! computed as `inner_l2(φ f, u)` (the conjugation lands on the real `u`, so
//! `f` is never conjugated). With this convention `Im f = k₂ u` and all
//! manufactured residuals vanish up to quadrature error.
//!
//! Radial weights carry analytic derivatives up to fourth order; no weight
//! is ever differentiated numerically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, inner_l2, jacobian, norm, vector_laplacian, Grid, VectorField};
use crate::helmholtz::{decompose, Decomposition};
use crate::lame::{apply_lame, LameParams, Potential};

/// Tolerance on the relative PDE residual accepted by [`ComponentPair::new`].
pub const PAIR_TOLERANCE: f64 = 1e-8;

/// Imaginary parts below this fraction of the maximum count as real.
const REAL_TOLERANCE: f64 = 1e-12;

/// Radial profile `ψ(r)` of a weight `φ(x) = scale · ψ(|x|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `r²`
    Quadratic,
    /// `r`
    Linear,
    /// `1`
    Constant,
    /// `exp(-r² / (2 s²))`
    Gaussian { width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialWeight {
    pub profile: Profile,
    pub scale: f64,
}

impl RadialWeight {
    pub fn new(profile: Profile) -> Self {
        Self { profile, scale: 1.0 }
    }

    pub fn quadratic() -> Self {
        Self::new(Profile::Quadratic)
    }

    pub fn linear() -> Self {
        Self::new(Profile::Linear)
    }

    pub fn constant() -> Self {
        Self::new(Profile::Constant)
    }

    pub fn gaussian(width: f64) -> Self {
        Self::new(Profile::Gaussian { width })
    }

    pub fn scaled(self, by: f64) -> Self {
        Self {
            scale: self.scale * by,
            ..self
        }
    }

    pub fn name(&self) -> String {
        let base = match self.profile {
            Profile::Quadratic => "|x|^2".to_string(),
            Profile::Linear => "|x|".to_string(),
            Profile::Constant => "1".to_string(),
            Profile::Gaussian { width } => format!("gaussian({width})"),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    /// `[ψ, ψ′, ψ″, ψ‴, ψ⁗]` at radius `r`, including the scale.
    pub fn derivatives(&self, r: f64) -> [f64; 5] {
        let d = match self.profile {
            Profile::Quadratic => [r * r, 2.0 * r, 2.0, 0.0, 0.0],
            Profile::Linear => [r, 1.0, 0.0, 0.0, 0.0],
            Profile::Constant => [1.0, 0.0, 0.0, 0.0, 0.0],
            Profile::Gaussian { width } => {
                let s2 = width * width;
                let g = (-r * r / (2.0 * s2)).exp();
                [
                    g,
                    -r / s2 * g,
                    (r * r / (s2 * s2) - 1.0 / s2) * g,
                    (3.0 * r / (s2 * s2) - r.powi(3) / (s2 * s2 * s2)) * g,
                    (3.0 / (s2 * s2) - 6.0 * r * r / (s2 * s2 * s2) + r.powi(4) / (s2 * s2 * s2 * s2)) * g,
                ]
            }
        };
        d.map(|v| v * self.scale)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.derivatives(norm(x))[0]
    }

    /// `∇φ = ψ′ x / |x|`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        let p1 = self.derivatives(r)[1];
        x.iter().map(|v| p1 * v / r).collect()
    }

    /// `Δφ = ψ″ + (d-1) ψ′ / r`.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let d = x.len() as f64;
        let p = self.derivatives(r);
        p[2] + (d - 1.0) * p[1] / r
    }

    /// `D²φ = ψ″ x xᵀ / r² + (ψ′ / r)(I - x xᵀ / r²)`, row-major.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        let d = x.len();
        let p = self.derivatives(r);
        let mut h = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let xx = x[a] * x[b] / (r * r);
                let id = if a == b { 1.0 } else { 0.0 };
                h[a * d + b] = p[2] * xx + p[1] / r * (id - xx);
            }
        }
        h
    }

    /// `Δ²φ = ψ⁗ + 2(d-1)ψ‴/r + (d-1)(d-3)ψ″/r² - (d-1)(d-3)ψ′/r³`.
    pub fn bilaplacian(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let d = x.len() as f64;
        let p = self.derivatives(r);
        let e = (d - 1.0) * (d - 3.0);
        p[4] + 2.0 * (d - 1.0) * p[3] / r + e * p[2] / (r * r) - e * p[1] / r.powi(3)
    }

    fn sample(&self, grid: &Grid, f: impl Fn(&Self, &[f64]) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        grid.for_each_node(|i, x| out[i] = f(self, x));
        out
    }
}

/// One identity evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Named contributions (left-side pieces, then right-side pieces).
    pub terms: Vec<(&'static str, f64)>,
}

impl IdentityReport {
    fn new(identity: &'static str, lhs: f64, rhs: f64, terms: Vec<(&'static str, f64)>) -> Self {
        Self {
            identity,
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            terms,
        }
    }

    /// `|lhs| + |rhs|`.
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.rhs.abs()
    }

    /// Residual relative to [`Self::scale`]; zero when both sides vanish.
    pub fn relative(&self) -> f64 {
        if self.scale() == 0.0 {
            0.0
        } else {
            self.residual / self.scale()
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// A solution `u` of `c Δu + k u = f` with real `u`.
#[derive(Clone, Debug)]
pub struct ComponentPair {
    u: VectorField,
    f: VectorField,
    c: f64,
    k: Complex64,
}

fn require_real(u: &VectorField) -> Result<()> {
    if u.is_real(REAL_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::ComplexField("multiplier identities need a real u"))
    }
}

impl ComponentPair {
    /// Validates reality of `u` and the PDE to [`PAIR_TOLERANCE`].
    pub fn new(u: VectorField, f: VectorField, c: f64, k: Complex64) -> Result<Self> {
        u.grid().check_same(f.grid())?;
        require_real(&u)?;
        let lhs = &(&vector_laplacian(&u) * c) + &(&u * k);
        let scale = lhs.norm().max(f.norm());
        let res = (&lhs - &f).norm();
        if res > PAIR_TOLERANCE * scale {
            return Err(Error::InvalidPair(res / scale));
        }
        Ok(Self { u, f, c, k })
    }

    /// No validation; for deliberately perturbed pairs.
    pub fn new_unchecked(u: VectorField, f: VectorField, c: f64, k: Complex64) -> Self {
        Self { u, f, c, k }
    }

    /// `f := c Δu + k u`.
    pub fn manufacture(u: VectorField, c: f64, k: Complex64) -> Result<Self> {
        require_real(&u)?;
        let f = &(&vector_laplacian(&u) * c) + &(&u * k);
        Ok(Self { u, f, c, k })
    }

    pub fn u(&self) -> &VectorField {
        &self.u
    }

    pub fn f(&self) -> &VectorField {
        &self.f
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn with_f(&self, f: VectorField) -> Self {
        Self { f, ..self.clone() }
    }

    fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

/// Full-field manufactured pair `Δ*u + k u = f`, with both decompositions.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub u: VectorField,
    pub f: VectorField,
    pub params: LameParams,
    pub k: Complex64,
    pub u_dec: Decomposition,
    pub f_dec: Decomposition,
}

impl Manufactured {
    /// `(u_S, f_S)` at speed `μ`.
    ///
    /// The projection of a real field is real up to roundoff and the
    /// (asymmetric) Nyquist plane, so `u_S` is replaced by its real part.
    pub fn s_pair(&self) -> ComponentPair {
        ComponentPair::new_unchecked(self.u_dec.u_s.real_part(), self.f_dec.u_s.clone(), self.params.speed_s(), self.k)
    }

    /// `(u_P, f_P)` at speed `λ+2μ`; see [`Self::s_pair`].
    pub fn p_pair(&self) -> ComponentPair {
        ComponentPair::new_unchecked(self.u_dec.u_p.real_part(), self.f_dec.u_p.clone(), self.params.speed_p(), self.k)
    }
}

/// `f := Δ*u + k u = -(-Δ*u) + k u` for real `u`.
pub fn manufacture_f(u: &VectorField, p: &LameParams, k: Complex64) -> Result<Manufactured> {
    require_real(u)?;
    let f = &(&apply_lame(u, p)? * -1.0) + &(u * k);
    Ok(Manufactured {
        u_dec: decompose(u),
        f_dec: decompose(&f),
        u: u.clone(),
        f,
        params: *p,
        k,
    })
}

fn integrate(grid: &Grid, w: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    grid.cell_volume() * w.iter().zip(values).map(|(a, b)| a * b).sum::<f64>()
}

fn abs2(u: &VectorField) -> Vec<f64> {
    let mut out = vec![0.0; u.grid().len()];
    for c in u.components() {
        out.iter_mut().zip(c).for_each(|(o, v)| *o += v.norm_sqr());
    }
    out
}

fn grad_abs2(jac: &[VectorField]) -> Vec<f64> {
    let mut out = vec![0.0; jac[0].grid().len()];
    for row in jac {
        for c in row.components() {
            out.iter_mut().zip(c).for_each(|(o, v)| *o += v.norm_sqr());
        }
    }
    out
}

/// `∫ w Σ_i u_i f_i` for real `u`.
fn weighted_pairing(grid: &Grid, w: &[f64], u: &VectorField, f: &VectorField) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (uc, fc) in u.components().iter().zip(f.components()) {
        for ((wi, ui), fi) in w.iter().zip(uc).zip(fc) {
            s += fi * ui.conj() * *wi;
        }
    }
    s * grid.cell_volume()
}

/// `k₁∫φ|u|² - c∫φ|∇u|² + (c/2)∫Δφ|u|² = Re ∫ φ u f`.
pub fn identity_first(pair: &ComponentPair, w: &RadialWeight) -> IdentityReport {
    let grid = pair.grid();
    let (c, k) = (pair.c, pair.k);
    let phi = w.sample(grid, |w, x| w.value(x));
    let lap = w.sample(grid, |w, x| w.laplacian(x));
    let u2 = abs2(&pair.u);
    let g2 = grad_abs2(&jacobian(&pair.u));
    let t1 = k.re * integrate(grid, &phi, u2.iter().copied());
    let t2 = -c * integrate(grid, &phi, g2.iter().copied());
    let t3 = c / 2.0 * integrate(grid, &lap, u2.iter().copied());
    let rhs = weighted_pairing(grid, &phi, &pair.u, &pair.f).re;
    IdentityReport::new(
        "first",
        t1 + t2 + t3,
        rhs,
        vec![("mass", t1), ("gradient", t2), ("laplacian_weight", t3), ("pairing", rhs)],
    )
}

/// `k₂∫φ|u|² = Im ∫ φ u f`.
pub fn identity_second(pair: &ComponentPair, w: &RadialWeight) -> IdentityReport {
    let grid = pair.grid();
    let phi = w.sample(grid, |w, x| w.value(x));
    let lhs = pair.k.im * integrate(grid, &phi, abs2(&pair.u).into_iter());
    let rhs = weighted_pairing(grid, &phi, &pair.u, &pair.f).im;
    IdentityReport::new("second", lhs, rhs, vec![("mass", lhs), ("pairing", rhs)])
}

/// `c∫∇u·D²φ·∇u - (c/4)∫Δ²φ|u|² = -Re∫(∇φ·∇u_i) f_i - ½Re∫Δφ u f`.
pub fn identity_third(pair: &ComponentPair, w: &RadialWeight) -> IdentityReport {
    let grid = pair.grid();
    let d = grid.dim();
    let c = pair.c;
    let jac = jacobian(&pair.u);
    let mut hess_term = 0.0;
    let mut grad_pair = Complex64::new(0.0, 0.0);
    grid.for_each_node(|n, x| {
        let hm = w.hessian(x);
        let gphi = w.gradient(x);
        for (i, row) in jac.iter().enumerate() {
            let gu: Vec<Complex64> = (0..d).map(|a| row.components()[a][n]).collect();
            for a in 0..d {
                for b in 0..d {
                    hess_term += hm[a * d + b] * (gu[a].conj() * gu[b]).re;
                }
            }
            let dir: Complex64 = (0..d).map(|a| gu[a] * gphi[a]).sum();
            grad_pair += dir.conj() * pair.f.components()[i][n];
        }
    });
    let h = grid.cell_volume();
    let t1 = c * h * hess_term;
    let bilap = w.sample(grid, |w, x| w.bilaplacian(x));
    let t2 = -c / 4.0 * integrate(grid, &bilap, abs2(&pair.u).into_iter());
    let lap = w.sample(grid, |w, x| w.laplacian(x));
    let r1 = -(grad_pair * h).re;
    let r2 = -0.5 * weighted_pairing(grid, &lap, &pair.u, &pair.f).re;
    IdentityReport::new(
        "third",
        t1 + t2,
        r1 + r2,
        vec![("hessian", t1), ("bilaplacian", t2), ("radial_pairing", r1), ("laplacian_pairing", r2)],
    )
}

fn sign_plus(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Phase rate `α = √k₁/√c` and `sgn(k₂)` with `sgn(0) = +1`.
fn twist(c: f64, k: Complex64) -> Result<(f64, f64)> {
    if k.re < 0.0 {
        return Err(Error::Branch {
            k,
            reason: "the twisted field needs Re k >= 0",
        });
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("speed must be positive, got {c}")));
    }
    Ok((k.re.sqrt() / c.sqrt(), sign_plus(k.im)))
}

fn phase(grid: &Grid, alpha: f64, s: f64) -> Vec<Complex64> {
    let mut ph = vec![Complex64::new(0.0, 0.0); grid.len()];
    grid.for_each_node(|i, x| ph[i] = Complex64::from_polar(1.0, -alpha * s * norm(x)));
    ph
}

/// `u⁻ = √c · exp(-i (√k₁/√c) sgn(k₂) |x|) · u`.
pub fn twisted_field(u: &VectorField, c: f64, k: Complex64) -> Result<VectorField> {
    let (alpha, s) = twist(c, k)?;
    Ok(&u.pointwise(&phase(u.grid(), alpha, s)) * c.sqrt())
}

/// Jacobian rows of `u⁻` by the product rule:
/// `∂_a u⁻_i = √c e^{-iαs|x|} (∂_a u_i - iαs (x_a/|x|) u_i)`.
///
/// The phase derivative is analytic; only `∇u` is taken spectrally, which
/// avoids differentiating the `|x|` cone at the origin.
pub fn twisted_gradient(u: &VectorField, c: f64, k: Complex64) -> Result<Vec<VectorField>> {
    let (alpha, s) = twist(c, k)?;
    let grid = *u.grid();
    let ph = phase(&grid, alpha, s);
    let jac = jacobian(u);
    let mut unit = vec![vec![0.0; grid.len()]; grid.dim()];
    grid.for_each_node(|i, x| {
        let r = norm(x);
        for (a, col) in unit.iter_mut().enumerate() {
            col[i] = x[a] / r;
        }
    });
    let sc = c.sqrt();
    let rows = jac
        .into_iter()
        .zip(u.components())
        .map(|(row, ui)| {
            let comps = row
                .components()
                .iter()
                .zip(&unit)
                .map(|(da, xa)| {
                    da.iter()
                        .zip(xa)
                        .zip(ui)
                        .zip(&ph)
                        .map(|(((g, xh), v), p)| p * sc * (g - Complex64::new(0.0, alpha * s * xh) * v))
                        .collect()
                })
                .collect();
            VectorField::from_components(grid, comps).expect("shape preserved")
        })
        .collect();
    Ok(rows)
}

/// `‖∇u⁻‖² = c‖∇u‖² + k₁‖u‖²` for real `u`.
pub fn identity_twisted_gradient(u: &VectorField, c: f64, k: Complex64) -> Result<IdentityReport> {
    require_real(u)?;
    let jac = twisted_gradient(u, c, k)?;
    let lhs = jac.iter().map(|r| r.norm().powi(2)).sum::<f64>();
    let t1 = c * dirichlet_energy(u);
    let t2 = k.re * u.norm().powi(2);
    Ok(IdentityReport::new(
        "twisted_gradient",
        lhs,
        t1 + t2,
        vec![("twisted_gradient", lhs), ("gradient", t1), ("mass", t2)],
    ))
}

/// Combined identity `I = I⁽¹⁾ + I⁽²⁾ + I⁽³⁾` on the branch `|k₂| ≤ k₁`, `k₁ > 0`:
///
/// - `I = ‖∇u⁻‖² + β∫|x||∇u⁻|² - √c ((d-1)/2)(|k₂|/√k₁)∫|u|²/|x|`, `β = |k₂|/(√c√k₁)`
/// - `I⁽¹⁾ = (1-d) Re∫u f`
/// - `I⁽²⁾ = -2 Re∫|x| Σ_i f_i (∂_r u_i + iα sgn(k₂) u_i)`
/// - `I⁽³⁾ = -β Re∫|x| u f`
pub fn identity_fund(pair: &ComponentPair) -> Result<IdentityReport> {
    require_real(&pair.u)?;
    let (c, k) = (pair.c, pair.k);
    if !(k.re > 0.0) || k.im.abs() > k.re {
        return Err(Error::Branch {
            k,
            reason: "the combined identity needs |Im k| <= Re k and Re k > 0",
        });
    }
    let grid = pair.grid();
    let d = grid.dim() as f64;
    let (alpha, s) = twist(c, k)?;
    let beta = k.im.abs() / (c.sqrt() * k.re.sqrt());
    let r = grid.radii();
    let inv_r: Vec<f64> = r.iter().map(|v| 1.0 / v).collect();

    let tg = grad_abs2(&twisted_gradient(&pair.u, c, k)?);
    let l0 = integrate(grid, &vec![1.0; grid.len()], tg.iter().copied());
    let l1 = beta * integrate(grid, &r, tg.iter().copied());
    let l2 = -c.sqrt() * (d - 1.0) / 2.0 * k.im.abs() / k.re.sqrt()
        * integrate(grid, &inv_r, abs2(&pair.u).into_iter());

    let i1 = (1.0 - d) * inner_l2(&pair.f, &pair.u)?.re;
    // ∂_r u_i + iαs u_i
    let jac = jacobian(&pair.u);
    let mut i2 = Complex64::new(0.0, 0.0);
    grid.for_each_node(|n, x| {
        let rn = r[n];
        for (i, row) in jac.iter().enumerate() {
            let dr: Complex64 = row.components().iter().zip(x).map(|(g, xa)| g[n] * (xa / rn)).sum();
            let bracket = dr + Complex64::new(0.0, alpha * s) * pair.u.components()[i][n];
            i2 += pair.f.components()[i][n] * bracket * rn;
        }
    });
    let i2 = -2.0 * (i2 * grid.cell_volume()).re;
    let i3 = -beta * weighted_pairing(grid, &r, &pair.u, &pair.f).re;
    Ok(IdentityReport::new(
        "fund",
        l0 + l1 + l2,
        i1 + i2 + i3,
        vec![
            ("I_gradient", l0),
            ("I_weighted_gradient", l1),
            ("I_inverse_radius", l2),
            ("I1", i1),
            ("I2", i2),
            ("I3", i3),
        ],
    ))
}

/// The combination `first(1) + √k₁·second((2 sgn(k₂)/√c)|x|) + third(|x|²)
/// - first(β|x|)`, evaluated term by term. Its two sides must reproduce the
/// two sides of [`identity_fund`].
pub fn fund_combination(pair: &ComponentPair) -> Result<IdentityReport> {
    let (c, k) = (pair.c, pair.k);
    let (_, s) = twist(c, k)?;
    let beta = k.im.abs() / (c.sqrt() * k.re.sqrt());
    let parts = [
        (1.0, identity_first(pair, &RadialWeight::constant())),
        (
            k.re.sqrt(),
            identity_second(pair, &RadialWeight::linear().scaled(2.0 * s / c.sqrt())),
        ),
        (1.0, identity_third(pair, &RadialWeight::quadratic())),
        (-1.0, identity_first(pair, &RadialWeight::linear().scaled(beta))),
    ];
    let lhs = parts.iter().map(|(w, r)| w * r.lhs).sum();
    let rhs = parts.iter().map(|(w, r)| w * r.rhs).sum();
    Ok(IdentityReport::new(
        "fund_combination",
        lhs,
        rhs,
        vec![
            ("first_constant", parts[0].1.lhs),
            ("second_linear", parts[1].0 * parts[1].1.lhs),
            ("third_quadratic", parts[2].1.lhs),
            ("first_linear", -parts[3].1.lhs),
        ],
    ))
}

/// `(k₁ ± k₂)‖u‖² = μ‖∇u‖² + (λ+μ)‖∇u_P‖² + Re∫u f ± Im∫u f` for the full
/// system `Δ*u + k u = f`; `sign` is `+1` or `-1`.
pub fn identity_energy(
    u: &VectorField,
    f: &VectorField,
    p: &LameParams,
    k: Complex64,
    sign: f64,
) -> Result<IdentityReport> {
    require_real(u)?;
    p.require_elliptic()?;
    u.grid().check_same(f.grid())?;
    let lhs_f = &(&apply_lame(u, p)? * -1.0) + &(u * k);
    let scale = lhs_f.norm().max(f.norm());
    let res = (&lhs_f - f).norm();
    if res > PAIR_TOLERANCE * scale {
        return Err(Error::InvalidPair(res / scale));
    }
    energy_report(u, f, p, k.re + sign * k.im, sign)
}

fn energy_report(u: &VectorField, f: &VectorField, p: &LameParams, kk: f64, sign: f64) -> Result<IdentityReport> {
    let lhs = kk * u.norm().powi(2);
    let t1 = p.mu * dirichlet_energy(u);
    let t2 = (p.lambda + p.mu) * dirichlet_energy(&decompose(u).u_p);
    let uf = inner_l2(f, u)?;
    let rhs = t1 + t2 + uf.re + sign * uf.im;
    Ok(IdentityReport::new(
        "energy",
        lhs,
        rhs,
        vec![("gradient", t1), ("gradient_p", t2), ("re_pairing", uf.re), ("im_pairing", sign * uf.im)],
    ))
}

/// Right side of the energy identity for `f = V u`, and its lower bound
/// `(μ - 4Λ/(d-2))‖∇u‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBound {
    pub right_side: f64,
    pub bound: f64,
}

pub fn energy_lower_bound(u: &VectorField, p: &LameParams, v: &Potential, lambda_hat: f64, sign: f64) -> Result<EnergyBound> {
    require_real(u)?;
    let d = u.grid().dim();
    if d < 3 {
        return Err(Error::InvalidArgument("the bound needs d >= 3".into()));
    }
    let f = v.multiply(u)?;
    let report = energy_report(u, &f, p, 0.0, sign)?;
    let bound = (p.mu - 4.0 * lambda_hat / (d as f64 - 2.0)) * dirichlet_energy(u);
    Ok(EnergyBound {
        right_side: report.rhs,
        bound,
    })
}

/// One row of [`identity_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteRow {
    pub weight: String,
    /// `"S"`, `"P"` or `"full"`.
    pub component: &'static str,
    pub c: f64,
    pub k: Complex64,
    pub report: IdentityReport,
}

/// Weights used by the suite for the first three identities.
pub fn suite_weights() -> Vec<RadialWeight> {
    vec![RadialWeight::quadratic(), RadialWeight::gaussian(3.0)]
}

/// Every identity on the manufactured pair built from `u`: first, second
/// and third for each suite weight and both speeds, the twisted gradient,
/// the combined identity (when `k` is on its branch), and the energy
/// identity with both signs.
pub fn identity_suite(u: &VectorField, p: &LameParams, k: Complex64) -> Result<Vec<SuiteRow>> {
    let m = manufacture_f(u, p, k)?;
    let mut rows = Vec::new();
    for (component, pair) in [("S", m.s_pair()), ("P", m.p_pair())] {
        let row = |weight: String, report: IdentityReport| SuiteRow {
            weight,
            component,
            c: pair.c(),
            k,
            report,
        };
        for w in suite_weights() {
            rows.push(row(w.name(), identity_first(&pair, &w)));
            rows.push(row(w.name(), identity_second(&pair, &w)));
            rows.push(row(w.name(), identity_third(&pair, &w)));
        }
        rows.push(row("-".into(), identity_twisted_gradient(pair.u(), pair.c(), k)?));
        if k.re > 0.0 && k.im.abs() <= k.re {
            rows.push(row("-".into(), identity_fund(&pair)?));
        }
    }
    for (weight, sign) in [("+", 1.0), ("-", -1.0)] {
        rows.push(SuiteRow {
            weight: weight.into(),
            component: "full",
            c: p.mu,
            k,
            report: identity_energy(&m.u, &m.f, p, k, sign)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::sample_catalog_field;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_weight_calculus() {
        let w = RadialWeight::quadratic();
        let grid = Grid::new(3, 8, 2.0).unwrap();
        grid.for_each_node(|_, x| {
            let g = w.gradient(x);
            for a in 0..3 {
                assert!((g[a] - 2.0 * x[a]).abs() < 1e-14);
            }
            assert!((w.laplacian(x) - 6.0).abs() < 1e-13);
            let h = w.hessian(x);
            for a in 0..3 {
                for b in 0..3 {
                    let want = if a == b { 2.0 } else { 0.0 };
                    assert!((h[a * 3 + b] - want).abs() < 1e-13);
                }
            }
            assert!(w.bilaplacian(x).abs() < 1e-12);
        });
    }

    #[test]
    fn gaussian_weight_against_finite_differences() {
        let w = RadialWeight::gaussian(1.3);
        let x = [0.4, -0.7, 0.9];
        let e = 1e-3;
        let lap_fd = |f: &dyn Fn(&[f64]) -> f64, x: &[f64]| -> f64 {
            (0..3)
                .map(|a| {
                    let mut p = x.to_vec();
                    let mut m = x.to_vec();
                    p[a] += e;
                    m[a] -= e;
                    (f(&p) - 2.0 * f(x) + f(&m)) / (e * e)
                })
                .sum()
        };
        let lap = |y: &[f64]| w.laplacian(y);
        assert!((lap_fd(&|y| w.value(y), &x) - w.laplacian(&x)).abs() < 1e-5);
        assert!((lap_fd(&lap, &x) - w.bilaplacian(&x)).abs() < 1e-4);
    }

    #[test]
    fn radial_and_angular_split() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        for w in [RadialWeight::quadratic(), RadialWeight::linear(), RadialWeight::gaussian(1.0)] {
            grid.for_each_node(|_, x| {
                let g = w.gradient(x);
                let r = norm(x);
                let radial: f64 = g.iter().zip(x).map(|(a, b)| a * b / r).sum();
                let tang: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - radial * b / r).collect();
                let total: f64 = g.iter().map(|v| v * v).sum();
                let split = radial * radial + tang.iter().map(|v| v * v).sum::<f64>();
                assert!((total - split).abs() <= 1e-12 * total.max(1.0));
            });
        }
    }

    #[test]
    fn zero_pair_is_trivial() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let pair = ComponentPair::manufacture(VectorField::zeros(grid), 1.0, c64(4.0, 1.0)).unwrap();
        for r in [
            identity_first(&pair, &RadialWeight::quadratic()),
            identity_second(&pair, &RadialWeight::constant()),
            identity_third(&pair, &RadialWeight::quadratic()),
            identity_fund(&pair).unwrap(),
        ] {
            assert_eq!(r.residual, 0.0);
            assert_eq!(r.relative(), 0.0);
        }
    }

    #[test]
    fn eigenmode_manufacture() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let u = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        let m = manufacture_f(&u, &LameParams::new(1.0, 0.0), c64(1.0, 0.0)).unwrap();
        let want = &u * (1.0 - (std::f64::consts::PI / 2.0).powi(2));
        assert!((&m.f - &want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn imaginary_part_of_f_is_k2_u() {
        let grid = Grid::new(3, 32, 8.0).unwrap();
        let u = sample_catalog_field("gaussian_bump", &[1.0, 1.0], &grid).unwrap();
        let m = manufacture_f(&u, &LameParams::new(1.0, 0.5), c64(1.0, 1.0)).unwrap();
        let im = m.f.map(|v| c64(v.im, 0.0));
        assert!((&im - &u).norm() < 1e-12 * u.norm());
    }

    #[test]
    fn complex_u_is_rejected() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let u = sample_catalog_field("plane_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        assert!(matches!(
            manufacture_f(&u, &LameParams::new(1.0, 0.0), c64(1.0, 0.0)),
            Err(Error::ComplexField(_))
        ));
        assert!(identity_twisted_gradient(&u, 1.0, c64(1.0, 0.0)).is_err());
    }

    #[test]
    fn invalid_pair_is_rejected() {
        let grid = Grid::new(3, 16, 4.0).unwrap();
        let u = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        let pair = ComponentPair::manufacture(u.clone(), 1.0, c64(2.0, 0.5)).unwrap();
        assert!(ComponentPair::new(u.clone(), pair.f().clone(), 1.0, c64(2.0, 0.5)).is_ok());
        let bad = pair.f() * 1.1;
        assert!(matches!(
            ComponentPair::new(u, bad, 1.0, c64(2.0, 0.5)),
            Err(Error::InvalidPair(_))
        ));
    }

    #[test]
    fn twisted_field_properties() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let u = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        let same = twisted_field(&u, 2.0, c64(0.0, 3.0)).unwrap();
        assert!((&same - &(&u * 2f64.sqrt())).max_abs() < 1e-15);
        let a = twisted_field(&u, 2.0, c64(3.0, 1.0)).unwrap();
        let b = twisted_field(&u, 2.0, c64(3.0, -1.0)).unwrap();
        for (ca, (cb, cu)) in a.components().iter().zip(b.components().iter().zip(u.components())) {
            for ((x, y), z) in ca.iter().zip(cb).zip(cu) {
                assert!((x.norm() - 2f64.sqrt() * z.norm()).abs() < 1e-14);
                assert!((x - y.conj()).norm() < 1e-14);
            }
        }
        assert!(matches!(twisted_field(&u, 1.0, c64(-1.0, 0.0)), Err(Error::Branch { .. })));
    }

    #[test]
    fn fund_rejects_wrong_branch() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let pair = ComponentPair::manufacture(VectorField::zeros(grid), 1.0, c64(1.0, 2.0)).unwrap();
        assert!(matches!(identity_fund(&pair), Err(Error::Branch { .. })));
    }

    #[test]
    fn fund_with_real_k_drops_weighted_terms() {
        let grid = Grid::new(3, 32, 12.0).unwrap();
        let u = sample_catalog_field("gaussian_rotation", &[2.0], &grid).unwrap();
        let pair = ComponentPair::manufacture(u, 1.0, c64(4.0, 0.0)).unwrap();
        let r = identity_fund(&pair).unwrap();
        assert_eq!(r.term("I3"), Some(0.0));
        assert_eq!(r.term("I_weighted_gradient"), Some(0.0));
        assert_eq!(r.term("I_inverse_radius").map(f64::abs), Some(0.0));
    }
}
