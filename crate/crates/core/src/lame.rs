//! The Lamé operator `-Δ* u = -μ Δu - (λ+μ) ∇div u`, its perturbation by a
//! complex potential, and the quadratic form `μ‖∇u_S‖² + (λ+2μ)‖∇u_P‖²`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, from_fourier, norm, to_fourier, vector_laplacian, Grid};
use crate::grid::{ScalarField, VectorField};
use crate::helmholtz::decompose;

/// Constant Lamé coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LameParams {
    pub mu: f64,
    pub lambda: f64,
}

/// Outcome of [`check_coefficients`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoefficientCheck {
    /// `μ > 0` and `λ > -2μ/3`.
    pub positivity: bool,
    /// `μ > 0` and `λ + 2μ > 0`.
    pub ellipticity: bool,
}

impl LameParams {
    pub fn new(mu: f64, lambda: f64) -> Self {
        Self { mu, lambda }
    }

    /// Shear speed `μ`.
    pub fn speed_s(&self) -> f64 {
        self.mu
    }

    /// Pressure speed `λ + 2μ`.
    pub fn speed_p(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    pub fn min_speed(&self) -> f64 {
        self.speed_s().min(self.speed_p())
    }

    pub fn require_elliptic(&self) -> Result<()> {
        if check_coefficients(self).ellipticity {
            Ok(())
        } else {
            Err(Error::NotElliptic {
                mu: self.mu,
                lambda: self.lambda,
            })
        }
    }
}

pub fn check_coefficients(p: &LameParams) -> CoefficientCheck {
    let finite = p.mu.is_finite() && p.lambda.is_finite();
    CoefficientCheck {
        positivity: finite && p.mu > 0.0 && p.lambda > -2.0 / 3.0 * p.mu,
        ellipticity: finite && p.mu > 0.0 && p.lambda + 2.0 * p.mu > 0.0,
    }
}

/// Analytic potential families.
///
/// Textual form is `name:params`, e.g. `gaussian:-50,0,1` for
/// `(-50 + 0i) exp(-|x|^2 / 1^2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `V ≡ a`.
    Constant(Complex64),
    /// `a exp(-|x|^2 / w^2)`.
    Gaussian { amplitude: Complex64, width: f64 },
    /// `a / |x|^2`.
    InverseSquare(Complex64),
    /// `a / (1 + |x|^2 / w^2)^2`.
    Lorentzian { amplitude: Complex64, width: f64 },
}

impl PotentialSpec {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            PotentialSpec::Zero => Complex64::new(0.0, 0.0),
            PotentialSpec::Constant(a) => a,
            PotentialSpec::Gaussian { amplitude, width } => amplitude * (-r2 / (width * width)).exp(),
            PotentialSpec::InverseSquare(a) => a / r2,
            PotentialSpec::Lorentzian { amplitude, width } => {
                amplitude / (1.0 + r2 / (width * width)).powi(2)
            }
        }
    }

    /// The same family with amplitude multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        match *self {
            PotentialSpec::Zero => PotentialSpec::Zero,
            PotentialSpec::Constant(a) => PotentialSpec::Constant(a * c),
            PotentialSpec::Gaussian { amplitude, width } => PotentialSpec::Gaussian {
                amplitude: amplitude * c,
                width,
            },
            PotentialSpec::InverseSquare(a) => PotentialSpec::InverseSquare(a * c),
            PotentialSpec::Lorentzian { amplitude, width } => PotentialSpec::Lorentzian {
                amplitude: amplitude * c,
                width,
            },
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::Constant(a) => write!(f, "constant:{},{}", a.re, a.im),
            PotentialSpec::Gaussian { amplitude, width } => {
                write!(f, "gaussian:{},{},{}", amplitude.re, amplitude.im, width)
            }
            PotentialSpec::InverseSquare(a) => write!(f, "inverse_square:{},{}", a.re, a.im),
            PotentialSpec::Lorentzian { amplitude, width } => {
                write!(f, "lorentzian:{},{},{}", amplitude.re, amplitude.im, width)
            }
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim();
        let params: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParams {
                    name: name.to_string(),
                    reason: e.to_string(),
                })?
        };
        let bad = |reason: &str| Error::InvalidParams {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        if params.iter().any(|v| !v.is_finite()) {
            return Err(bad("parameters must be finite"));
        }
        let amp = |p: &[f64]| Complex64::new(p[0], p[1]);
        let width = |w: f64| {
            if w > 0.0 {
                Ok(w)
            } else {
                Err(bad("width must be positive"))
            }
        };
        match (name, params.len()) {
            ("zero", 0) => Ok(PotentialSpec::Zero),
            ("constant", 2) => Ok(PotentialSpec::Constant(amp(&params))),
            ("gaussian", 3) => Ok(PotentialSpec::Gaussian {
                amplitude: amp(&params),
                width: width(params[2])?,
            }),
            ("inverse_square", 2) => Ok(PotentialSpec::InverseSquare(amp(&params))),
            ("lorentzian", 3) => Ok(PotentialSpec::Lorentzian {
                amplitude: amp(&params),
                width: width(params[2])?,
            }),
            ("zero" | "constant" | "gaussian" | "inverse_square" | "lorentzian", _) => {
                Err(bad("wrong number of parameters"))
            }
            _ => Err(Error::UnknownCatalog(name.to_string())),
        }
    }
}

/// Pointwise multiplier `V(x)` sampled on a grid.
#[derive(Clone, Debug)]
pub struct Potential {
    values: ScalarField,
    spec: Option<PotentialSpec>,
}

impl Potential {
    pub fn zero(grid: Grid) -> Self {
        Self::from_spec(&PotentialSpec::Zero, grid).expect("zero is finite")
    }

    pub fn from_spec(spec: &PotentialSpec, grid: Grid) -> Result<Self> {
        let values = ScalarField::from_fn(grid, |x| spec.eval(x));
        let mut p = Self::from_values(values)?;
        p.spec = Some(spec.clone());
        Ok(p)
    }

    pub fn from_values(values: ScalarField) -> Result<Self> {
        if values.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("potential is not finite at every node".into()));
        }
        Ok(Self { values, spec: None })
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn spec(&self) -> Option<&PotentialSpec> {
        self.spec.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.values.values().iter().all(|v| v.im == 0.0)
    }

    /// `max |x| |V(x)|` over the nodes.
    pub fn weighted_sup(&self) -> f64 {
        let mut m: f64 = 0.0;
        let vals = self.values.values();
        self.grid().for_each_node(|i, x| m = m.max(norm(x) * vals[i].norm()));
        m
    }

    /// `V u`, applied to every component.
    pub fn multiply(&self, u: &VectorField) -> Result<VectorField> {
        self.grid().check_same(u.grid())?;
        Ok(u.pointwise(self.values.values()))
    }
}

/// Fourier symbol of `-Δ*` applied to component spectra, in place:
/// `μ|ξ|² û + (λ+μ) ξ (ξ·û)`.
pub(crate) fn apply_symbol(grid: &Grid, p: &LameParams, hats: &mut [Vec<Complex64>]) {
    let d = grid.dim();
    let mut tmp = vec![Complex64::new(0.0, 0.0); d];
    grid.for_each_mode(|i, xi| {
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        let dot: Complex64 = (0..d).map(|a| hats[a][i] * xi[a]).sum();
        for a in 0..d {
            tmp[a] = hats[a][i] * (p.mu * k2) + dot * ((p.lambda + p.mu) * xi[a]);
        }
        for a in 0..d {
            hats[a][i] = tmp[a];
        }
    });
}

/// Result of [`free_shifted_inverse`].
pub(crate) struct FreeInverse {
    pub x: Vec<Complex64>,
    /// Smallest `|c|ξ|² - z|` over the populated eigenspaces.
    pub min_den: f64,
    pub max_den: f64,
    /// Flat mode index and wave type (`"S"`/`"P"`) attaining `min_den`.
    pub worst_mode: usize,
    pub worst_wave: &'static str,
}

/// `(-Δ* - z)⁻¹ x`, diagonal per Fourier mode on the Helmholtz split.
///
/// Exactly singular modes are divided by one instead (callers decide from
/// `min_den` whether the result is usable); this keeps the map finite as a
/// preconditioner.
pub(crate) fn free_shifted_inverse(grid: &Grid, p: &LameParams, z: Complex64, x: &[Complex64]) -> FreeInverse {
    let d = grid.dim();
    let mut hats: Vec<Vec<Complex64>> = x.chunks_exact(grid.len()).map(|c| to_fourier(grid, c)).collect();
    let mut min_den = f64::INFINITY;
    let mut max_den: f64 = 0.0;
    let mut worst_mode = 0;
    let mut worst_wave = "S";
    let mut track = |den: Complex64, i: usize, wave: &'static str| {
        let a = den.norm();
        max_den = max_den.max(a);
        if a < min_den {
            min_den = a;
            worst_mode = i;
            worst_wave = wave;
        }
    };
    let safe = |den: Complex64| if den.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { den };
    let mut fp = vec![Complex64::new(0.0, 0.0); d];
    grid.for_each_mode(|i, xi| {
        let k2: f64 = xi.iter().map(|v| v * v).sum();
        if k2 == 0.0 {
            let den = -z;
            track(den, i, "S");
            for h in hats.iter_mut() {
                h[i] /= safe(den);
            }
            return;
        }
        let den_s = p.speed_s() * k2 - z;
        let den_p = p.speed_p() * k2 - z;
        if d > 1 {
            track(den_s, i, "S");
        }
        track(den_p, i, "P");
        let dot: Complex64 = (0..d).map(|a| hats[a][i] * xi[a]).sum();
        for a in 0..d {
            fp[a] = dot * (xi[a] / k2);
        }
        for a in 0..d {
            let fs = hats[a][i] - fp[a];
            hats[a][i] = fs / safe(den_s) + fp[a] / safe(den_p);
        }
    });
    FreeInverse {
        x: hats.into_iter().flat_map(|h| from_fourier(grid, h)).collect(),
        min_den,
        max_den,
        worst_mode,
        worst_wave,
    }
}

/// `-Δ*` on a component-major flat vector (no ellipticity check).
pub(crate) fn apply_free_flat(grid: &Grid, p: &LameParams, x: &[Complex64]) -> Vec<Complex64> {
    let mut hats: Vec<Vec<Complex64>> = x.chunks_exact(grid.len()).map(|c| to_fourier(grid, c)).collect();
    apply_symbol(grid, p, &mut hats);
    hats.into_iter().flat_map(|h| from_fourier(grid, h)).collect()
}

/// Componentwise form `-μΔu - (λ+μ)∇div u`.
pub fn apply_lame(u: &VectorField, p: &LameParams) -> Result<VectorField> {
    p.require_elliptic()?;
    VectorField::from_flat(*u.grid(), &apply_free_flat(u.grid(), p, &u.to_flat()))
}

/// Helmholtz form `-μΔu_S - (λ+2μ)Δu_P`.
pub fn apply_lame_helmholtz(u: &VectorField, p: &LameParams) -> Result<VectorField> {
    p.require_elliptic()?;
    let dec = decompose(u);
    let s = &vector_laplacian(&dec.u_s) * (-p.speed_s());
    let pp = &vector_laplacian(&dec.u_p) * (-p.speed_p());
    Ok(&s + &pp)
}

/// `q₀[u] = μ‖∇u_S‖² + (λ+2μ)‖∇u_P‖²`.
pub fn quadratic_form(u: &VectorField, p: &LameParams) -> Result<f64> {
    p.require_elliptic()?;
    let dec = decompose(u);
    Ok(p.speed_s() * dirichlet_energy(&dec.u_s) + p.speed_p() * dirichlet_energy(&dec.u_p))
}

/// `(-Δ* + V) u`.
pub fn apply_perturbed(u: &VectorField, p: &LameParams, v: &Potential) -> Result<VectorField> {
    let vu = v.multiply(u)?;
    Ok(&apply_lame_helmholtz(u, p)? + &vu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{random_band_limited, sample_catalog_field};
    use crate::grid::inner_l2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn g() -> Grid {
        Grid::new(3, 8, 2.0).unwrap()
    }

    fn rel(a: &VectorField, b: &VectorField) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn coefficient_flags() {
        let t = |mu, l| {
            let c = check_coefficients(&LameParams::new(mu, l));
            (c.positivity, c.ellipticity)
        };
        assert_eq!(t(1.0, 0.0), (true, true));
        assert_eq!(t(1.0, -0.7), (false, true));
        assert_eq!(t(-1.0, 0.0), (false, false));
    }

    #[test]
    fn eigenmodes_of_free_operator() {
        let grid = g();
        let p = LameParams::new(1.0, 0.0);
        let k2 = (PI / 2.0).powi(2);
        let s = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        let gm = sample_catalog_field("gradient_mode", &[1.0, 1.0], &grid).unwrap();
        for f in [apply_lame, apply_lame_helmholtz] {
            assert!(rel(&f(&s, &p).unwrap(), &(&s * k2)) < 1e-11);
            assert!(rel(&f(&gm, &p).unwrap(), &(&gm * (2.0 * k2))) < 1e-11);
            assert_eq!(f(&VectorField::zeros(grid), &p).unwrap().max_abs(), 0.0);
        }
        let q = quadratic_form(&s, &p).unwrap();
        assert!((q - k2 * 4.0 * 8.0).abs() < 1e-10 * q);
        let q = quadratic_form(&gm, &p).unwrap();
        assert!((q - 2.0 * k2 * gm.norm().powi(2)).abs() < 1e-10 * q);
    }

    #[test]
    fn rejects_non_elliptic() {
        let u = VectorField::zeros(g());
        assert!(matches!(
            apply_lame(&u, &LameParams::new(1.0, -3.0)),
            Err(Error::NotElliptic { .. })
        ));
        assert!(quadratic_form(&u, &LameParams::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn formulas_agree_on_random_fields() {
        let grid = Grid::new(3, 12, 2.5).unwrap();
        let p = LameParams::new(1.3, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let u = random_band_limited(&grid, 4, &mut rng);
            let a = apply_lame(&u, &p).unwrap();
            let b = apply_lame_helmholtz(&u, &p).unwrap();
            assert!(rel(&b, &a) < 1e-11);
            let q = quadratic_form(&u, &p).unwrap();
            let form = inner_l2(&a, &u).unwrap().re;
            assert!((q - form).abs() <= 1e-10 * q.abs());
        }
    }

    #[test]
    fn constant_mode_is_in_the_kernel() {
        let grid = g();
        let u = VectorField::from_fn(grid, |_, out| out[2] = Complex64::new(1.0, 0.0));
        let out = apply_lame_helmholtz(&u, &LameParams::new(1.0, 1.0)).unwrap();
        assert!(out.max_abs() < 1e-13);
    }

    #[test]
    fn perturbations() {
        let grid = g();
        let p = LameParams::new(1.0, 0.0);
        let s = sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &grid).unwrap();
        let shift = Complex64::new(0.3, -2.0);
        let v = Potential::from_spec(&PotentialSpec::Constant(shift), grid).unwrap();
        let out = apply_perturbed(&s, &p, &v).unwrap();
        let e = (PI / 2.0).powi(2);
        assert!(rel(&out, &(&s * (shift + e))) < 1e-12);

        let spec: PotentialSpec = "gaussian:0,1,1".parse().unwrap();
        let v = Potential::from_spec(&spec, grid).unwrap();
        let out = apply_perturbed(&s, &p, &v).unwrap();
        let free = apply_lame(&s, &p).unwrap();
        let im = &out - &free;
        for (i, val) in im.components()[1].iter().enumerate() {
            let want = v.values().values()[i] * s.components()[1][i];
            assert!((val - want).norm() < 1e-12);
        }

        let zero = Potential::zero(grid);
        assert!(rel(&apply_perturbed(&s, &p, &zero).unwrap(), &free) < 1e-12);
    }

    #[test]
    fn potential_specs_round_trip() {
        for text in ["zero", "constant:1,2", "gaussian:-50,0,1", "inverse_square:0.01,0", "lorentzian:0,0.1,2"] {
            let spec: PotentialSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("gaussian:1,2".parse::<PotentialSpec>().is_err());
        assert!("bogus:1".parse::<PotentialSpec>().is_err());
        assert!("gaussian:1,0,-1".parse::<PotentialSpec>().is_err());
    }
}
