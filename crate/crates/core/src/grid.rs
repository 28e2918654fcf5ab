//! Discrete function spaces on the periodic box `[-L, L)^d`.
//!
//! Nodes are cell-centered, `x_j = -L + (j + 1/2) h` per axis, so no node sits
//! at the origin and weights such as `|x|^{-2}` are finite everywhere. All
//! derivatives are exact Fourier multipliers `i xi` with
//! `xi in (pi/L) {-n/2, ..., n/2 - 1}`; quadrature is the periodic trapezoid
//! rule `h^d * sum`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform cell-centered grid on `[-L, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if !n.is_multiple_of(2) || n < 8 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if (n as f64).powi(dim as i32) > 1.0e9 {
            return Err(Error::InvalidGrid(format!("{n}^{dim} nodes is too many")));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume of the whole box, `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Node coordinates along one axis.
    pub fn axis_coordinates(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|j| -self.half_width + (j as f64 + 0.5) * h)
            .collect()
    }

    /// Angular wavenumbers along one axis in FFT order.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        let base = std::f64::consts::PI / self.half_width;
        (0..self.n).map(|j| base * self.mode_index(j) as f64).collect()
    }

    /// Signed integer mode for an FFT-ordered index (`-n/2` for the Nyquist slot).
    pub fn mode_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Multi-index of a flat row-major index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Calls `f(flat_index, x)` for every node in row-major order.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64])) {
        let coords = self.axis_coordinates();
        self.for_each_tuple(&coords, &mut f);
    }

    /// Calls `f(flat_index, xi)` for every Fourier mode in FFT order.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[f64])) {
        let xi = self.axis_wavenumbers();
        self.for_each_tuple(&xi, &mut f);
    }

    fn for_each_tuple(&self, axis: &[f64], f: &mut impl FnMut(usize, &[f64])) {
        let mut idx = vec![0usize; self.dim];
        let mut point: Vec<f64> = vec![axis[0]; self.dim];
        for flat in 0..self.len() {
            f(flat, &point);
            for a in (0..self.dim).rev() {
                idx[a] += 1;
                if idx[a] < self.n {
                    point[a] = axis[idx[a]];
                    break;
                }
                idx[a] = 0;
                point[a] = axis[0];
            }
        }
    }

    /// `|x|` at every node.
    pub fn radii(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.len()];
        self.for_each_node(|i, x| r[i] = norm(x));
        r
    }

    /// `|xi|^2` for every mode.
    pub fn wavenumber_squares(&self) -> Vec<f64> {
        let mut k2 = vec![0.0; self.len()];
        self.for_each_mode(|i, xi| k2[i] = xi.iter().map(|v| v * v).sum());
        k2
    }

    /// Smallest `|x|` over the nodes, `sqrt(d) h / 2`.
    pub fn min_radius(&self) -> f64 {
        (self.dim as f64).sqrt() * self.spacing() / 2.0
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Complex scalar samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = vec![ZERO; grid.len()];
        grid.for_each_node(|i, x| values[i] = f(x));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.grid, [self.values.as_slice()])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_real(&self, rel_tol: f64) -> bool {
        is_real_slice(&self.values, rel_tol * self.max_abs())
    }
}

/// Complex `d`-component vector samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<Complex64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            components: vec![vec![ZERO; grid.len()]; grid.dim()],
        }
    }

    pub fn from_components(grid: Grid, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument(
                "component length differs from the node count".into(),
            ));
        }
        Ok(Self { grid, components })
    }

    /// Samples `f(x, out)` where `out` receives the `d` components at `x`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64], &mut [Complex64])) -> Self {
        let mut field = Self::zeros(grid);
        let mut out = vec![ZERO; grid.dim()];
        grid.for_each_node(|i, x| {
            out.iter_mut().for_each(|v| *v = ZERO);
            f(x, &mut out);
            for (c, v) in field.components.iter_mut().zip(&out) {
                c[i] = *v;
            }
        });
        field
    }

    /// Rebuilds a field from the component-major flat layout of [`Self::to_flat`].
    pub fn from_flat(grid: Grid, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != grid.dim() * grid.len() {
            return Err(Error::InvalidArgument(format!(
                "flat vector has length {}, expected {}",
                flat.len(),
                grid.dim() * grid.len()
            )));
        }
        let components = flat.chunks_exact(grid.len()).map(|c| c.to_vec()).collect();
        Ok(Self { grid, components })
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        self.components.concat()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.components
    }

    pub fn component(&self, i: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.components[i].clone(),
        }
    }

    /// `(sum_j ||u_j||^2)^{1/2}`.
    pub fn norm(&self) -> f64 {
        l2_norm(&self.grid, self.components.iter().map(|c| c.as_slice()))
    }

    /// `sum_j ||u_j||`, equivalent to [`Self::norm`] up to a factor `sqrt(d)`.
    pub fn component_norm_sum(&self) -> f64 {
        self.components
            .iter()
            .map(|c| l2_norm(&self.grid, [c.as_slice()]))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        self.components.iter().all(|c| is_real_slice(c, tol))
    }

    /// Multiplies every component by the scalar field `w` nodewise.
    pub fn pointwise(&self, w: &[Complex64]) -> Self {
        assert_eq!(w.len(), self.grid.len());
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .map(|c| c.iter().zip(w).map(|(a, b)| a * b).collect())
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    /// Drops imaginary parts.
    pub fn real_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }
}

fn is_real_slice(values: &[Complex64], tol: f64) -> bool {
    values.iter().all(|v| v.im.abs() <= tol)
}

fn l2_norm<'a>(grid: &Grid, comps: impl IntoIterator<Item = &'a [Complex64]>) -> f64 {
    let s: f64 = comps
        .into_iter()
        .flat_map(|c| c.iter().map(|v| v.norm_sqr()))
        .sum();
    (grid.cell_volume() * s).sqrt()
}

macro_rules! impl_linear_ops {
    ($ty:ident, $field:ident, $zip:expr) => {
        impl Add for &$ty {
            type Output = $ty;
            /// Panics when the grids differ.
            fn add(self, rhs: &$ty) -> $ty {
                assert_eq!(self.grid, rhs.grid, "grid mismatch");
                let mut out = self.clone();
                $zip(&mut out.$field, &rhs.$field, |a: &mut Complex64, b: Complex64| *a += b);
                out
            }
        }
        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                assert_eq!(self.grid, rhs.grid, "grid mismatch");
                let mut out = self.clone();
                $zip(&mut out.$field, &rhs.$field, |a: &mut Complex64, b: Complex64| *a -= b);
                out
            }
        }
        impl Mul<Complex64> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: Complex64) -> $ty {
                self.map(|v| v * rhs)
            }
        }
        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                self.map(|v| v * rhs)
            }
        }
    };
}

fn zip_scalar(a: &mut [Complex64], b: &[Complex64], f: impl Fn(&mut Complex64, Complex64)) {
    a.iter_mut().zip(b).for_each(|(x, &y)| f(x, y));
}

fn zip_vector(
    a: &mut [Vec<Complex64>],
    b: &[Vec<Complex64>],
    f: impl Fn(&mut Complex64, Complex64),
) {
    for (ca, cb) in a.iter_mut().zip(b) {
        ca.iter_mut().zip(cb).for_each(|(x, &y)| f(x, y));
    }
}

impl_linear_ops!(ScalarField, values, zip_scalar);
impl_linear_ops!(VectorField, components, zip_vector);

/// Fields that carry an `L^2` structure: the grid plus their component slices.
pub trait L2Field {
    fn grid(&self) -> &Grid;
    fn slices(&self) -> Vec<&[Complex64]>;
}

impl L2Field for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn slices(&self) -> Vec<&[Complex64]> {
        vec![&self.values]
    }
}

impl L2Field for VectorField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn slices(&self) -> Vec<&[Complex64]> {
        self.components.iter().map(|c| c.as_slice()).collect()
    }
}

/// `h^d sum <a, conj(b)>`; the second argument is conjugated.
pub fn inner_l2<F: L2Field>(a: &F, b: &F) -> Result<Complex64> {
    a.grid().check_same(b.grid())?;
    let s: Complex64 = a
        .slices()
        .into_iter()
        .zip(b.slices())
        .flat_map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y.conj()))
        .sum();
    Ok(s * a.grid().cell_volume())
}

/// `(h^d sum |x|^{2s} |u|^2)^{1/2}`.
pub fn weighted_norm<F: L2Field>(field: &F, s: f64) -> f64 {
    let grid = field.grid();
    let radii = grid.radii();
    let w: Vec<f64> = radii.iter().map(|r| r.powf(2.0 * s)).collect();
    let total: f64 = field
        .slices()
        .into_iter()
        .flat_map(|c| c.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()))
        .sum();
    (grid.cell_volume() * total).sqrt()
}

/// Trigonometric interpolant of `values` evaluated at the origin.
pub fn value_at_origin(grid: &Grid, values: &[Complex64]) -> Complex64 {
    let n = grid.n();
    // node j sits at x_0 + j h, x_0 = -L + h/2, so the origin is t = L - h/2 past x_0
    let t = grid.half_width() - grid.spacing() / 2.0;
    let phase: Vec<Complex64> = grid
        .axis_wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, xi)| {
            if j == n / 2 {
                Complex64::new((xi * t).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, xi * t)
            }
        })
        .collect();
    let mut data = to_fourier(grid, values);
    // contract one axis at a time, last axis first
    while data.len() > 1 {
        data = data
            .chunks_exact(n)
            .map(|row| row.iter().zip(&phase).map(|(a, b)| a * b).sum())
            .collect();
    }
    data[0] / grid.len() as f64
}

/// Lattice constant `c(d, s)` of the leading midpoint-rule error for
/// `∫ |x|^{2s} g`: `∫ - h^d Σ = c h^{d+2s} g(0) + O(h^{d+2s+2})`.
///
/// Calibrated on `g = exp(-|x|²)`, whose weighted integral is
/// `π^{d/2} Γ(s + d/2) / Γ(d/2)`; the smooth-part error at `h = 1/2` is far
/// below double precision.
pub fn singular_lattice_constant(dim: usize, s: f64) -> f64 {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("cache poisoned").get(&(dim, s.to_bits())) {
        return *c;
    }
    let d = dim as f64;
    let grid = Grid::new(dim, 24, 6.0).expect("valid calibration grid");
    let h = grid.spacing();
    let exact = std::f64::consts::PI.powf(d / 2.0) * libm::tgamma(s + d / 2.0) / libm::tgamma(d / 2.0);
    let mut sum = 0.0;
    grid.for_each_node(|_, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        sum += r2.powf(s) * (-r2).exp();
    });
    let c = (exact - grid.cell_volume() * sum) / h.powf(d + 2.0 * s);
    cache.lock().expect("cache poisoned").insert((dim, s.to_bits()), c);
    c
}

/// [`weighted_norm`] with the leading lattice correction for the
/// non-smooth weight `|x|^{2s}` added, so that it approximates the continuum
/// integral of the trigonometric interpolant. Needs `2s > -d`; for weights
/// that are polynomials (`2s` an even non-negative integer) no correction
/// is needed and the plain sum is returned.
pub fn corrected_weighted_norm<F: L2Field>(field: &F, s: f64) -> f64 {
    let plain = weighted_norm(field, s);
    let two_s = 2.0 * s;
    if two_s >= 0.0 && two_s.fract() == 0.0 && (two_s as i64) % 2 == 0 {
        return plain;
    }
    let grid = field.grid();
    let d = grid.dim() as f64;
    assert!(two_s > -d, "weight |x|^{two_s} is not integrable in {d} dimensions");
    let at0: f64 = field
        .slices()
        .into_iter()
        .map(|c| value_at_origin(grid, c).norm_sqr())
        .sum();
    let corr = singular_lattice_constant(grid.dim(), s) * grid.spacing().powf(d + two_s) * at0;
    (plain * plain + corr).max(0.0).sqrt()
}

/// Which derivative [`differentiate`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    Gradient,
    Divergence,
    Laplacian,
}

/// A field of either rank.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

pub fn differentiate(field: &Field, kind: Derivative) -> Result<Field> {
    match (field, kind) {
        (Field::Scalar(s), Derivative::Gradient) => Ok(Field::Vector(gradient(s))),
        (Field::Vector(v), Derivative::Divergence) => Ok(Field::Scalar(divergence(v))),
        (Field::Scalar(s), Derivative::Laplacian) => Ok(Field::Scalar(laplacian(s))),
        (Field::Vector(v), Derivative::Laplacian) => Ok(Field::Vector(vector_laplacian(v))),
        (Field::Vector(_), Derivative::Gradient) => {
            Err(Error::RankMismatch("gradient expects a scalar field"))
        }
        (Field::Scalar(_), Derivative::Divergence) => {
            Err(Error::RankMismatch("divergence expects a vector field"))
        }
    }
}

pub(crate) fn to_fourier(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut data = values.to_vec();
    fft::forward(grid, &mut data);
    data
}

pub(crate) fn from_fourier(grid: &Grid, mut data: Vec<Complex64>) -> Vec<Complex64> {
    fft::inverse(grid, &mut data);
    data
}

/// Spectral gradient of a scalar field.
pub fn gradient(s: &ScalarField) -> VectorField {
    let grid = s.grid;
    let hat = to_fourier(&grid, &s.values);
    let mut comps = vec![vec![ZERO; grid.len()]; grid.dim()];
    grid.for_each_mode(|i, xi| {
        for (a, c) in comps.iter_mut().enumerate() {
            c[i] = Complex64::new(0.0, xi[a]) * hat[i];
        }
    });
    let components = comps.into_iter().map(|c| from_fourier(&grid, c)).collect();
    VectorField { grid, components }
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid;
    let hats: Vec<Vec<Complex64>> = v
        .components
        .iter()
        .map(|c| to_fourier(&grid, c))
        .collect();
    let mut out = vec![ZERO; grid.len()];
    grid.for_each_mode(|i, xi| {
        out[i] = (0..grid.dim())
            .map(|a| Complex64::new(0.0, xi[a]) * hats[a][i])
            .sum();
    });
    ScalarField {
        grid,
        values: from_fourier(&grid, out),
    }
}

fn laplacian_values(grid: &Grid, values: &[Complex64], k2: &[f64]) -> Vec<Complex64> {
    let mut hat = to_fourier(grid, values);
    hat.iter_mut().zip(k2).for_each(|(v, k)| *v *= -k);
    from_fourier(grid, hat)
}

pub fn laplacian(s: &ScalarField) -> ScalarField {
    let k2 = s.grid.wavenumber_squares();
    ScalarField {
        grid: s.grid,
        values: laplacian_values(&s.grid, &s.values, &k2),
    }
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    let k2 = v.grid.wavenumber_squares();
    VectorField {
        grid: v.grid,
        components: v
            .components
            .iter()
            .map(|c| laplacian_values(&v.grid, c, &k2))
            .collect(),
    }
}

/// Jacobian rows: entry `i` is the gradient of component `i`.
pub fn jacobian(v: &VectorField) -> Vec<VectorField> {
    (0..v.grid.dim())
        .map(|i| gradient(&v.component(i)))
        .collect()
}

/// `h^d sum_i sum_a |d_a u_i|^2`, the discrete Dirichlet energy.
pub fn dirichlet_energy(v: &VectorField) -> f64 {
    // Parseval: sum |xi|^2 |u_hat|^2 / N
    let grid = v.grid;
    let k2 = grid.wavenumber_squares();
    let s: f64 = v
        .components
        .iter()
        .map(|c| {
            let hat = to_fourier(&grid, c);
            hat.iter().zip(&k2).map(|(h, k)| k * h.norm_sqr()).sum::<f64>()
        })
        .sum();
    grid.cell_volume() * s / grid.len() as f64
}

pub fn scalar_dirichlet_energy(s: &ScalarField) -> f64 {
    let grid = s.grid;
    let k2 = grid.wavenumber_squares();
    let hat = to_fourier(&grid, &s.values);
    let e: f64 = hat.iter().zip(&k2).map(|(h, k)| k * h.norm_sqr()).sum();
    grid.cell_volume() * e / grid.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn one_dimensional_nodes_are_cell_centered() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert_eq!(
            g.axis_coordinates(),
            vec![-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5]
        );
    }

    #[test]
    fn closest_node_to_origin() {
        let g = Grid::new(3, 32, 8.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        let rmin = g.radii().into_iter().fold(f64::INFINITY, f64::min);
        assert!((rmin - 3f64.sqrt() * 0.25).abs() < 1e-15);
        assert!((g.min_radius() - 0.4330127018922193).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 7, 8.0).is_err());
        assert!(Grid::new(3, 6, 8.0).is_err());
        assert!(Grid::new(3, 8, 0.0).is_err());
        assert!(Grid::new(3, 8, -1.0).is_err());
        assert!(Grid::new(0, 8, 1.0).is_err());
    }

    #[test]
    fn laplacian_of_sine() {
        let g = Grid::new(3, 16, 2.0).unwrap();
        let l = g.half_width();
        let s = ScalarField::from_fn(g, |x| c((PI * x[0] / l).sin()));
        let lap = laplacian(&s);
        let expect = &s * (-(PI / l).powi(2));
        assert!((&lap - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let one = ScalarField::from_fn(g, |_| c(1.0));
        assert!(gradient(&one).max_abs() < 1e-15);
    }

    #[test]
    fn divergence_of_transverse_mode_vanishes() {
        let g = Grid::new(3, 8, 3.0).unwrap();
        let l = g.half_width();
        let u = VectorField::from_fn(g, |x, out| out[1] = c((PI * x[0] / l).sin()));
        assert!(divergence(&u).max_abs() < 1e-14);
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let v = Field::Vector(VectorField::zeros(g));
        assert!(matches!(
            differentiate(&v, Derivative::Gradient),
            Err(Error::RankMismatch(_))
        ));
        let s = Field::Scalar(ScalarField::zeros(g));
        assert!(differentiate(&s, Derivative::Divergence).is_err());
        assert!(differentiate(&s, Derivative::Laplacian).is_ok());
    }

    #[test]
    fn sine_mode_norm() {
        let g = Grid::new(3, 16, 2.5).unwrap();
        let l = g.half_width();
        let u = VectorField::from_fn(g, |x, out| out[0] = c((PI * x[0] / l).sin()));
        let n2 = inner_l2(&u, &u).unwrap();
        assert!((n2.re - 4.0 * l.powi(3)).abs() < 1e-11);
        assert!(n2.im.abs() < 1e-14);
        let zero = VectorField::zeros(g);
        assert_eq!(inner_l2(&u, &zero).unwrap(), c(0.0));
    }

    #[test]
    fn inner_product_rejects_grid_mismatch() {
        let a = ScalarField::zeros(Grid::new(2, 8, 1.0).unwrap());
        let b = ScalarField::zeros(Grid::new(2, 8, 2.0).unwrap());
        assert!(matches!(inner_l2(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn gaussian_weighted_norms() {
        let g = Grid::new(3, 64, 8.0).unwrap();
        let psi = ScalarField::from_fn(g, |x| c((-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp()));
        let n0 = weighted_norm(&psi, 0.0);
        let n1 = weighted_norm(&psi, 1.0);
        assert!((n0 - PI.powf(0.75)).abs() < 1e-6, "{n0}");
        assert!((n1 - 1.5f64.sqrt() * PI.powf(0.75)).abs() < 1e-6, "{n1}");
        assert_eq!(weighted_norm(&ScalarField::zeros(g), -1.5), 0.0);
    }

    #[test]
    fn origin_interpolation_of_band_limited_field() {
        let g = Grid::new(3, 16, 4.0).unwrap();
        let l = g.half_width();
        let s = ScalarField::from_fn(g, |x| {
            Complex64::new((PI * x[0] / l).cos() + (2.0 * PI * x[1] / l).sin(), (PI * x[2] / l).cos())
        });
        let v = value_at_origin(&g, s.values());
        assert!((v - Complex64::new(1.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn corrected_singular_integral() {
        // ∫ e^{-|x|²} / |x|² = 2 π^{3/2} in 3-D
        let g = Grid::new(3, 32, 8.0).unwrap();
        let s = ScalarField::from_fn(g, |x| c((-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp()));
        let plain = weighted_norm(&s, -1.0).powi(2);
        let fixed = corrected_weighted_norm(&s, -1.0).powi(2);
        let exact = 2.0 * PI.powf(1.5);
        assert!((plain - exact).abs() > 1e-2);
        assert!((fixed - exact).abs() < 1e-8 * exact, "{fixed} vs {exact}");
        assert_eq!(corrected_weighted_norm(&s, 1.0), weighted_norm(&s, 1.0));
    }

    #[test]
    fn dirichlet_energy_matches_gradient_norm() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let s = ScalarField::from_fn(g, |x| c((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()));
        let e = scalar_dirichlet_energy(&s);
        let gn = gradient(&s).norm();
        assert!((e - gn * gn).abs() < 1e-12 * e);
    }
}
