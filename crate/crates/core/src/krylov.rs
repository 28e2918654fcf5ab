//! Krylov building blocks: restarted right-preconditioned GMRES, Lanczos for
//! the top of a Hermitian spectrum, and thick-restart Arnoldi for the
//! dominant eigenvalues of a general linear map.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// `sum conj(a_i) b_i`.
pub fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C], alpha: C, x: &[C]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(y: &mut [C], alpha: f64) {
    y.iter_mut().for_each(|v| *v *= alpha);
}

/// Seeded unit vector with random complex entries.
pub fn random_unit(len: usize, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C> = (0..len)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = norm2(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Two passes of classical Gram–Schmidt; returns the coefficients.
fn orthogonalize(w: &mut [C], basis: &[Vec<C>]) -> Vec<C> {
    let mut h = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (j, q) in basis.iter().enumerate() {
            let c = dot(q, w);
            axpy(w, -c, q);
            h[j] += c;
        }
    }
    h
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            restart: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<C>,
    pub iterations: usize,
    pub residual: f64,
}

/// Restarted GMRES on `A M^{-1} y = b`, `x = M^{-1} y`.
pub fn gmres(
    apply: &dyn Fn(&[C]) -> Vec<C>,
    precond: &dyn Fn(&[C]) -> Vec<C>,
    b: &[C],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut rel = 1.0;
    let m = opts.restart.max(1);
    while iterations < opts.max_iter {
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= opts.tol {
            break;
        }
        let mut v = vec![r.iter().map(|v| v / beta).collect::<Vec<C>>()];
        let mut h: Vec<Vec<C>> = Vec::new(); // columns of the Hessenberg matrix
        let mut cs: Vec<(C, C)> = Vec::new();
        let mut g = vec![C::new(beta, 0.0)];
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            let mut w = apply(&precond(&v[k]));
            let mut col = orthogonalize(&mut w, &v);
            let hn = norm2(&w);
            col.push(C::new(hn, 0.0));
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c.conj() * a + s.conj() * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (C::new(1.0, 0.0), ZERO)
            } else {
                (a / den, bb / den)
            };
            col[k] = C::new(den, 0.0);
            col[k + 1] = ZERO;
            g.push(-s * g[k]);
            g[k] = c.conj() * g[k];
            cs.push((c, s));
            h.push(col);
            iterations += 1;
            k += 1;
            rel = g[k].norm() / bnorm;
            if rel <= opts.tol || hn == 0.0 {
                break;
            }
            scale(&mut w, 1.0 / hn);
            v.push(w);
        }
        // back substitution
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut z = vec![ZERO; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(&mut z, *yj, &v[j]);
        }
        axpy(&mut x, C::new(1.0, 0.0), &precond(&z));
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = norm2(&r) / bnorm;
        if rel <= opts.tol {
            break;
        }
    }
    if rel > opts.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: rel,
        });
    }
    Ok(GmresOutcome {
        x,
        iterations,
        residual: rel,
    })
}

/// Largest eigenvalue of a Hermitian positive semi-definite map, by Lanczos
/// with full reorthogonalization. Returns the value and a unit eigenvector.
pub fn lanczos_largest(
    apply: &dyn Fn(&[C]) -> Vec<C>,
    start: Vec<C>,
    max_iter: usize,
    tol: f64,
) -> Result<(f64, Vec<C>)> {
    let mut q = start;
    let n0 = norm2(&q);
    scale(&mut q, 1.0 / n0);
    let mut basis: Vec<Vec<C>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (0.0, f64::INFINITY, Vec::new());
    for _ in 0..max_iter.min(q.len()) {
        let mut w = apply(&q);
        basis.push(q);
        let h = orthogonalize(&mut w, &basis);
        alpha.push(h[h.len() - 1].re);
        let b = norm2(&w);
        let j = alpha.len();
        let t = Mat::<f64>::from_fn(j, j, |r, c| {
            if r == c {
                alpha[r]
            } else if r == c + 1 {
                beta[c]
            } else if c == r + 1 {
                beta[r]
            } else {
                0.0
            }
        });
        let evd = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let theta = evd.S()[j - 1];
        let s: Vec<f64> = (0..j).map(|r| evd.U()[(r, j - 1)]).collect();
        let ritz_res = (b * s[j - 1]).abs();
        last = (theta, ritz_res, s);
        if ritz_res <= tol * theta.abs() || b <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        scale(&mut w, 1.0 / b);
        q = w;
    }
    let (theta, res, s) = last;
    if res > tol * theta.abs() && basis.len() < basis[0].len() {
        return Err(Error::NoConvergence {
            iterations: basis.len(),
            residual: res / theta.abs().max(f64::MIN_POSITIVE),
        });
    }
    let mut v = vec![ZERO; basis[0].len()];
    for (sj, qj) in s.iter().zip(&basis) {
        axpy(&mut v, C::new(*sj, 0.0), qj);
    }
    let nv = norm2(&v);
    scale(&mut v, 1.0 / nv);
    Ok((theta, v))
}

#[derive(Clone, Copy, Debug)]
pub struct ArnoldiOptions {
    /// Number of wanted eigenpairs.
    pub nev: usize,
    /// Krylov subspace size.
    pub ncv: usize,
    pub max_restarts: usize,
    /// Ritz residual target, relative to `|ν|`.
    pub tol: f64,
    pub seed: u64,
}

/// Dominant (largest `|ν|`) eigenpairs of a general map, by thick-restart
/// Arnoldi. Pairs are returned in decreasing `|ν|`, vectors normalized.
pub fn arnoldi_dominant(
    apply: &dyn Fn(&[C]) -> Result<Vec<C>>,
    len: usize,
    opts: &ArnoldiOptions,
) -> Result<Vec<(C, Vec<C>)>> {
    let nev = opts.nev.min(len);
    let ncv = opts.ncv.max(2 * nev + 1).min(len);
    let mut v: Vec<Vec<C>> = vec![random_unit(len, opts.seed)];
    // h[r][c], sized (ncv + 1) x ncv
    let mut h = vec![vec![ZERO; ncv]; ncv + 1];
    let mut k = 0; // columns already in the basis relation
    let mut worst = f64::INFINITY;
    for restart in 0..=opts.max_restarts {
        for j in k..ncv {
            let mut w = apply(&v[j])?;
            let col = orthogonalize(&mut w, &v);
            for (r, c) in col.iter().enumerate() {
                h[r][j] = *c;
            }
            let hn = norm2(&w);
            h[j + 1][j] = C::new(hn, 0.0);
            if hn <= 1e-14 {
                // invariant subspace: continue with a fresh orthogonal direction
                let mut fresh = random_unit(len, opts.seed.wrapping_add(1 + j as u64));
                orthogonalize(&mut fresh, &v);
                let fnorm = norm2(&fresh);
                scale(&mut fresh, 1.0 / fnorm);
                h[j + 1][j] = ZERO;
                v.push(fresh);
            } else {
                scale(&mut w, 1.0 / hn);
                v.push(w);
            }
        }
        let hm = Mat::<C>::from_fn(ncv, ncv, |r, c| h[r][c]);
        let evd = hm.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let mut order: Vec<usize> = (0..ncv).collect();
        let vals: Vec<C> = (0..ncv).map(|i| evd.S()[i]).collect();
        order.sort_by(|&a, &b| vals[b].norm().total_cmp(&vals[a].norm()).then(a.cmp(&b)));
        let y = |i: usize| -> Vec<C> { (0..ncv).map(|r| evd.U()[(r, i)]).collect() };
        // residual of Ritz pair i is |h_last_row . y_i|
        let resid = |yi: &[C]| -> f64 {
            let s: C = (0..ncv).map(|c| h[ncv][c] * yi[c]).sum();
            s.norm() / norm2(yi)
        };
        worst = order[..nev]
            .iter()
            .map(|&i| resid(&y(i)) / vals[i].norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst <= opts.tol || restart == opts.max_restarts {
            if worst > opts.tol {
                break;
            }
            return Ok(order[..nev]
                .iter()
                .map(|&i| {
                    let yi = y(i);
                    let mut x = vec![ZERO; len];
                    for (c, vc) in yi.iter().zip(&v) {
                        axpy(&mut x, *c, vc);
                    }
                    let nx = norm2(&x);
                    scale(&mut x, 1.0 / nx);
                    (vals[i], x)
                })
                .collect());
        }
        // keep a few more Ritz vectors than wanted
        let keep = (nev + (ncv - nev) / 2).min(ncv - 1);
        let mut q: Vec<Vec<C>> = Vec::with_capacity(keep);
        for &i in &order[..keep] {
            let mut yi = y(i);
            orthogonalize(&mut yi, &q);
            let ny = norm2(&yi);
            if ny > 1e-10 {
                scale(&mut yi, 1.0 / ny);
                q.push(yi);
            }
        }
        let kk = q.len();
        // new basis V Q, new H = Q^H H Q with residual row b = h_last Q
        let mut new_v: Vec<Vec<C>> = Vec::with_capacity(ncv + 1);
        for qi in &q {
            let mut x = vec![ZERO; len];
            for (c, vc) in qi.iter().zip(&v) {
                axpy(&mut x, *c, vc);
            }
            new_v.push(x);
        }
        new_v.push(v[ncv].clone());
        let hq: Vec<Vec<C>> = q
            .iter()
            .map(|qi| (0..ncv).map(|r| (0..ncv).map(|c| h[r][c] * qi[c]).sum()).collect())
            .collect();
        let mut nh = vec![vec![ZERO; ncv]; ncv + 1];
        for a in 0..kk {
            for b in 0..kk {
                nh[a][b] = dot(&q[a], &hq[b]);
            }
            nh[kk][a] = (0..ncv).map(|c| h[ncv][c] * q[a][c]).sum();
        }
        h = nh;
        v = new_v;
        k = kk;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_apply(d: Vec<C>) -> impl Fn(&[C]) -> Vec<C> {
        move |x: &[C]| x.iter().zip(&d).map(|(a, b)| a * b).collect()
    }

    #[test]
    fn gmres_solves_diagonal_system() {
        let d: Vec<C> = (0..50).map(|i| C::new(1.0 + i as f64, 0.5)).collect();
        let a = diag_apply(d.clone());
        let id = |x: &[C]| x.to_vec();
        let b: Vec<C> = (0..50).map(|i| C::new((i as f64).sin(), 1.0)).collect();
        let out = gmres(&a, &id, &b, &GmresOptions::default()).unwrap();
        for i in 0..50 {
            assert!((out.x[i] * d[i] - b[i]).norm() < 1e-9);
        }
        // exact preconditioner converges in one step
        let inv = diag_apply(d.iter().map(|v| 1.0 / v).collect());
        let out = gmres(&a, &inv, &b, &GmresOptions::default()).unwrap();
        assert!(out.iterations <= 2);
    }

    #[test]
    fn gmres_zero_rhs() {
        let a = |x: &[C]| x.to_vec();
        let out = gmres(&a, &a, &[ZERO; 4], &GmresOptions::default()).unwrap();
        assert_eq!(out.x, vec![ZERO; 4]);
    }

    #[test]
    fn lanczos_finds_top_of_diagonal() {
        let d: Vec<C> = (0..200).map(|i| C::new((i as f64 * 0.7).cos().abs() * 3.0, 0.0)).collect();
        let top = d.iter().map(|v| v.re).fold(0.0, f64::max);
        let (theta, v) = lanczos_largest(&diag_apply(d.clone()), random_unit(200, 1), 200, 1e-12).unwrap();
        assert!((theta - top).abs() < 1e-10);
        let av = diag_apply(d)(&v);
        let r: Vec<C> = av.iter().zip(&v).map(|(a, b)| a - b * theta).collect();
        assert!(norm2(&r) < 1e-6);
    }

    #[test]
    fn arnoldi_finds_dominant_eigenvalues() {
        // upper bidiagonal perturbation of a diagonal: eigenvalues are the diagonal
        let n = 120;
        let d: Vec<C> = (0..n).map(|i| C::new(1.0 / (1.0 + i as f64), 0.1 * (i as f64).sin())).collect();
        let dd = d.clone();
        let apply = move |x: &[C]| -> Result<Vec<C>> {
            Ok((0..n)
                .map(|i| dd[i] * x[i] + if i + 1 < n { 0.01 * x[i + 1] } else { ZERO })
                .collect())
        };
        let opts = ArnoldiOptions {
            nev: 4,
            ncv: 20,
            max_restarts: 200,
            tol: 1e-12,
            seed: 3,
        };
        let pairs = arnoldi_dominant(&apply, n, &opts).unwrap();
        for (i, (val, _)) in pairs.iter().enumerate() {
            assert!((val - d[i]).norm() < 1e-9, "{val} vs {}", d[i]);
        }
    }
}
