//! The six experiment subcommands. Each one fills an [`Output`] and leaves
//! writing to the caller.

use lamelab::catalog::{random_band_limited, sample_catalog_field};
use lamelab::grid::{dirichlet_energy, divergence, inner_l2, jacobian};
use lamelab::helmholtz::decompose;
use lamelab::inequalities::{
    estimate_lambda, estimate_regularity_constant, estimate_smallness_a, hardy_constant, hardy_family_sup,
    lambda_condition_lhs,
};
use lamelab::lame::{apply_lame, apply_lame_helmholtz, quadratic_form};
use lamelab::multiplier::{fund_combination, identity_suite, manufacture_f};
use lamelab::resolvent::sweep;
use lamelab::spectral::{assemble, classify_point_spectrum, compute_spectrum, SpectralReport};
use lamelab::{Complex64, Error, Grid, Potential, Result, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{num, Output};

pub const SUBCOMMANDS: &[&str] = &["decompose", "operator-check", "identities", "constants", "spectrum", "resolvent-sweep"];

pub fn run(name: &str, cfg: &Config, out: &mut Output) -> Result<()> {
    match name {
        "decompose" => decompose_cmd(cfg, out),
        "operator-check" => operator_check(cfg, out),
        "identities" => identities(cfg, out),
        "constants" => constants(cfg, out),
        "spectrum" => spectrum(cfg, out),
        "resolvent-sweep" => resolvent_sweep(cfg, out),
        other => Err(Error::InvalidArgument(format!("unknown subcommand `{other}`"))),
    }
}

/// Trial `t` of the random suite: stream `t` of the configured seed.
fn trial_field(cfg: &Config, t: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t as u64);
    random_band_limited(&cfg.grid, cfg.max_mode, &mut rng)
}

fn rel(a: &VectorField, b: &VectorField) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn decompose_cmd(cfg: &Config, out: &mut Output) -> Result<()> {
    let rows: Vec<[f64; 4]> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let u = trial_field(cfg, t);
            let dec = decompose(&u);
            let energy = dirichlet_energy(&u);
            let h1: Complex64 = jacobian(&dec.u_s)
                .iter()
                .zip(&jacobian(&dec.u_p))
                .map(|(a, b)| inner_l2(a, b))
                .sum::<Result<Complex64>>()?;
            Ok([
                rel(&(&dec.u_s + &dec.u_p), &u),
                divergence(&dec.u_s).norm() / energy.sqrt(),
                inner_l2(&dec.u_s, &dec.u_p)?.norm() / u.norm().powi(2),
                h1.norm() / energy,
            ])
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().flatten().fold(0.0f64, |m, r| m.max(*r));
    out.derive("max_residual", num(worst));
    out.dat(
        "decompose.dat",
        &["trial", "max_residual"],
        rows.iter().enumerate().map(|(t, r)| vec![t as f64, r.iter().fold(0.0f64, |m, x| m.max(*x))]).collect(),
    );
    out.csv(
        "decompose.csv",
        &["trial", "reconstruction", "divergence", "l2_orthogonality", "h1_orthogonality"],
        rows.iter()
            .enumerate()
            .map(|(t, r)| std::iter::once(t.to_string()).chain(r.iter().map(|x| num(*x))).collect())
            .collect(),
    );
    Ok(())
}

fn operator_check(cfg: &Config, out: &mut Output) -> Result<()> {
    let p = cfg.params;
    let rows: Vec<[f64; 2]> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let u = trial_field(cfg, t);
            let a = apply_lame(&u, &p)?;
            let q = quadratic_form(&u, &p)?;
            let re = inner_l2(&a, &u)?.re;
            Ok([rel(&apply_lame_helmholtz(&u, &p)?, &a), (q - re).abs() / re.abs().max(f64::MIN_POSITIVE)])
        })
        .collect::<Result<_>>()?;
    out.dat(
        "operator_check.dat",
        &["trial", "operator_equivalence", "quadratic_form"],
        rows.iter().enumerate().map(|(t, r)| vec![t as f64, r[0], r[1]]).collect(),
    );
    out.csv(
        "operator_check.csv",
        &["trial", "operator_equivalence", "quadratic_form"],
        rows.iter().enumerate().map(|(t, r)| vec![t.to_string(), num(r[0]), num(r[1])]).collect(),
    );
    Ok(())
}

/// Solenoidal plus gradient Gaussian of width `sigma`: both wave speeds
/// carry a non-trivial component.
fn mixed_field(cfg: &Config) -> Result<VectorField> {
    Ok(&sample_catalog_field("gaussian_rotation", &[cfg.sigma], &cfg.grid)?
        + &sample_catalog_field("gaussian_gradient", &[cfg.sigma], &cfg.grid)?)
}

/// Smooth source with a non-zero mean-free and a rotational part.
fn source_field(cfg: &Config) -> Result<VectorField> {
    Ok(&sample_catalog_field("gaussian_bump", &[cfg.sigma, 1.0], &cfg.grid)?
        + &sample_catalog_field("gaussian_rotation", &[cfg.sigma], &cfg.grid)?)
}

fn identities(cfg: &Config, out: &mut Output) -> Result<()> {
    let u = mixed_field(cfg)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dat = Vec::new();
    let mut push = |identity: &str, weight: &str, component: &str, c: f64, k: Complex64, lhs: f64, rhs: f64, res: f64| {
        dat.push(vec![dat.len() as f64, res / (lhs.abs() + rhs.abs()).max(f64::MIN_POSITIVE)]);
        rows.push(vec![
            identity.to_string(),
            weight.to_string(),
            component.to_string(),
            num(c),
            num(k.re),
            num(k.im),
            num(lhs),
            num(rhs),
            num(res),
        ]);
    };
    for row in identity_suite(&u, &cfg.params, cfg.k)? {
        let r = &row.report;
        push(r.identity, &row.weight, row.component, row.c, row.k, r.lhs, r.rhs, r.residual);
    }
    // the combination only exists where the fundamental identity does
    if cfg.k.re > 0.0 && cfg.k.im.abs() <= cfg.k.re {
        let m = manufacture_f(&u, &cfg.params, cfg.k)?;
        for (component, pair) in [("S", m.s_pair()), ("P", m.p_pair())] {
            let r = fund_combination(&pair)?;
            push("fund_combination", "-", component, pair.c(), pair.k(), r.lhs, r.rhs, r.residual);
        }
    }
    out.dat("identities.dat", &["row", "relative_residual"], dat);
    out.csv(
        "identities.csv",
        &["identity", "weight", "component", "c", "k_re", "k_im", "lhs", "rhs", "residual"],
        rows,
    );
    Ok(())
}

fn constants(cfg: &Config, out: &mut Output) -> Result<()> {
    let g = cfg.grid;
    let d = g.dim();
    let v = Potential::from_spec(&cfg.potential, g)?;
    let hardy = |weighted: bool| -> Result<(f64, String)> {
        let min_d = if weighted { 2 } else { 3 };
        if d < min_d {
            return Ok((f64::NAN, format!("undefined for d < {min_d}")));
        }
        let e = hardy_family_sup(&g, weighted, cfg.hardy_trials, cfg.seed)?;
        Ok((e.value, format!("family sup; sharp value {}", num(hardy_constant(d, weighted)))))
    };
    let (hc, hc_note) = hardy(false)?;
    let (hw, hw_note) = hardy(true)?;
    let lambda = estimate_lambda(&v, &cfg.lanczos)?;
    let a = estimate_smallness_a(&v, cfg.hardy_trials, cfg.seed, &cfg.lanczos)?;
    let c_hat = estimate_regularity_constant(&g, cfg.regularity_s, cfg.trials, cfg.seed)?;
    let c_margin = cfg.c_margin.unwrap_or(2.0 * c_hat.value);
    out.derive("c_margin", num(c_margin));
    let lhs = lambda_condition_lhs(lambda.value, &cfg.params, d, c_margin);

    let rows = [
        ("hardy_classical", hc, hc_note),
        ("hardy_weighted", hw, hw_note),
        ("lambda_hat", lambda.value, format!("potential {}", cfg.potential)),
        ("a_hat", a.value, format!("family sup; potential {}", cfg.potential)),
        ("C_hat", c_hat.value, format!("s = {}", num(cfg.regularity_s))),
        (
            "lambda_condition_lhs",
            lhs,
            format!("C_margin = {}; condition holds iff < 1", num(c_margin)),
        ),
    ];
    out.csv(
        "constants.csv",
        &["name", "value", "d", "n", "L", "notes"],
        rows.into_iter()
            .map(|(name, value, note)| {
                vec![name.to_string(), num(value), d.to_string(), g.n().to_string(), num(g.half_width()), note]
            })
            .collect(),
    );
    Ok(())
}

fn spectrum_on(cfg: &Config, grid: Grid, shift: Complex64) -> Result<SpectralReport> {
    let h = assemble(grid, cfg.params, Potential::from_spec(&cfg.potential, grid)?)?;
    compute_spectrum(&h, &cfg.spectrum_options(shift))
}

fn spectrum(cfg: &Config, out: &mut Output) -> Result<()> {
    let g = cfg.grid;
    let doubled = Grid::new(g.dim(), 2 * g.n(), 2.0 * g.half_width())?;
    let shift = match cfg.shift {
        Some(s) => s,
        None => {
            let v = Potential::from_spec(&cfg.potential, g)?;
            let min_re = v.values().values().iter().map(|z| z.re).fold(0.0f64, f64::min);
            Complex64::new(min_re - 1.0, 0.0)
        }
    };
    out.derive("shift_re", num(shift.re));
    out.derive("shift_im", num(shift.im));
    out.derive("doubled_grid", format!("n = {}, L = {}", doubled.n(), num(doubled.half_width())));
    let (small, large) = rayon::join(|| spectrum_on(cfg, g, shift), || spectrum_on(cfg, doubled, shift));
    let (small, large) = (small?, large?);
    let r = classify_point_spectrum(&small, &large, &cfg.classify)?;
    out.derive("method", format!("{:?}", r.method));
    out.derive("doubled_method", format!("{:?}", large.method));
    out.derive("candidates", r.candidates().len());

    let rows = (0..r.len())
        .map(|i| {
            vec![
                num(r.eigenvalues[i].re),
                num(r.eigenvalues[i].im),
                num(r.localization[i]),
                r.drift[i].map_or("NaN".to_string(), num),
                r.candidate[i].to_string(),
            ]
        })
        .collect();
    out.csv("spectrum.csv", &["eig_re", "eig_im", "localization", "drift", "candidate"], rows);
    let dat = |rep: &SpectralReport| -> Vec<Vec<f64>> {
        (0..rep.len())
            .map(|i| vec![rep.eigenvalues[i].re, rep.eigenvalues[i].im, rep.localization[i]])
            .collect()
    };
    out.dat("spectrum.dat", &["eig_re", "eig_im", "localization"], dat(&r));
    out.dat("spectrum_doubled.dat", &["eig_re", "eig_im", "localization"], dat(&large));
    Ok(())
}

fn resolvent_sweep(cfg: &Config, out: &mut Output) -> Result<()> {
    let v = Potential::from_spec(&cfg.potential, cfg.grid)?;
    let f = source_field(cfg)?;
    let points = cfg.region.points();
    let res = sweep(&cfg.grid, &cfg.params, &v, &f, &points, &cfg.resolvent)?;
    out.derive("sup_ratio", num(res.sup_ratio));
    out.derive("worst_k_re", num(res.worst_k.re));
    out.derive("worst_k_im", num(res.worst_k.im));
    out.derive("skipped", res.skipped.len());
    out.derive("source", format!("gaussian_bump(sigma, component 1) + gaussian_rotation(sigma), sigma = {}", num(cfg.sigma)));

    let rows = res
        .k_points
        .iter()
        .zip(&res.ratios)
        .map(|(k, r)| vec![num(k.re), num(k.im), r.map_or("NaN".to_string(), num), r.is_none().to_string()])
        .collect();
    out.csv("sweep.csv", &["k_re", "k_im", "ratio", "skipped"], rows);
    out.dat(
        "sweep.dat",
        &["k_re", "k_im", "ratio"],
        res.k_points
            .iter()
            .zip(&res.ratios)
            .filter_map(|(k, r)| r.map(|r| vec![k.re, k.im, r]))
            .collect(),
    );
    Ok(())
}
