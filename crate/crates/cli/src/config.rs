//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; unknown
//! and repeated keys are rejected. Validation against the grid happens in
//! [`Config::parse`], so a run never starts on a configuration it cannot
//! finish for structural reasons.

use std::collections::HashMap;
use std::fmt::Display;
use std::str::FromStr;

use lamelab::inequalities::LanczosOptions;
use lamelab::krylov::GmresOptions;
use lamelab::lame::check_coefficients;
use lamelab::resolvent::{KRegion, ResolventOptions};
use lamelab::spectral::{ClassifyOptions, SpectrumOptions};
use lamelab::{Complex64, Grid, LameParams, Potential, PotentialSpec};

#[derive(Clone, Debug)]
pub struct Config {
    pub grid: Grid,
    pub params: LameParams,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub trials: usize,
    pub max_mode: usize,
    pub sigma: f64,
    pub k: Complex64,
    pub n_eigs: usize,
    /// `None` selects `min(0, min Re V) - 1`.
    pub shift: Option<Complex64>,
    pub classify: ClassifyOptions,
    pub region: KRegion,
    pub resolvent: ResolventOptions,
    pub regularity_s: f64,
    /// `None` selects twice the estimated regularity constant.
    pub c_margin: Option<f64>,
    pub hardy_trials: usize,
    pub lanczos: LanczosOptions,
    /// Resolved `(key, value)` pairs in canonical order, for the manifest.
    pub echo: Vec<(String, String)>,
}

struct Reader {
    raw: HashMap<String, String>,
    echo: Vec<(String, String)>,
}

impl Reader {
    fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, String>
    where
        T::Err: Display,
    {
        let v = match self.raw.remove(key) {
            Some(s) => s.parse::<T>().map_err(|e| format!("{key}: cannot parse `{s}`: {e}"))?,
            None => default,
        };
        self.echo.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    fn optional<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: Display,
    {
        let v = match self.raw.remove(key) {
            Some(s) => Some(s.parse::<T>().map_err(|e| format!("{key}: cannot parse `{s}`: {e}"))?),
            None => None,
        };
        let shown = v.as_ref().map_or("auto".to_string(), |v| v.to_string());
        self.echo.push((key.to_string(), shown));
        Ok(v)
    }
}

fn positive(key: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{key} must be positive and finite, got {v}"))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize, String> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(format!("{key} must be at least 1"))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut raw = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", no + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(format!("line {}: empty key", no + 1));
            }
            if raw.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{k}`", no + 1));
            }
        }
        let mut r = Reader { raw, echo: Vec::new() };

        let d: usize = r.get("d", 3)?;
        let n: usize = r.get("n", 16)?;
        let l: f64 = r.get("L", 4.0)?;
        let grid = Grid::new(d, n, l).map_err(|e| e.to_string())?;
        let mu: f64 = r.get("mu", 1.0)?;
        let lambda: f64 = r.get("lambda", 0.0)?;
        let params = LameParams::new(mu, lambda);
        if !check_coefficients(&params).ellipticity {
            return Err(format!("mu = {mu}, lambda = {lambda} is not elliptic"));
        }
        let potential: PotentialSpec = r.get("potential", PotentialSpec::Zero)?;
        Potential::from_spec(&potential, grid).map_err(|e| e.to_string())?;

        let seed: u64 = r.get("seed", 0)?;
        let trials = at_least_one("trials", r.get("trials", 8)?)?;
        let max_mode = at_least_one("max_mode", r.get("max_mode", 4)?)?;
        if max_mode > n / 2 {
            return Err(format!("max_mode = {max_mode} exceeds n/2 = {}", n / 2));
        }
        let sigma = positive("sigma", r.get("sigma", l / 8.0)?)?;
        if 6.0 * sigma > l * (1.0 + 1e-12) {
            return Err(format!("sigma = {sigma} too wide for L = {l} (need 6 sigma <= L)"));
        }
        let k = Complex64::new(r.get("k_re", 4.0)?, r.get("k_im", 1.0)?);

        let n_eigs = at_least_one("n_eigs", r.get("n_eigs", 6)?)?;
        let shift = match (r.optional::<f64>("shift_re")?, r.optional::<f64>("shift_im")?) {
            (None, None) => None,
            (Some(re), im) => Some(Complex64::new(re, im.unwrap_or(0.0))),
            (None, Some(_)) => return Err("shift_im given without shift_re".into()),
        };
        let classify = ClassifyOptions {
            max_drift: positive("max_drift", r.get("max_drift", 1e-2)?)?,
            min_localization: r.get("min_localization", 0.5)?,
        };

        let region = KRegion {
            re: (r.get("re_min", 0.5)?, r.get("re_max", 8.0)?),
            im: (r.get("im_min", 0.5)?, r.get("im_max", 4.0)?),
            n_re: r.get("n_re", 4)?,
            n_im: r.get("n_im", 4)?,
        };
        region.validate().map_err(|e| e.to_string())?;
        let defaults = ResolventOptions::default();
        let resolvent = ResolventOptions {
            eta: r.get("eta", 0.0)?,
            resonance_threshold: positive("resonance_threshold", r.get("resonance_threshold", defaults.resonance_threshold)?)?,
            gmres: GmresOptions {
                tol: positive("gmres_tol", r.get("gmres_tol", defaults.gmres.tol)?)?,
                max_iter: at_least_one("gmres_max_iter", r.get("gmres_max_iter", defaults.gmres.max_iter)?)?,
                restart: at_least_one("gmres_restart", r.get("gmres_restart", defaults.gmres.restart)?)?,
            },
        };

        let regularity_s: f64 = r.get("regularity_s", 1.0)?;
        if !(regularity_s.abs() < d as f64) {
            return Err(format!("regularity_s = {regularity_s} outside (-{d}, {d})"));
        }
        let c_margin: Option<f64> = r.optional("c_margin")?;
        if let Some(c) = c_margin {
            if !(c.is_finite() && c >= 0.0) {
                return Err(format!("c_margin must be non-negative, got {c}"));
            }
        }
        let hardy_trials: usize = r.get("hardy_trials", 16)?;
        let ld = LanczosOptions::default();
        let lanczos = LanczosOptions {
            max_iter: at_least_one("lanczos_max_iter", r.get("lanczos_max_iter", ld.max_iter)?)?,
            tol: positive("lanczos_tol", r.get("lanczos_tol", ld.tol)?)?,
            seed,
        };

        if let Some(key) = r.raw.keys().min() {
            return Err(format!("unknown key `{key}`"));
        }
        Ok(Self {
            grid,
            params,
            potential,
            seed,
            trials,
            max_mode,
            sigma,
            k,
            n_eigs,
            shift,
            classify,
            region,
            resolvent,
            regularity_s,
            c_margin,
            hardy_trials,
            lanczos,
            echo: r.echo,
        })
    }

    /// Overrides the seed (the `--seed` flag) and keeps the echo in sync.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.lanczos.seed = seed;
        for (k, v) in &mut self.echo {
            if k == "seed" {
                *v = seed.to_string();
            }
        }
        self
    }

    pub fn spectrum_options(&self, shift: Complex64) -> SpectrumOptions {
        SpectrumOptions {
            n_eigs: self.n_eigs,
            shift,
            seed: self.seed,
            ..Default::default()
        }
    }
}
