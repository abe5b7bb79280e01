//! Flat sectioned `key = value` configuration.
//!
//! ```text
//! # comment
//! [model]
//! backend = abstract
//! n = 8
//! noise.beta = 1.5     # fully qualified keys work anywhere
//! ```
//!
//! Every key has the form `section.name` with sections `model`, `noise`,
//! `ou`, `time`, `measure` and `output`. Keys are case-insensitive.
//! Environment variables `SNSE_<SECTION>_<NAME>` override file values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::info;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::measure::{ObservableSchema, DEFAULT_COEFFS};
use crate::ou::{calibrate_alpha, AlphaCalibration};
use crate::rng::{domain, stream_id, RngStream};
use crate::spectral::{
    estimate_eta, Bilinear, CoriolisOperator, EigenRule, EtaEstimate, Field, SparseTensor, SpectralBasis,
    SpectralModel,
};
use crate::stable::StableParams;

pub const ENV_PREFIX: &str = "SNSE_";

/// `(key, default)`; `None` marks a required key.
pub const SCHEMA: &[(&str, Option<&str>)] = &[
    ("model.backend", None),
    ("model.n", Some("16")),
    ("model.eigen", Some("torus")),
    ("model.eigenvalues", Some("")),
    ("model.grid", Some("16")),
    ("model.tensor_density", Some("0.3")),
    ("model.tensor_scale", Some("0.1")),
    ("model.coriolis", Some("0")),
    ("model.forcing", Some("0")),
    ("model.seed", Some("0")),
    ("noise.beta", None),
    ("noise.m", Some("4")),
    ("noise.sigma", Some("1")),
    ("noise.seed", Some("0")),
    ("ou.alpha", Some("auto")),
    ("ou.target", Some("auto")),
    ("ou.calibration_samples", Some("20000")),
    ("ou.eta_trials", Some("10000")),
    ("time.h", None),
    ("time.t", None),
    ("time.nu", Some("1")),
    ("time.scheme", Some("semi_implicit")),
    ("time.record_stride", Some("1")),
    ("time.u0", Some("0")),
    ("measure.delta", Some("0.25")),
    ("measure.burn_in", Some("auto")),
    ("measure.observables", Some("standard")),
    ("measure.k", Some("8")),
    ("measure.p", Some("1.2")),
    ("measure.trajectories", Some("1")),
    ("measure.horizons", Some("auto")),
    ("measure.shift", Some("1")),
    ("measure.max_samples", Some("2000")),
    ("measure.feller_radii", Some("1e-3,1e-4,1e-5,1e-6")),
    ("measure.feller_pairs", Some("16")),
    ("measure.feller_t", Some("1")),
    ("output.dir", Some("out")),
    ("output.binary_dump", Some("false")),
];

fn default_of(key: &str) -> Option<Option<&'static str>> {
    SCHEMA.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    /// Explicitly set values with the line they came from (0 for overrides).
    values: BTreeMap<String, (String, usize)>,
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line: line_no,
                    msg: format!("unterminated section header `{line}`"),
                })?;
                section = Some(name.trim().to_ascii_lowercase());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let k = k.trim().to_ascii_lowercase();
            let key = match (&section, k.contains('.')) {
                (_, true) => k,
                (Some(s), false) => format!("{s}.{k}"),
                (None, false) => {
                    return Err(Error::Config {
                        line: line_no,
                        msg: format!("key `{k}` needs a section"),
                    })
                }
            };
            if default_of(&key).is_none() {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if let Some((_, prev)) = cfg.values.get(&key) {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("duplicate key `{key}` (first set on line {prev})"),
                });
            }
            cfg.values.insert(key, (v.trim().to_string(), line_no));
        }
        Ok(cfg)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    /// Overrides from `SNSE_<SECTION>_<NAME>` pairs; other variables are
    /// ignored, unknown keys under the prefix are errors.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        let mut vars: Vec<(String, String)> = vars
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        vars.sort();
        for (k, v) in vars {
            let rest = k[ENV_PREFIX.len()..].to_ascii_lowercase();
            let Some((section, name)) = rest.split_once('_') else {
                return Err(Error::ConfigKey(format!("malformed override `{k}`")));
            };
            let key = format!("{section}.{name}");
            if default_of(&key).is_none() {
                return Err(Error::ConfigKey(format!("override `{k}` names unknown key `{key}`")));
            }
            self.set(&key, &v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.to_ascii_lowercase();
        if default_of(&key).is_none() {
            return Err(Error::ConfigKey(format!("unknown key `{key}`")));
        }
        self.values.insert(key, (value.to_string(), 0));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Result<String> {
        if let Some((v, _)) = self.values.get(key) {
            return Ok(v.clone());
        }
        match default_of(key) {
            Some(Some(d)) => Ok(d.to_string()),
            Some(None) => Err(Error::ConfigKey(format!("missing required key `{key}`"))),
            None => Err(Error::ConfigKey(format!("unknown key `{key}`"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(_, l)| *l)
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        let v = self.raw(key).unwrap_or_default();
        match self.line(key) {
            0 => Error::ConfigKey(format!("`{key}` = `{v}`: {what}")),
            line => Error::Config {
                line,
                msg: format!("`{key}` = `{v}`: {what}"),
            },
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.raw(key)?
            .parse::<f64>()
            .map_err(|_| self.bad(key, "expected a number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.raw(key)?
            .parse::<usize>()
            .map_err(|_| self.bad(key, "expected a nonnegative integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.raw(key)?
            .parse::<u64>()
            .map_err(|_| self.bad(key, "expected an unsigned integer"))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key)?.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(self.bad(key, "expected true or false")),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| self.bad(key, "expected a comma-separated list of numbers")))
            .collect()
    }

    /// `None` when the value is `auto`.
    pub fn auto_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key)? == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    /// Every key with its effective value, sorted.
    pub fn effective(&self) -> Result<Vec<(String, String)>> {
        SCHEMA
            .iter()
            .map(|(k, _)| Ok((k.to_string(), self.raw(k)?)))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of the effective `key=value` lines.
    pub fn hash(&self) -> Result<String> {
        let mut text = String::new();
        for (k, v) in self.effective()? {
            let _ = writeln!(text, "{k}={v}");
        }
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64("noise.seed")
    }

    pub fn build_model(&self) -> Result<SpectralModel> {
        let m = self.usize("noise.m")?;
        let mut model = match self.raw("model.backend")?.as_str() {
            "nse2d" => SpectralModel::nse2d(self.usize("model.grid")?, m, self.f64("model.coriolis")?)?,
            "abstract" => {
                let n = self.usize("model.n")?;
                let basis = match self.raw("model.eigen")?.as_str() {
                    "torus" => SpectralBasis::from_rule(&EigenRule::Torus, n, m)?,
                    "sphere" => SpectralBasis::from_rule(&EigenRule::Sphere, n, m)?,
                    "explicit" => SpectralBasis::from_rule(&EigenRule::Explicit(self.list("model.eigenvalues")?), n, m)?,
                    _ => return Err(self.bad("model.eigen", "expected torus, sphere or explicit")),
                };
                let mut s = RngStream::new(self.u64("model.seed")?, stream_id(domain::MODEL, 0, 0));
                let tensor = SparseTensor::random(
                    n,
                    self.f64("model.tensor_density")?,
                    self.f64("model.tensor_scale")?,
                    &mut s,
                )?;
                let rate = self.f64("model.coriolis")?;
                let coriolis = if rate == 0.0 {
                    CoriolisOperator::zero(n)
                } else {
                    CoriolisOperator::random_skew(&basis, rate, &mut s)
                };
                SpectralModel::new(basis, Bilinear::Abstract(tensor), coriolis, Field::zeros(n))?
            }
            _ => return Err(self.bad("model.backend", "expected abstract or nse2d")),
        };
        model.forcing = self.head_field("model.forcing", model.n())?;
        Ok(model)
    }

    /// Field whose leading coefficients come from a list; a single value
    /// sets only the first coefficient.
    fn head_field(&self, key: &str, n: usize) -> Result<Field> {
        let head = self.list(key)?;
        if head.len() > n {
            return Err(self.bad(key, &format!("more than N={n} coefficients")));
        }
        let mut f = Field::zeros(n);
        f.add_head(&head);
        Ok(f)
    }

    pub fn build_params(&self) -> Result<StableParams> {
        let m = self.usize("noise.m")?;
        let sigma = self.list("noise.sigma")?;
        let sigma = match sigma.len() {
            1 => vec![sigma[0]; m],
            k if k == m => sigma,
            _ => return Err(self.bad("noise.sigma", &format!("expected 1 or {m} values"))),
        };
        StableParams::new(self.f64("noise.beta")?, sigma)
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let mut cfg = IntegratorConfig::new(self.f64("time.h")?, self.f64("time.t")?);
        cfg.nu = self.f64("time.nu")?;
        cfg.scheme = self.raw("time.scheme")?.parse()?;
        cfg.record_stride = self.usize("time.record_stride")?;
        cfg.delta = self.f64("measure.delta")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Observable schema for a model of dimension `n`; the standard schema
    /// is capped at `n` coefficients.
    pub fn observables(&self, n: usize) -> Result<ObservableSchema> {
        let schema = match self.raw("measure.observables")?.as_str() {
            "standard" => ObservableSchema::standard(self.usize("measure.k").unwrap_or(DEFAULT_COEFFS).min(n)),
            list => ObservableSchema::parse(list)?,
        };
        schema.validate_for(n)?;
        Ok(schema)
    }

    pub fn burn_in(&self, horizon: f64) -> Result<f64> {
        Ok(self.auto_f64("measure.burn_in")?.unwrap_or(horizon / 10.0))
    }
}

/// Everything built from a config: model, noise, eta, alpha and the run
/// configuration.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: Config,
    pub model: SpectralModel,
    pub params: StableParams,
    pub eta: EtaEstimate,
    pub alpha: f64,
    pub calibration: Option<AlphaCalibration>,
    pub cfg: IntegratorConfig,
    pub u0: Field,
    pub seed: u64,
    pub hash: String,
}

impl Setup {
    pub fn new(config: Config) -> Result<Self> {
        let model = config.build_model()?;
        let params = config.build_params()?;
        if params.m() > model.n() {
            return Err(Error::ConfigKey(format!("noise.m = {} exceeds N = {}", params.m(), model.n())));
        }
        let cfg = config.integrator_config()?;
        let seed = config.seed()?;
        let mut s = RngStream::new(config.u64("model.seed")?, stream_id(domain::MODEL, 1, 0));
        let eta = estimate_eta(&model, config.usize("ou.eta_trials")?, &mut s)?;
        let (alpha, calibration) = match config.auto_f64("ou.alpha")? {
            Some(a) => (a, None),
            None => {
                let cal = calibrate_alpha(
                    &model.basis,
                    eta.certified,
                    &params,
                    cfg.nu,
                    config.auto_f64("ou.target")?,
                    config.usize("ou.calibration_samples")?,
                    seed,
                )?;
                (cal.alpha, Some(cal))
            }
        };
        let u0 = config.head_field("time.u0", model.n())?;
        let hash = config.hash()?;
        info!(
            "setup: backend={} N={} m={} eta={:.4e} alpha={alpha:.4e} hash={hash}",
            model.bilinear.tag(),
            model.n(),
            params.m(),
            eta.certified
        );
        Ok(Self {
            config,
            model,
            params,
            eta,
            alpha,
            calibration,
            cfg,
            u0,
            seed,
            hash,
        })
    }
}
