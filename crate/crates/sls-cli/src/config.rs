//! Flat `key = value` experiment configuration with line-precise errors.
//!
//! The format is a plain text file of dotted keys, one assignment per
//! line, `#` comments. Lists are comma-separated; complex numbers are
//! `re:im` pairs; spectral vectors are comma-separated complex lists and
//! lists of vectors are separated by `;`. The eigenvalue sequence may be
//! given either as an explicit list or as a power-law rule `k^-p`.

use std::collections::BTreeMap;
use std::path::Path;

use sls_core::scheme::TableScheme;
use sls_core::{NoiseSpec, Scheme, SpectralVector};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct Config {
    source: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("{source}:{lineno}: expected `key = value`"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::config(format!("{source}:{lineno}: empty key")));
            }
            if entries.insert(key.clone(), (value, lineno)).is_some() {
                return Err(CliError::config(format!(
                    "{source}:{lineno}: duplicate key `{key}`"
                )));
            }
        }
        Ok(Self {
            source: source.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// All key/value pairs, for manifest echoing.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, (v, _))| (k.clone(), v.clone()))
            .collect()
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), (value, 0));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn located(&self, key: &str) -> CliResult<(&str, usize)> {
        self.entries
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| {
                CliError::config(format!("{}: missing required key `{key}`", self.source))
            })
    }

    fn parse_err(&self, key: &str, lineno: usize, what: &str, got: &str) -> CliError {
        CliError::config(format!(
            "{}:{}: key `{key}`: expected {what}, got `{got}`",
            self.source, lineno
        ))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        let (v, l) = self.located(key)?;
        v.parse()
            .map_err(|_| self.parse_err(key, l, "a number", v))
    }

    pub fn f64_opt(&self, key: &str) -> CliResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    pub fn u64(&self, key: &str) -> CliResult<u64> {
        let (v, l) = self.located(key)?;
        v.parse()
            .map_err(|_| self.parse_err(key, l, "a nonnegative integer", v))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        let (v, l) = self.located(key)?;
        v.parse()
            .map_err(|_| self.parse_err(key, l, "a nonnegative integer", v))
    }

    pub fn f64_list(&self, key: &str) -> CliResult<Vec<f64>> {
        let (v, l) = self.located(key)?;
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| self.parse_err(key, l, "a comma-separated number list", t.trim()))
            })
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> CliResult<Vec<usize>> {
        let (v, l) = self.located(key)?;
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| self.parse_err(key, l, "a comma-separated integer list", t.trim()))
            })
            .collect()
    }

    fn parse_complex(&self, key: &str, lineno: usize, token: &str) -> CliResult<(f64, f64)> {
        let (re, im) = token.split_once(':').ok_or_else(|| {
            self.parse_err(key, lineno, "a complex `re:im` pair", token)
        })?;
        let re = re
            .trim()
            .parse()
            .map_err(|_| self.parse_err(key, lineno, "a number in `re:im`", re.trim()))?;
        let im = im
            .trim()
            .parse()
            .map_err(|_| self.parse_err(key, lineno, "a number in `re:im`", im.trim()))?;
        Ok((re, im))
    }

    /// A spectral vector: `re:im, re:im, …`.
    pub fn vector(&self, key: &str) -> CliResult<SpectralVector> {
        let (v, l) = self.located(key)?;
        let pairs: Vec<(f64, f64)> = v
            .split(',')
            .map(|t| self.parse_complex(key, l, t.trim()))
            .collect::<CliResult<_>>()?;
        SpectralVector::from_pairs(&pairs).map_err(CliError::from)
    }

    /// A `;`-separated list of spectral vectors.
    pub fn vector_list(&self, key: &str) -> CliResult<Vec<SpectralVector>> {
        let (v, l) = self.located(key)?;
        v.split(';')
            .map(|chunk| {
                let pairs: Vec<(f64, f64)> = chunk
                    .split(',')
                    .map(|t| self.parse_complex(key, l, t.trim()))
                    .collect::<CliResult<_>>()?;
                SpectralVector::from_pairs(&pairs).map_err(CliError::from)
            })
            .collect()
    }

    /// The noise model: amplitude, eigenvalue sequence (explicit list or
    /// `k^-p` rule truncated at `model.M`), and the optional complex part.
    pub fn noise_spec(&self) -> CliResult<NoiseSpec> {
        let alpha = self.f64("model.alpha")?;
        let m = self.usize("model.M")?;
        let (etas_text, lineno) = self.located("model.etas")?;
        let spec = if let Some(exp) = etas_text.trim().strip_prefix("k^") {
            let p: f64 = exp.parse().map_err(|_| {
                self.parse_err("model.etas", lineno, "a rule `k^-p`", etas_text)
            })?;
            if p >= 0.0 {
                return Err(self.parse_err(
                    "model.etas",
                    lineno,
                    "a decaying rule `k^-p` with p > 0",
                    etas_text,
                ));
            }
            NoiseSpec::power_law(alpha, -p, m).map_err(CliError::from)?
        } else {
            let etas = self.f64_list("model.etas")?;
            if etas.len() < m {
                return Err(CliError::config(format!(
                    "{}:{}: model.etas lists {} eigenvalues but model.M = {m}",
                    self.source,
                    lineno,
                    etas.len()
                )));
            }
            NoiseSpec::new(alpha, etas).map_err(CliError::from)?
        };
        match (self.get("model.etas1"), self.get("model.etas2"), self.get("model.rho")) {
            (None, None, None) => Ok(spec),
            (Some(_), Some(_), Some(_)) => {
                let e1 = self.f64_list("model.etas1")?;
                let e2 = self.f64_list("model.etas2")?;
                let rho = self.f64("model.rho")?;
                spec.with_complex(e1, e2, rho).map_err(CliError::from)
            }
            _ => Err(CliError::config(format!(
                "{}: complex noise needs all of model.etas1, model.etas2, model.rho",
                self.source
            ))),
        }
    }

    /// The temporal scheme named by `scheme.name`; `@path` loads a
    /// coefficient table.
    pub fn scheme(&self) -> CliResult<Scheme> {
        let (name, _) = self.located("scheme.name")?;
        load_scheme(name)
    }

    /// The initial datum, zero when absent.
    pub fn u0(&self, m: usize) -> CliResult<SpectralVector> {
        match self.get("model.u0") {
            None => Ok(SpectralVector::zero(m)),
            Some(_) => self.vector("model.u0"),
        }
    }
}

/// Resolves a scheme name: a catalog entry or `@path` to a table file.
pub fn load_scheme(name: &str) -> CliResult<Scheme> {
    if let Some(path) = name.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read scheme table {path}: {e}")))?;
        return Ok(Scheme::Table(TableScheme::parse(&text)?));
    }
    Scheme::by_name(name).map_err(CliError::from)
}

/// Grid syntax `a:b:n`: n evenly spaced points from a to b inclusive.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "grid `{text}` must have the form a:b:n"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::usage(format!("grid start `{}` is not a number", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("grid end `{}` is not a number", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::usage(format!("grid count `{}` is not an integer", parts[2])))?;
    if n == 0 {
        return Err(CliError::usage("grid count must be >= 1"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Reads a spectral vector from a text file: one `re im` (or `re:im`)
/// pair per line, `#` comments.
pub fn read_vector_file(path: &Path) -> CliResult<SpectralVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("bad-input", format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = if line.contains(':') {
            line.splitn(2, ':').collect()
        } else {
            line.split_whitespace().collect()
        };
        if tokens.len() != 2 {
            return Err(CliError::new(
                "bad-input",
                format!(
                    "{}:{}: expected `re im` on each line",
                    path.display(),
                    idx + 1
                ),
            ));
        }
        let re: f64 = tokens[0].trim().parse().map_err(|_| {
            CliError::new(
                "bad-input",
                format!("{}:{}: `{}` is not a number", path.display(), idx + 1, tokens[0]),
            )
        })?;
        let im: f64 = tokens[1].trim().parse().map_err(|_| {
            CliError::new(
                "bad-input",
                format!("{}:{}: `{}` is not a number", path.display(), idx + 1, tokens[1]),
            )
        })?;
        pairs.push((re, im));
    }
    if pairs.is_empty() {
        return Err(CliError::new(
            "bad-input",
            format!("{}: no coefficients found", path.display()),
        ));
    }
    SpectralVector::from_pairs(&pairs).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_lists_and_rules() {
        let cfg = Config::parse(
            "model.alpha = 1.5\nmodel.M = 2\nmodel.etas = 1, 0.25  # two modes\n",
            "test",
        )
        .unwrap();
        let spec = cfg.noise_spec().unwrap();
        assert_eq!(spec.alpha(), 1.5);
        assert_eq!(spec.etas(), &[1.0, 0.25]);

        let cfg = Config::parse("model.alpha = 1\nmodel.M = 3\nmodel.etas = k^-4\n", "test")
            .unwrap();
        let spec = cfg.noise_spec().unwrap();
        assert!((spec.eta(3) - 81f64.recip()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Config::parse("model.alpha = 1\nbogus line\n", "cfg.txt").unwrap_err();
        assert!(err.message.contains("cfg.txt:2"), "{}", err.message);

        let cfg = Config::parse("time.tau = fast\n", "cfg.txt").unwrap();
        let err = cfg.f64("time.tau").unwrap_err();
        assert!(err.message.contains("cfg.txt:1"), "{}", err.message);
        assert!(err.message.contains("time.tau"));

        let err = cfg.f64("time.N").unwrap_err();
        assert!(err.message.contains("missing required key"));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = Config::parse("a = 1\na = 2\n", "cfg").unwrap_err();
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn vectors_and_vector_lists() {
        let cfg = Config::parse(
            "observables.lambda = 1:0, 0:0.5\nobservables.points = 1:0,0:0 ; 0:0,0:1\n",
            "test",
        )
        .unwrap();
        let lam = cfg.vector("observables.lambda").unwrap();
        assert_eq!(lam.modes(), 2);
        assert_eq!(lam.coeff(2).im, 0.5);
        let pts = cfg.vector_list("observables.points").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].coeff(2).im, 1.0);
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("a:2:3").is_err());
    }

    #[test]
    fn growing_rule_is_rejected() {
        let cfg = Config::parse("model.alpha = 1\nmodel.M = 2\nmodel.etas = k^2\n", "t").unwrap();
        assert!(cfg.noise_spec().is_err());
    }
}
