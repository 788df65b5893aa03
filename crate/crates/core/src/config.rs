//! Experiment configuration: flat `key = value` text with `#` comments.
//!
//! ```text
//! lambda = 0.7
//! n = 2
//! N_list = 100, 1000, 10000
//! t0 = 5
//! replicas = 20
//! ```
//!
//! Recognised keys and defaults:
//!
//! | key            | default        | meaning                                        |
//! |----------------|----------------|------------------------------------------------|
//! | `lambda`       | required       | arrival intensity per queue, in (0,1)          |
//! | `n`            | required       | sample size, >= 1                              |
//! | `N_list`       | required       | strictly ascending population sizes            |
//! | `t0`           | 1.0            | time horizon, > 0                              |
//! | `replicas`     | 20             | replicas per population size                   |
//! | `base_seed`    | 1              | root of all randomness                         |
//! | `d_override`   | none           | fixed depth instead of the cutoff `d(N)`       |
//! | `tol`          | 1e-10          | ODE step-refinement tolerance                  |
//! | `phi`          | `loglog:2`     | `phi(N) = exp((ln ln N)^p)` for `loglog:p`     |
//! | `out`          | `out`          | output directory                               |
//! | `R_list`       | 2, 5, 10, 20   | thresholds for the tail event on level `d+1`   |
//! | `C_cfg`        | 4.0            | value used for every unspecified constant      |
//! | `grid_per_unit`| 200            | trajectory sampling density                    |
//! | `mc_reps`      | 10000          | Monte Carlo replicas for corrector estimates   |

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bounds::Phi;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub t0: f64,
    pub replicas: usize,
    pub base_seed: u64,
    pub d_override: Option<usize>,
    pub tol: f64,
    pub phi: Phi,
    pub out: PathBuf,
    pub r_list: Vec<f64>,
    pub c_cfg: f64,
    pub grid_per_unit: f64,
    pub mc_reps: usize,
}

impl ExperimentConfig {
    /// A configuration with every optional key at its default.
    pub fn new(lambda: f64, n: usize, n_list: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            lambda,
            n,
            n_list,
            t0: 1.0,
            replicas: 20,
            base_seed: 1,
            d_override: None,
            tol: 1e-10,
            phi: Phi::default(),
            out: PathBuf::from("out"),
            r_list: vec![2.0, 5.0, 10.0, 20.0],
            c_cfg: 4.0,
            grid_per_unit: 200.0,
            mc_reps: 10_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::ConfigInvalid { field: field.into(), msg: msg.into() });
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad("lambda", "lambda must be in (0,1)");
        }
        if self.n == 0 {
            return bad("n", "n must be >= 1");
        }
        if self.n_list.is_empty() {
            return bad("N_list", "N_list must not be empty");
        }
        if self.n_list.contains(&0) {
            return bad("N_list", "population sizes must be >= 1");
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("N_list", "N_list must be strictly ascending");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0", "t0 must be > 0");
        }
        if self.replicas == 0 {
            return bad("replicas", "replicas must be >= 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol", "tol must be > 0");
        }
        if !(self.phi.power > 0.0) {
            return bad("phi", "phi exponent must be > 0");
        }
        if self.r_list.is_empty() || self.r_list.iter().any(|&r| !(r > 0.0)) {
            return bad("R_list", "R_list must hold positive values");
        }
        if !(self.c_cfg > 0.0) {
            return bad("C_cfg", "C_cfg must be > 0");
        }
        if !(self.grid_per_unit >= 0.0) {
            return bad("grid_per_unit", "grid_per_unit must be >= 0");
        }
        if self.mc_reps == 0 {
            return bad("mc_reps", "mc_reps must be >= 1");
        }
        Ok(())
    }

    /// Renders the configuration back to parseable text.
    pub fn to_text(&self) -> String {
        let list = |v: &[String]| v.join(", ");
        let mut s = String::new();
        s.push_str(&format!("lambda = {}\n", self.lambda));
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("N_list = {}\n", list(&self.n_list.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        s.push_str(&format!("t0 = {}\n", self.t0));
        s.push_str(&format!("replicas = {}\n", self.replicas));
        s.push_str(&format!("base_seed = {}\n", self.base_seed));
        if let Some(d) = self.d_override {
            s.push_str(&format!("d_override = {d}\n"));
        }
        s.push_str(&format!("tol = {:e}\n", self.tol));
        s.push_str(&format!("phi = loglog:{}\n", self.phi.power));
        s.push_str(&format!("out = {}\n", self.out.display()));
        s.push_str(&format!("R_list = {}\n", list(&self.r_list.iter().map(|v| v.to_string()).collect::<Vec<_>>())));
        s.push_str(&format!("C_cfg = {}\n", self.c_cfg));
        s.push_str(&format!("grid_per_unit = {}\n", self.grid_per_unit));
        s.push_str(&format!("mc_reps = {}\n", self.mc_reps));
        s
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::ConfigParse { line, msg: format!("cannot parse value {v:?} for {key}") })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(line, key, s))
        .collect()
}

/// Accepts integers in plain (`10000`) or exponent (`1e4`) notation.
fn parse_count(line: usize, key: &str, v: &str) -> Result<usize> {
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let f: f64 = parse_num(line, key, v)?;
    if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(63) {
        Ok(f as usize)
    } else {
        Err(Error::ConfigParse { line, msg: format!("{key} needs a non-negative integer, got {v:?}") })
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut lambda = None;
    let mut n = None;
    let mut n_list = None;
    let mut cfg = ExperimentConfig::new(0.5, 1, vec![1])?;
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::ConfigParse { line, msg: format!("expected `key = value`, got {content:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigParse { line, msg: format!("duplicate key {key}") });
        }
        match key {
            "lambda" => lambda = Some(parse_num(line, key, value)?),
            "n" => n = Some(parse_count(line, key, value)?),
            "N_list" => {
                let items: Vec<String> = parse_list(line, key, value)?;
                n_list = Some(items.iter().map(|s| parse_count(line, key, s)).collect::<Result<Vec<_>>>()?);
            }
            "t0" => cfg.t0 = parse_num(line, key, value)?,
            "replicas" => cfg.replicas = parse_count(line, key, value)?,
            "base_seed" => cfg.base_seed = parse_num(line, key, value)?,
            "d_override" => cfg.d_override = Some(parse_count(line, key, value)?),
            "tol" => cfg.tol = parse_num(line, key, value)?,
            "phi" => {
                cfg.phi = match value {
                    "default" => Phi::default(),
                    v => match v.strip_prefix("loglog:") {
                        Some(p) => Phi { power: parse_num(line, key, p)? },
                        None => {
                            return Err(Error::ConfigParse {
                                line,
                                msg: format!("phi must be `default` or `loglog:p`, got {v:?}"),
                            })
                        }
                    },
                }
            }
            "out" => cfg.out = PathBuf::from(value),
            "R_list" => cfg.r_list = parse_list(line, key, value)?,
            "C_cfg" => cfg.c_cfg = parse_num(line, key, value)?,
            "grid_per_unit" => cfg.grid_per_unit = parse_num(line, key, value)?,
            "mc_reps" => cfg.mc_reps = parse_count(line, key, value)?,
            other => return Err(Error::ConfigParse { line, msg: format!("unknown key {other}") }),
        }
    }
    let missing = |field: &str| Error::ConfigInvalid { field: field.into(), msg: format!("{field} is required") };
    cfg.lambda = lambda.ok_or_else(|| missing("lambda"))?;
    cfg.n = n.ok_or_else(|| missing("n"))?;
    cfg.n_list = n_list.ok_or_else(|| missing("N_list"))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config("lambda = 0.5\nn = 2\nN_list = 100\n").unwrap();
        assert_eq!(cfg.replicas, 20);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.phi, Phi::default());
        assert_eq!(cfg.r_list, vec![2.0, 5.0, 10.0, 20.0]);
    }

    #[test]
    fn lambda_out_of_range() {
        let err = parse_config("lambda = 1.2\nn = 2\nN_list = 100\n").unwrap_err();
        assert!(err.to_string().contains("lambda must be in (0,1)"), "{err}");
    }

    #[test]
    fn descending_list_rejected() {
        let err = parse_config("lambda = 0.5\nn = 2\nN_list = 1000, 100\n").unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "N_list"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("lambda = 0.5\n# comment\nfoo = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }));
        let err = parse_config("lambda = 0.5\nn two\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }));
        let err = parse_config("lambda = x\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
    }

    #[test]
    fn round_trip() {
        let text = "lambda = 0.7\nn = 2\nN_list = 1e2, 1e3 1e4\nt0 = 5\nphi = loglog:1.5\nd_override = 3\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.n_list, vec![100, 1000, 10_000]);
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }
}
