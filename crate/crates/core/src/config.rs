//! Run configuration in a flat `key = value` format; `#` starts a comment.
//!
//! Recognized keys: `r_b`, `r_a`, `truncation_degree`, `output_format` (json|csv),
//! `threads`, `delta_max` and `tol.<name>` for named tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{check_radii, DEFAULT_DEGREE, DEFAULT_RADII};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Parse(format!("unknown output format {s:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub radii: (f64, f64),
    pub truncation_degree: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub output_format: OutputFormat,
    /// 0 lets the pool pick the number of cores.
    pub threads: usize,
    pub delta_max: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            radii: DEFAULT_RADII,
            truncation_degree: DEFAULT_DEGREE,
            tolerances: BTreeMap::new(),
            output_format: OutputFormat::Json,
            threads: 0,
            delta_max: 0.5,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "r_b" => c.radii.0 = num(k, v)?,
                "r_a" => c.radii.1 = num(k, v)?,
                "truncation_degree" => c.truncation_degree = num(k, v)?,
                "output_format" => c.output_format = v.parse()?,
                "threads" => c.threads = num(k, v)?,
                "delta_max" => c.delta_max = num(k, v)?,
                _ => match k.strip_prefix("tol.") {
                    Some(name) if !name.is_empty() => {
                        let t: f64 = num(k, v)?;
                        if t.is_nan() || t <= 0.0 {
                            return Err(Error::Parse(format!("tolerance {k} must be positive")));
                        }
                        c.tolerances.insert(name.to_string(), t);
                    }
                    _ => return Err(Error::Parse(format!("line {}: unknown key {k:?}", i + 1))),
                },
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        check_radii(self.radii.0, self.radii.1)?;
        if self.truncation_degree < 4 {
            return Err(Error::Domain("truncation degree must be at least 4".into()));
        }
        if self.delta_max.is_nan() || self.delta_max <= 0.0 {
            return Err(Error::Domain("delta_max must be positive".into()));
        }
        Ok(())
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let c = Config::parse(
            "# run\nr_b = 0.42\nr_a=0.62\ntruncation_degree = 48\noutput_format = csv\nthreads = 3\ntol.curve = 1e-7 # bracket\n",
        )
        .unwrap();
        assert_eq!(c.radii, (0.42, 0.62));
        assert_eq!(c.truncation_degree, 48);
        assert_eq!(c.output_format, OutputFormat::Csv);
        assert_eq!(c.threads, 3);
        assert_eq!(c.tol("curve", 1.0), 1e-7);
        assert_eq!(c.tol("missing", 2.0), 2.0);
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn rejects_bad_radii_and_keys() {
        assert!(Config::parse("r_b = 0.1").is_err());
        assert!(Config::parse("r_a = 5").is_err());
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("threads").is_err());
        assert!(Config::parse("tol.x = -1").is_err());
    }
}
