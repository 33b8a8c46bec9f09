//! Run configuration: a line-oriented `key = value` file with `[section]`
//! headers, overridable field by field from the command line.
//!
//! ```text
//! [problem]
//! kind = quadratic        # quadratic | sigmoid | zero-chain | libsvm
//! n = 50
//! dim = 10
//! smoothness = 1
//! mu = 1
//! seed = 7
//!
//! [optimizer]
//! method = nfg-svrg
//! gamma = theory          # theory | grid | <number>
//!
//! [shuffle]
//! strategy = rr           # rr | so | cyclic
//! seed = 0
//!
//! [run]
//! epochs = 2000
//! target_gap = 1e-8
//! out = results/quad.csv
//! ```
//!
//! Comments start with `#`. Relative dataset paths resolve against the
//! config file's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::Method;
use crate::shuffling::{ShuffleKind, ShuffleStrategy};

/// Feature preprocessing for LIBSVM datasets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureScaling {
    #[default]
    None,
    /// Divide each feature by its largest absolute value.
    MaxAbs,
}

impl FromStr for FeatureScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FeatureScaling::None),
            "max-abs" | "maxabs" => Ok(FeatureScaling::MaxAbs),
            other => Err(Error::Config(format!("unknown scaling '{other}' (none|max-abs)"))),
        }
    }
}

impl fmt::Display for FeatureScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureScaling::None => "none",
            FeatureScaling::MaxAbs => "max-abs",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProblemSpec {
    /// Synthetic strongly convex quadratics with curvatures in [mu, L].
    Quadratic { n: usize, dim: usize, smoothness: f64, mu: f64, seed: u64 },
    /// Sigmoid least squares on Gaussian synthetic data.
    Sigmoid { n: usize, dim: usize, seed: u64 },
    /// The zero-chain hard instance split into n components.
    ZeroChain { n: usize, dim: usize },
    /// Sigmoid least squares on a LIBSVM file; `rows` keeps only the first rows.
    Libsvm { path: PathBuf, rows: Option<usize>, scaling: FeatureScaling },
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Sigmoid { .. } => "sigmoid",
            ProblemSpec::ZeroChain { .. } => "zero-chain",
            ProblemSpec::Libsvm { .. } => "libsvm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaSpec {
    /// The method's theoretical stepsize.
    Theory,
    /// 13-point doubling grid starting at the theoretical stepsize.
    Grid,
    Fixed(f64),
}

impl FromStr for GammaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(GammaSpec::Theory),
            "grid" => Ok(GammaSpec::Grid),
            other => {
                let g: f64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("gamma must be theory, grid or a number, got '{other}'")))?;
                if g > 0.0 && g.is_finite() {
                    Ok(GammaSpec::Fixed(g))
                } else {
                    Err(Error::Config(format!("gamma must be positive and finite, got {other}")))
                }
            }
        }
    }
}

impl fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSpec::Theory => f.write_str("theory"),
            GammaSpec::Grid => f.write_str("grid"),
            GammaSpec::Fixed(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    pub gamma: GammaSpec,
    pub shuffle: ShuffleStrategy,
    pub epochs: usize,
    /// Stop once the running mean of squared gradient norms is at most this.
    pub target_grad_sq: Option<f64>,
    /// Stop once f - f* is at most this.
    pub target_gap: Option<f64>,
    /// Every coordinate of the starting point.
    pub init: f64,
    pub out: Option<PathBuf>,
    /// Fill the `seconds` column with wall-clock time instead of zeros.
    pub wall_clock: bool,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, method: Method, gamma: GammaSpec, epochs: usize) -> Self {
        RunConfig {
            problem,
            method,
            gamma,
            shuffle: ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 0),
            epochs,
            target_grad_sq: None,
            target_gap: None,
            init: 0.0,
            out: None,
            wall_clock: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        for (name, target) in [("target_grad_sq", self.target_grad_sq), ("target_gap", self.target_gap)] {
            if let Some(t) = target {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {t}")));
                }
            }
        }
        if !self.init.is_finite() {
            return Err(Error::Config("init must be finite".into()));
        }
        match &self.problem {
            ProblemSpec::Quadratic { n, dim, smoothness, mu, .. } => {
                positive_count("problem.n", *n)?;
                positive_count("problem.dim", *dim)?;
                if !(*mu > 0.0 && mu <= smoothness && smoothness.is_finite()) {
                    return Err(Error::Config(format!("need 0 < mu <= smoothness, got mu = {mu}, smoothness = {smoothness}")));
                }
            }
            ProblemSpec::Sigmoid { n, dim, .. } | ProblemSpec::ZeroChain { n, dim } => {
                positive_count("problem.n", *n)?;
                positive_count("problem.dim", *dim)?;
            }
            ProblemSpec::Libsvm { rows, .. } => {
                if let Some(r) = rows {
                    positive_count("problem.rows", *r)?;
                }
            }
        }
        if self.target_gap.is_some() && matches!(self.problem, ProblemSpec::ZeroChain { .. }) {
            return Err(Error::Config("target_gap needs a known optimal value; zero-chain has none".into()));
        }
        Ok(())
    }

    /// Parses a config file; relative dataset paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_file_with_overrides(path, &[])
    }

    /// Like [`RunConfig::from_file`], with `section.key=value` entries that
    /// replace or add keys before interpretation.
    pub fn from_file_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse_with_overrides(&text, base, overrides)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        Self::parse_with_overrides(text, base_dir, &[])
    }

    pub fn parse_with_overrides(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table = Table::parse(text)?;
        table.apply_overrides(overrides)?;
        let kind = table.take("problem", "kind")?.unwrap_or_else(|| "quadratic".into());
        let problem = match kind.as_str() {
            "quadratic" => ProblemSpec::Quadratic {
                n: table.take_parsed("problem", "n")?.unwrap_or(50),
                dim: table.take_parsed("problem", "dim")?.unwrap_or(10),
                smoothness: table.take_parsed("problem", "smoothness")?.unwrap_or(1.0),
                mu: table.take_parsed("problem", "mu")?.unwrap_or(1.0),
                seed: table.take_parsed("problem", "seed")?.unwrap_or(0),
            },
            "sigmoid" => ProblemSpec::Sigmoid {
                n: table.take_parsed("problem", "n")?.unwrap_or(500),
                dim: table.take_parsed("problem", "dim")?.unwrap_or(20),
                seed: table.take_parsed("problem", "seed")?.unwrap_or(0),
            },
            "zero-chain" => ProblemSpec::ZeroChain {
                n: table.take_parsed("problem", "n")?.unwrap_or(10),
                dim: table.take_parsed("problem", "dim")?.unwrap_or(20),
            },
            "libsvm" => {
                let raw = table
                    .take("problem", "path")?
                    .ok_or_else(|| Error::Config("problem.path is required for kind = libsvm".into()))?;
                let path = PathBuf::from(raw);
                ProblemSpec::Libsvm {
                    path: if path.is_relative() { base_dir.join(path) } else { path },
                    rows: table.take_parsed("problem", "rows")?,
                    scaling: table.take_parsed("problem", "scale")?.unwrap_or_default(),
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown problem kind '{other}' (quadratic|sigmoid|zero-chain|libsvm)"
                )))
            }
        };
        let method = table.take_parsed("optimizer", "method")?.unwrap_or(Method::NfgSvrg);
        let gamma = table.take_parsed("optimizer", "gamma")?.unwrap_or(GammaSpec::Theory);
        let kind: ShuffleKind = table.take_parsed("shuffle", "strategy")?.unwrap_or_default();
        let seed = table.take_parsed("shuffle", "seed")?.unwrap_or(0);
        let mut config = RunConfig::new(problem, method, gamma, table.take_parsed("run", "epochs")?.unwrap_or(100));
        config.shuffle = ShuffleStrategy::new(kind, seed);
        config.target_grad_sq = table.take_parsed("run", "target_grad_sq")?;
        config.target_gap = table.take_parsed("run", "target_gap")?;
        config.init = table.take_parsed("run", "init")?.unwrap_or(0.0);
        config.out = table.take("run", "out")?.map(PathBuf::from);
        config.wall_clock = match table.take("run", "timing")?.as_deref() {
            None | Some("off") => false,
            Some("wall") => true,
            Some(other) => return Err(Error::Config(format!("timing must be off or wall, got '{other}'"))),
        };
        table.reject_leftovers()?;
        config.validate()?;
        Ok(config)
    }
}

fn positive_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::Config(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Raw (section, key) -> (value, origin) entries of a config file.
struct Table {
    entries: BTreeMap<(String, String), (String, String)>,
}

const SECTIONS: [&str; 4] = ["problem", "optimizer", "shuffle", "run"];

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {line_no}: unterminated section header")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {line_no}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value")))?;
            let sec = section
                .clone()
                .ok_or_else(|| Error::Config(format!("line {line_no}: key outside of any section")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            if entries.insert((sec.clone(), key.clone()), (value.trim().to_string(), format!("line {line_no}"))).is_some() {
                return Err(Error::Config(format!("line {line_no}: duplicate key {sec}.{key}")));
            }
        }
        Ok(Table { entries })
    }

    /// Applies `section.key=value` overrides on top of the file entries.
    fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let bad = || Error::Config(format!("--set {o}: expected section.key=value"));
            let (path, value) = o.split_once('=').ok_or_else(bad)?;
            let (sec, key) = path.trim().split_once('.').ok_or_else(bad)?;
            let (sec, key) = (sec.trim(), key.trim());
            if !SECTIONS.contains(&sec) {
                return Err(Error::Config(format!("--set {o}: unknown section [{sec}]")));
            }
            if key.is_empty() {
                return Err(bad());
            }
            self.entries.insert((sec.to_string(), key.to_string()), (value.trim().to_string(), format!("--set {sec}.{key}")));
        }
        Ok(())
    }

    fn take(&mut self, section: &str, key: &str) -> Result<Option<String>> {
        Ok(self.entries.remove(&(section.to_string(), key.to_string())).map(|(v, _)| v))
    }

    fn take_parsed<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((value, origin)) => value
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("{origin}: {section}.{key} = '{value}': {e}"))),
        }
    }

    fn reject_leftovers(&self) -> Result<()> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some(((sec, key), (_, origin))) => Err(Error::Config(format!("{origin}: unknown key {sec}.{key}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let text = "\
[problem]
kind = quadratic
n = 50   # components
dim = 10
smoothness = 10
mu = 1
seed = 3

[optimizer]
method = nfg-sarah
gamma = 0.002

[shuffle]
strategy = so
seed = 11

[run]
epochs = 40
target_gap = 1e-8
out = q.csv
";
        let c = RunConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(c.problem, ProblemSpec::Quadratic { n: 50, dim: 10, smoothness: 10.0, mu: 1.0, seed: 3 });
        assert_eq!(c.method, Method::NfgSarah);
        assert_eq!(c.gamma, GammaSpec::Fixed(0.002));
        assert_eq!(c.shuffle, ShuffleStrategy::new(ShuffleKind::ShuffleOnce, 11));
        assert_eq!(c.epochs, 40);
        assert_eq!(c.target_gap, Some(1e-8));
        assert_eq!(c.out, Some(PathBuf::from("q.csv")));
        assert!(!c.wall_clock);
    }

    #[test]
    fn dataset_path_is_resolved_against_config_dir() {
        let c = RunConfig::parse("[problem]\nkind = libsvm\npath = a9a.txt\nrows = 2000\n", Path::new("/cfg")).unwrap();
        assert_eq!(
            c.problem,
            ProblemSpec::Libsvm { path: PathBuf::from("/cfg/a9a.txt"), rows: Some(2000), scaling: FeatureScaling::None }
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("[run]\nepochs = ten\n", Path::new("")).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = RunConfig::parse("[run]\nepoch = 3\n", Path::new("")).unwrap_err().to_string();
        assert!(err.contains("unknown key run.epoch"), "{err}");
        assert!(RunConfig::parse("[nope]\n", Path::new("")).is_err());
        assert!(RunConfig::parse("epochs = 3\n", Path::new("")).is_err());
        assert!(RunConfig::parse("[run]\nepochs = 0\n", Path::new("")).is_err());
        assert!(RunConfig::parse("[problem]\nmu = 2\nsmoothness = 1\n", Path::new("")).is_err());
    }

    #[test]
    fn overrides_replace_and_add_keys() {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let c = RunConfig::parse_with_overrides(
            "[problem]\nn = 50\n[run]\nepochs = 10\n",
            Path::new(""),
            &set(&["problem.n=7", "run.target_gap = 1e-6", "problem.mu=0.5"]),
        )
        .unwrap();
        assert_eq!(c.problem, ProblemSpec::Quadratic { n: 7, dim: 10, smoothness: 1.0, mu: 0.5, seed: 0 });
        assert_eq!(c.target_gap, Some(1e-6));
        assert_eq!(c.epochs, 10);
        let err = RunConfig::parse_with_overrides("", Path::new(""), &set(&["run.epochs=x"])).unwrap_err().to_string();
        assert!(err.contains("--set run.epochs"), "{err}");
        assert!(RunConfig::parse_with_overrides("", Path::new(""), &set(&["epochs=3"])).is_err());
        assert!(RunConfig::parse_with_overrides("", Path::new(""), &set(&["nope.epochs=3"])).is_err());
        assert!(RunConfig::parse_with_overrides("", Path::new(""), &set(&["run.bogus=3"])).is_err());
    }

    #[test]
    fn gamma_spec_parsing() {
        assert_eq!("theory".parse::<GammaSpec>().unwrap(), GammaSpec::Theory);
        assert_eq!("grid".parse::<GammaSpec>().unwrap(), GammaSpec::Grid);
        assert_eq!("0.5".parse::<GammaSpec>().unwrap(), GammaSpec::Fixed(0.5));
        assert!("-1".parse::<GammaSpec>().is_err());
        assert!("fast".parse::<GammaSpec>().is_err());
    }
}
