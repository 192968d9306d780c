use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use utree_core::group::Vertex;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value for {field}: {msg}")]
    Invalid { field: &'static str, msg: String },
    #[error("cannot read config file {path}: {msg}")]
    File { path: PathBuf, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexSel {
    K0,
    K1,
    Both,
}

impl VertexSel {
    pub fn vertices(self) -> Vec<Vertex> {
        match self {
            VertexSel::K0 => vec![Vertex::K0],
            VertexSel::K1 => vec![Vertex::K1],
            VertexSel::Both => Vertex::ALL.to_vec(),
        }
    }
}

impl FromStr for VertexSel {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "k0" => Ok(VertexSel::K0),
            "k1" => Ok(VertexSel::K1),
            "both" => Ok(VertexSel::Both),
            _ => Err(invalid("vertex", format!("expected K0, K1 or both, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaFilter {
    All,
    MaxDim(usize),
    Ids(Vec<u32>),
}

impl SigmaFilter {
    pub fn accepts(&self, weight_id: u32, dim: usize) -> bool {
        match self {
            SigmaFilter::All => true,
            SigmaFilter::MaxDim(d) => dim <= *d,
            SigmaFilter::Ids(ids) => ids.contains(&weight_id),
        }
    }
}

impl FromStr for SigmaFilter {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(SigmaFilter::All);
        }
        if let Some(d) = s.strip_prefix("max_dim=").or_else(|| s.strip_prefix("max-dim=")) {
            return d.parse().map(SigmaFilter::MaxDim).map_err(|e| invalid("sigma", format!("{e}")));
        }
        s.split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map(SigmaFilter::Ids)
            .map_err(|_| invalid("sigma", format!("expected all, max_dim=N or a list of ids, got {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Group,
    Tree,
    Algebra,
    Hecke,
    Freeness,
    Oracle,
}

impl Suite {
    pub const DEFAULT: [Suite; 5] = [Suite::Group, Suite::Tree, Suite::Algebra, Suite::Hecke, Suite::Freeness];
}

impl FromStr for Suite {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "group" => Suite::Group,
            "tree" => Suite::Tree,
            "algebra" => Suite::Algebra,
            "hecke" => Suite::Hecke,
            "freeness" => Suite::Freeness,
            "oracle" => Suite::Oracle,
            other => return Err(invalid("suite", format!("unknown suite {other:?}"))),
        })
    }
}

/// Flags shared by every subcommand. Unset flags fall back to `UHECK_*`
/// variables, then to the config file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, env = "UHECK_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "UHECK_P")]
    pub p: Option<u32>,
    #[arg(long, env = "UHECK_F")]
    pub f: Option<u32>,
    #[arg(long, env = "UHECK_VERTEX")]
    pub vertex: Option<String>,
    #[arg(long, env = "UHECK_RADIUS")]
    pub radius: Option<u32>,
    /// A number or `auto`.
    #[arg(long, env = "UHECK_PRECISION")]
    pub precision: Option<String>,
    /// A number or `auto`.
    #[arg(long = "coeff-ext", env = "UHECK_COEFF_EXT")]
    pub coeff_ext: Option<String>,
    /// `all`, `max_dim=N` or a comma separated list of weight ids.
    #[arg(long, env = "UHECK_SIGMA")]
    pub sigma: Option<String>,
    #[arg(long, env = "UHECK_SEED")]
    pub seed: Option<u64>,
    #[arg(long = "dense-budget", env = "UHECK_DENSE_BUDGET")]
    pub dense_budget: Option<usize>,
    #[arg(long = "sparse-budget", env = "UHECK_SPARSE_BUDGET")]
    pub sparse_budget: Option<usize>,
    /// Comma separated suite names.
    #[arg(long, env = "UHECK_SUITES")]
    pub suites: Option<String>,
    #[arg(long = "catalog-dir", env = "UHECK_CATALOG_DIR")]
    pub catalog_dir: Option<PathBuf>,
    #[arg(long, env = "UHECK_REPORT")]
    pub report: Option<PathBuf>,
    #[arg(long = "emit-tree", env = "UHECK_EMIT_TREE")]
    pub emit_tree: Option<PathBuf>,
    #[arg(long = "emit-basis", env = "UHECK_EMIT_BASIS")]
    pub emit_basis: Option<PathBuf>,
    /// Also run the independent recomputations.
    #[arg(long, env = "UHECK_ORACLE")]
    pub oracle: bool,
}

#[derive(Debug, Parser)]
#[command(name = "utree-hecke", version, about = "Spherical Hecke modules of unramified U(2,1) in characteristic p")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the catalog of irreducible representations and write it to the catalog directory.
    Catalog(CommonArgs),
    /// Run the verification suites.
    Verify(CommonArgs),
    /// Run only the independent recomputations.
    Oracle(CommonArgs),
}

/// Contents of a TOML config file; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<u32>,
    pub f: Option<u32>,
    pub vertex: Option<String>,
    pub radius: Option<u32>,
    pub precision: Option<toml::Value>,
    pub coeff_ext: Option<toml::Value>,
    pub sigma: Option<String>,
    pub seed: Option<u64>,
    pub dense_budget: Option<usize>,
    pub sparse_budget: Option<usize>,
    pub suites: Option<Vec<String>>,
    pub catalog_dir: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub emit_tree: Option<PathBuf>,
    pub emit_basis: Option<PathBuf>,
    pub oracle: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File { path: path.into(), msg: e.to_string() })?;
        toml::from_str(&text).map_err(|e| ConfigError::File { path: path.into(), msg: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub p: u32,
    pub f: u32,
    pub vertex: VertexSel,
    /// `None` selects the least admissible degree.
    pub coeff_ext: Option<u32>,
    pub radius: u32,
    pub precision: u32,
    pub sigma: SigmaFilter,
    pub seed: u64,
    pub dense_budget: usize,
    pub sparse_budget: usize,
    pub suites: Vec<Suite>,
    pub catalog_dir: PathBuf,
    pub report: Option<PathBuf>,
    pub emit_tree: Option<PathBuf>,
    pub emit_basis: Option<PathBuf>,
    pub oracle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 3,
            f: 1,
            vertex: VertexSel::Both,
            coeff_ext: None,
            radius: 2,
            precision: 16,
            sigma: SigmaFilter::All,
            seed: 0,
            dense_budget: 10_000,
            sparse_budget: 200_000,
            suites: Suite::DEFAULT.to_vec(),
            catalog_dir: PathBuf::from("."),
            report: None,
            emit_tree: None,
            emit_basis: None,
            oracle: false,
        }
    }
}

/// `auto` or a number.
fn auto_or_number(field: &'static str, s: &str) -> Result<Option<u32>, ConfigError> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.trim().parse().map(Some).map_err(|_| invalid(field, format!("expected auto or a number, got {s:?}")))
}

fn toml_auto(field: &'static str, v: &toml::Value) -> Result<Option<u32>, ConfigError> {
    match v {
        toml::Value::Integer(i) => u32::try_from(*i).map(Some).map_err(|_| invalid(field, format!("{i} out of range"))),
        toml::Value::String(s) => auto_or_number(field, s),
        other => Err(invalid(field, format!("expected auto or a number, got {other}"))),
    }
}

impl RunConfig {
    /// Merges flags and environment (already combined by clap) over the config
    /// file over defaults, then validates.
    pub fn resolve(args: &CommonArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        let p = args.p.or(file.p).unwrap_or(d.p);
        let f = args.f.or(file.f).unwrap_or(d.f);
        let vertex = match args.vertex.as_ref().or(file.vertex.as_ref()) {
            Some(s) => s.parse()?,
            None => d.vertex,
        };
        let radius = args.radius.or(file.radius).unwrap_or(d.radius);
        let precision = match (&args.precision, &file.precision) {
            (Some(s), _) => auto_or_number("precision", s)?,
            (None, Some(v)) => toml_auto("precision", v)?,
            (None, None) => None,
        };
        let coeff_ext = match (&args.coeff_ext, &file.coeff_ext) {
            (Some(s), _) => auto_or_number("coeff-ext", s)?,
            (None, Some(v)) => toml_auto("coeff-ext", v)?,
            (None, None) => None,
        };
        let sigma = match args.sigma.as_ref().or(file.sigma.as_ref()) {
            Some(s) => s.parse()?,
            None => d.sigma,
        };
        let suites = match (&args.suites, &file.suites) {
            (Some(s), _) => s.split(',').map(str::parse).collect::<Result<Vec<_>, _>>()?,
            (None, Some(v)) => v.iter().map(|s| s.parse()).collect::<Result<Vec<_>, _>>()?,
            (None, None) => d.suites,
        };
        let cfg = RunConfig {
            p,
            f,
            vertex,
            coeff_ext,
            radius,
            precision: precision.unwrap_or(4 * radius + 8),
            sigma,
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            dense_budget: args.dense_budget.or(file.dense_budget).unwrap_or(d.dense_budget),
            sparse_budget: args.sparse_budget.or(file.sparse_budget).unwrap_or(d.sparse_budget),
            suites,
            catalog_dir: args.catalog_dir.clone().or(file.catalog_dir).unwrap_or(d.catalog_dir),
            report: args.report.clone().or(file.report),
            emit_tree: args.emit_tree.clone().or(file.emit_tree),
            emit_basis: args.emit_basis.clone().or(file.emit_basis),
            oracle: args.oracle || file.oracle.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p < 3 || !(2..self.p).take_while(|d| d * d <= self.p).all(|d| self.p % d != 0) {
            return Err(invalid("p", format!("{} is not an odd prime", self.p)));
        }
        if self.f == 0 {
            return Err(invalid("f", "must be positive"));
        }
        if self.radius == 0 {
            return Err(invalid("radius", "must be at least 1"));
        }
        if self.precision < 4 * self.radius + 8 {
            return Err(invalid("precision", format!("{} is below 4·radius + 8 = {}", self.precision, 4 * self.radius + 8)));
        }
        if let Some(k) = self.coeff_ext {
            if k == 0 || k % (2 * self.f) != 0 {
                return Err(invalid("coeff-ext", format!("{k} is not a multiple of 2f = {}", 2 * self.f)));
            }
        }
        if self.suites.is_empty() {
            return Err(invalid("suites", "no suite selected"));
        }
        Ok(())
    }

    /// Degree of the residue field `k_E` over `F_p`.
    pub fn residue_degree(&self) -> u32 {
        2 * self.f
    }

    pub fn q(&self) -> u64 {
        u64::from(self.p).pow(self.f)
    }
}
