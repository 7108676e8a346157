//! Experiment configuration: one TOML file, unknown keys rejected.

use std::path::Path;

use foias_core::linalg::Matrix;
use foias_core::measures::MarkovChain;
use foias_core::systems::{
    make_esn, make_garch_vol, make_linear_scalar, make_product_system, make_varma, DrivenSystem, GarchParams,
    StateBox, VarmaParams,
};
use foias_core::{DistributionSpec, EmpiricalMeasure, Metric, ProcessSpec};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub system: SystemConfig,
    pub input: InputConfig,
    #[serde(default)]
    pub contraction: ContractionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub seq: SeqConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Linear {
        a: f64,
    },
    Product {},
    Esn {
        n: usize,
        radius: f64,
        #[serde(default = "one")]
        input_scale: f64,
        #[serde(default = "one_usize")]
        input_dim: usize,
        /// Seed of the random reservoir; derived from `seed` when absent.
        reservoir_seed: Option<u64>,
    },
    Varma {
        a0: Vec<Vec<f64>>,
        #[serde(default)]
        a_terms: Vec<Vec<Vec<f64>>>,
        f0: Option<Vec<f64>>,
        f_lin: Vec<Vec<f64>>,
    },
    Garch {
        omega: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    Dirac {
        point: Vec<f64>,
    },
    Atoms {
        points: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
    },
    Uniform {
        lo: f64,
        hi: f64,
        #[serde(default = "one_usize")]
        dim: usize,
    },
    Exponential {
        rate: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
        #[serde(default = "one_usize")]
        dim: usize,
    },
    StandardizedGaussian {
        #[serde(default = "one_usize")]
        dim: usize,
    },
    Markov {
        states: Vec<Vec<f64>>,
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMethod {
    /// Analytic certificate when the system has one, sampled pairs otherwise.
    Auto,
    Sampled,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractionConfig {
    pub method: CertifyMethod,
    pub n_pairs: usize,
    pub n_inputs: usize,
    /// Pair box for systems without state bounds.
    pub box_lo: f64,
    pub box_hi: f64,
    /// Cap of the state metric; plain Euclidean when absent.
    pub metric_cap: Option<f64>,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self { method: CertifyMethod::Auto, n_pairs: 2000, n_inputs: 256, box_lo: -1.0, box_hi: 1.0, metric_cap: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n_particles: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: ModeConfig,
    pub exact_cap: usize,
    /// Start from a Dirac at this point instead of the default cloud.
    pub init: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { n_particles: 4096, tol: 1e-6, max_iter: 200, mode: ModeConfig::Auto, exact_cap: 1_000_000, init: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    ExponentialRate,
    UniformShift,
    Dirac,
    GaussianMean,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: FamilyConfig,
    pub grid: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_atoms")]
    pub n_atoms: usize,
    /// Width of the uniform-shift family.
    #[serde(default = "one")]
    pub width: f64,
    /// Standard deviation of the gaussian-mean family.
    #[serde(default = "one")]
    pub std: f64,
    /// State coordinate whose marginal is compared between fixed points.
    #[serde(default)]
    pub coordinate: usize,
    /// Compare full states under the solver metric instead of one coordinate.
    #[serde(default)]
    pub full_state: bool,
    /// Fraction of rows that must converge for exit code 0.
    #[serde(default = "default_success")]
    pub min_success: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeqConfig {
    pub horizon: usize,
    pub n_windows: usize,
    pub stride: Option<usize>,
    pub washout: Option<usize>,
    pub n_particles: usize,
    pub stationarity_tol: f64,
    pub residual_tol: f64,
    pub filter_tol: f64,
}

impl Default for SeqConfig {
    fn default() -> Self {
        Self {
            horizon: 8,
            n_windows: 5000,
            stride: None,
            washout: None,
            n_particles: 5000,
            stationarity_tol: 0.05,
            residual_tol: 0.05,
            filter_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub length: usize,
    pub washout: usize,
    pub x0: Option<Vec<f64>>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { length: 1000, washout: 0, x0: None }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_eps() -> f64 {
    0.01
}
fn default_atoms() -> usize {
    3500
}
fn default_success() -> f64 {
    0.9
}

/// 1-based line and column of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Tagged tables report unknown keys at the table header; find the key
/// itself within that table.
fn unknown_key_offset(src: &str, span: std::ops::Range<usize>, message: &str) -> Option<usize> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?;
    let mut offset = span.start;
    for (k, line) in src.get(span.start..)?.split_inclusive('\n').enumerate() {
        let body = line.trim_start();
        if k > 0 && body.starts_with('[') {
            break;
        }
        if let Some(rest) = body.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(offset + line.len() - body.len());
            }
        }
        offset += line.len();
    }
    None
}

impl Config {
    pub fn parse(src: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| {
            let at = e.span().map_or(0, |s| unknown_key_offset(src, s.clone(), e.message()).unwrap_or(s.start));
            let (line, column) = line_col(src, at);
            CliError::Parse { path: origin.into(), line, column, message: e.message().trim().into() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&src, &path.display().to_string())
    }
}

/// A concrete system built from its configuration.
pub enum BuiltSystem {
    Plain(Box<dyn DrivenSystem>),
    Varma(VarmaParams, Box<dyn DrivenSystem>),
    Garch(GarchParams, Box<dyn DrivenSystem>),
}

impl BuiltSystem {
    pub fn system(&self) -> &dyn DrivenSystem {
        match self {
            BuiltSystem::Plain(g) | BuiltSystem::Varma(_, g) | BuiltSystem::Garch(_, g) => g.as_ref(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(CliError::Usage(format!("{what}: rows have different lengths")));
    }
    Matrix::new(r, c, rows.concat()).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn invalid(section: &str) -> impl Fn(foias_core::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("[{section}] {e}"))
}

impl SystemConfig {
    pub fn build(&self, seed: u64) -> Result<BuiltSystem, CliError> {
        let bad = invalid("system");
        Ok(match self {
            SystemConfig::Linear { a } => BuiltSystem::Plain(Box::new(make_linear_scalar(*a).map_err(bad)?)),
            SystemConfig::Product {} => BuiltSystem::Plain(Box::new(make_product_system())),
            SystemConfig::Esn { n, radius, input_scale, input_dim, reservoir_seed } => {
                let s = reservoir_seed.unwrap_or_else(|| foias_core::rng::derive_seed(seed, "cli/reservoir"));
                BuiltSystem::Plain(Box::new(make_esn(*n, *input_dim, s, *radius, *input_scale).map_err(bad)?))
            }
            SystemConfig::Varma { a0, a_terms, f0, f_lin } => {
                let a0 = matrix(a0, "[system] a0")?;
                let terms = a_terms.iter().map(|t| matrix(t, "[system] a_terms")).collect::<Result<Vec<_>, _>>()?;
                let f0 = f0.clone().unwrap_or_else(|| vec![0.0; a0.rows()]);
                let params = VarmaParams::new(a0, terms, f0, matrix(f_lin, "[system] f_lin")?).map_err(bad)?;
                BuiltSystem::Varma(params.clone(), Box::new(make_varma(params)))
            }
            SystemConfig::Garch { omega, alpha, beta } => {
                let p = GarchParams::new(*omega, *alpha, *beta).map_err(bad)?;
                BuiltSystem::Garch(p, Box::new(make_garch_vol(p)))
            }
        })
    }
}

impl InputConfig {
    pub fn process(&self) -> Result<ProcessSpec, CliError> {
        let bad = invalid("input");
        let spec = match self {
            InputConfig::Dirac { point } => DistributionSpec::dirac(point).map_err(bad)?,
            InputConfig::Atoms { points, weights } => {
                let dim = points.first().map_or(0, |p| p.len());
                if points.iter().any(|p| p.len() != dim) {
                    return Err(CliError::Usage("[input] atoms must share one dimension".into()));
                }
                let w = weights.clone().unwrap_or_else(|| vec![1.0; points.len()]);
                DistributionSpec::atoms(EmpiricalMeasure::from_unnormalized(dim, points.concat(), w).map_err(bad)?)
            }
            InputConfig::Uniform { lo, hi, dim } => DistributionSpec::uniform(*lo, *hi, *dim).map_err(bad)?,
            InputConfig::Exponential { rate } => DistributionSpec::exponential(*rate).map_err(bad)?,
            InputConfig::Gaussian { mean, std, dim } => DistributionSpec::gaussian(*mean, *std, *dim).map_err(bad)?,
            InputConfig::StandardizedGaussian { dim } => DistributionSpec::standardized_gaussian(*dim).map_err(bad)?,
            InputConfig::Markov { states, transition, stationary } => {
                let chain = MarkovChain::new(states.clone(), transition.concat(), stationary.clone()).map_err(bad)?;
                return Ok(ProcessSpec::FiniteMarkov(chain));
            }
        };
        Ok(ProcessSpec::Iid(spec))
    }
}

impl ContractionConfig {
    pub fn metric(&self) -> Result<Metric, CliError> {
        match self.metric_cap {
            None => Ok(Metric::Euclidean),
            Some(c) => Metric::capped(c).map_err(invalid("contraction")),
        }
    }

    pub fn pair_box(&self, g: &dyn DrivenSystem) -> Result<StateBox, CliError> {
        match g.state_bounds() {
            Some(b) => Ok(b.clone()),
            None => StateBox::cube(g.state_dim(), self.box_lo, self.box_hi).map_err(invalid("contraction")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = "seed = 3\n[system]\nkind = \"linear\"\na = 0.5\n[input]\nkind = \"dirac\"\npoint = [1.0]\n";

    fn parse_error(src: &str) -> (usize, usize, String) {
        match Config::parse(src, "c.toml") {
            Err(CliError::Parse { line, column, message, .. }) => (line, column, message),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = Config::parse(LINEAR, "c.toml").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.solver.n_particles, 4096);
        assert_eq!(c.seq.horizon, 8);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let (line, column, msg) = parse_error(&LINEAR.replace("a = 0.5", "a = 0.5\n  colour = 2"));
        assert_eq!((line, column), (5, 3));
        assert!(msg.contains("colour"), "{msg}");
        let (line, _, _) = parse_error(&format!("{LINEAR}[solver]\ntoll = 1e-6\n"));
        assert_eq!(line, 9);
        let (line, _, _) = parse_error(&format!("{LINEAR}extra = 1\n"));
        assert_eq!(line, 8);
    }

    #[test]
    fn seed_is_required() {
        parse_error(&LINEAR.replace("seed = 3\n", ""));
    }

    #[test]
    fn syntax_errors_report_line() {
        let (line, _, _) = parse_error("seed = 1\n[system\nkind = 1\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn invalid_parameters_fail_validation() {
        let c = Config::parse(&LINEAR.replace("a = 0.5", "a = 1.5"), "c.toml").unwrap();
        assert!(matches!(c.system.build(0), Err(CliError::Usage(_))));
        let c = Config::parse(&LINEAR.replace("point = [1.0]", "point = []"), "c.toml").unwrap();
        assert!(matches!(c.input.process(), Err(CliError::Usage(_))));
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
