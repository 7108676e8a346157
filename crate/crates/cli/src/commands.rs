//! The subcommands. Each returns the process exit code on success.

use std::path::{Path, PathBuf};

use foias_core::contraction::{estimate_contraction, garch_certificate, varma_certificate, ContractionReport};
use foias_core::invariant::{
    continuity_sweep, solve_invariant, InitMeasure, ModeChoice, Observable, ParamFamily, SolveConfig, SolveMode,
    SolveReport, SweepConfig,
};
use foias_core::measures::sample_path;
use foias_core::rng::derive_seed;
use foias_core::seqspace::{
    default_window_metric, filter_consistency_gap, foias_seq_apply, stationarity_gap, stationary_window_measure,
    WindowConfig,
};
use foias_core::systems::washout_trajectory;
use foias_core::transport::{w1, w1_exact, W1Options};
use foias_core::{DistributionSpec, Metric, ProcessSpec};
use serde::Serialize;

use crate::config::{BuiltSystem, CertifyMethod, Config, FamilyConfig, ModeConfig};
use crate::error::CliError;
use crate::table::{self, fmt_sig, KvBlock};

pub const CONTRACTION_REPORT: &str = "contraction_report.txt";
pub const SOLVE_REPORT: &str = "solve_report.txt";
pub const FIXED_POINT: &str = "fixed_point.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SEQ_REPORT: &str = "seq_report.json";
pub const WINDOW_MEASURE: &str = "window_measure.csv";
pub const TRAJECTORY: &str = "trajectory.csv";

/// Digits printed by `wasserstein`.
pub const PRINT_DIGITS: usize = 12;

/// A validated configuration with everything built that the commands share.
pub struct Experiment {
    pub config: Config,
    pub seed: u64,
    pub out: PathBuf,
    pub system: BuiltSystem,
    pub process: ProcessSpec,
    pub theta: DistributionSpec,
    pub metric: Metric,
}

impl Experiment {
    /// Builds and checks every referenced parameter before anything runs.
    pub fn new(config: Config, seed: Option<u64>, out: &Path) -> Result<Self, CliError> {
        let seed = seed.unwrap_or(config.seed);
        let system = config.system.build(seed)?;
        let process = config.input.process()?;
        let theta = process.marginal().map_err(|e| CliError::Usage(format!("[input] {e}")))?;
        let metric = config.contraction.metric()?;
        let g = system.system();
        if process.dim() != g.input_dim() {
            return Err(CliError::Usage(format!(
                "[input] has dimension {}, the system takes inputs of dimension {}",
                process.dim(),
                g.input_dim()
            )));
        }
        if let Some(x) = config.solver.init.as_ref().or(config.simulate.x0.as_ref()) {
            if x.len() != g.state_dim() {
                return Err(CliError::Usage(format!(
                    "initial state has dimension {}, the state has {}",
                    x.len(),
                    g.state_dim()
                )));
            }
        }
        let c = &config.contraction;
        if c.n_pairs == 0 || c.n_inputs == 0 || !(c.box_lo < c.box_hi) {
            return Err(CliError::Usage("[contraction] needs positive counts and box_lo < box_hi".into()));
        }
        let s = &config.solver;
        if s.n_particles == 0 || s.max_iter == 0 || !(s.tol > 0.0) {
            return Err(CliError::Usage("[solver] needs positive n_particles, max_iter and tol".into()));
        }
        if let Some(sw) = &config.sweep {
            let fam = family(sw.family, sw.width, sw.std);
            for &p in &sw.grid {
                fam.at(p).and_then(|_| fam.at(p + sw.eps)).map_err(|e| CliError::Usage(format!("[sweep] {e}")))?;
            }
            if sw.grid.is_empty() || !(sw.eps > 0.0) || sw.n_atoms == 0 {
                return Err(CliError::Usage("[sweep] needs a nonempty grid, eps > 0 and n_atoms > 0".into()));
            }
            if !sw.full_state && sw.coordinate >= g.state_dim() {
                return Err(CliError::Usage(format!("[sweep] coordinate {} outside the state", sw.coordinate)));
            }
        }
        let q = &config.seq;
        if q.horizon < 2 || q.n_windows == 0 || q.n_particles == 0 || q.stride == Some(0) {
            return Err(CliError::Usage("[seq] needs horizon >= 2 and positive counts".into()));
        }
        if config.simulate.length == 0 {
            return Err(CliError::Usage("[simulate] length must be positive".into()));
        }
        std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.into(), source })?;
        Ok(Self { config, seed, out: out.into(), system, process, theta, metric })
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        table::write_file(&self.out.join(name), contents)
    }

    /// Contraction report for the system driven by `theta`.
    pub fn contraction_for(&self, theta: &DistributionSpec) -> Result<ContractionReport, CliError> {
        let c = &self.config.contraction;
        let seed = derive_seed(self.seed, "cli/certify");
        Ok(match (&self.system, c.method) {
            (BuiltSystem::Garch(p, _), CertifyMethod::Auto) => garch_certificate(p)?,
            (BuiltSystem::Varma(p, _), CertifyMethod::Auto) => varma_certificate(p, theta, c.n_inputs, seed)?,
            _ => {
                let g = self.system.system();
                let pair_box = c.pair_box(g)?;
                estimate_contraction(g, theta, &pair_box, &self.metric, c.n_pairs, c.n_inputs, seed)?
            }
        })
    }

    fn write_contraction(&self, report: &ContractionReport, param: Option<f64>) -> Result<(), CliError> {
        let mut kv = KvBlock::default();
        kv.str("system", self.system.system().name());
        if let Some(p) = param {
            kv.num("worst_param", p);
        }
        kv.str("method", report.method.as_str())
            .num("c_hat", report.c_hat)
            .num("ci_halfwidth", report.ci_halfwidth)
            .str("n_pairs", report.n_pairs.to_string())
            .str("n_inputs", report.n_inputs.to_string())
            .str("contractive", report.is_contractive().to_string())
            .list("worst_pair_x", &report.worst_pair.0)
            .list("worst_pair_y", &report.worst_pair.1)
            .str("caveat", report.caveat());
        self.write(CONTRACTION_REPORT, &kv.render())
    }

    /// Certifies the `[input]` law and writes the report.
    pub fn contraction(&self) -> Result<ContractionReport, CliError> {
        let report = self.contraction_for(&self.theta)?;
        self.write_contraction(&report, None)?;
        Ok(report)
    }

    fn certified(&self) -> Result<ContractionReport, CliError> {
        let report = self.contraction()?;
        if !report.is_contractive() {
            return Err(foias_core::Error::NonContraction { c_hat: report.c_hat }.into());
        }
        Ok(report)
    }

    pub fn solve_config(&self, label: &str) -> SolveConfig {
        let s = &self.config.solver;
        SolveConfig {
            n_particles: s.n_particles,
            tol: s.tol,
            max_iter: s.max_iter,
            min_iter: 0,
            rng_seed: derive_seed(self.seed, label),
            mode: match s.mode {
                ModeConfig::Auto => ModeChoice::Auto,
                ModeConfig::Exact => ModeChoice::Force(SolveMode::Exact),
                ModeConfig::MonteCarlo => ModeChoice::Force(SolveMode::MonteCarlo),
            },
            exact_cap: s.exact_cap,
            init: s.init.clone().map_or(InitMeasure::Default, InitMeasure::Dirac),
            metric: self.metric.clone(),
            w1: W1Options::default(),
        }
    }
}

fn family(f: FamilyConfig, width: f64, std: f64) -> ParamFamily {
    match f {
        FamilyConfig::ExponentialRate => ParamFamily::ExponentialRate,
        FamilyConfig::UniformShift => ParamFamily::UniformShift { width },
        FamilyConfig::Dirac => ParamFamily::DiracAt,
        FamilyConfig::GaussianMean => ParamFamily::GaussianMean { std },
    }
}

pub fn certify(x: &Experiment) -> Result<u8, CliError> {
    Ok(if x.contraction()?.is_contractive() { 0 } else { 2 })
}

fn solve_report(x: &Experiment, r: &SolveReport) -> String {
    let mut kv = KvBlock::default();
    kv.str("system", x.system.system().name())
        .str("mode", r.mode.as_str())
        .str("converged", r.converged.to_string())
        .str("iterations", r.iterations.to_string())
        .num("c_used", r.c_used.unwrap_or(f64::NAN))
        .num("final_gap", r.gaps.last().copied().unwrap_or(f64::NAN))
        .num("posterior_bound", r.posterior_bound)
        .num("noise_floor", r.noise_floor)
        .str("n_atoms", r.fixed_point.len().to_string())
        .list("gaps", &r.gaps);
    kv.render()
}

pub fn invariant(x: &Experiment) -> Result<u8, CliError> {
    let report = x.certified()?;
    let g = x.system.system();
    let r = solve_invariant(g, &x.theta, &report, &x.solve_config("cli/invariant"))?;
    x.write(SOLVE_REPORT, &solve_report(x, &r))?;
    x.write(FIXED_POINT, &table::measure_to_string(&r.fixed_point, &table::plain_header(g.state_dim())))?;
    Ok(if r.converged { 0 } else { 3 })
}

pub fn sweep(x: &Experiment) -> Result<u8, CliError> {
    let Some(sw) = &x.config.sweep else {
        return Err(CliError::Usage("the sweep command needs a [sweep] section".into()));
    };
    // one certificate has to cover every law the sweep visits; the first
    // law that fails settles it
    let fam = family(sw.family, sw.width, sw.std);
    let mut worst: Option<(f64, ContractionReport)> = None;
    'laws: for &p in sw.grid.iter() {
        for q in [p, p + sw.eps] {
            let r = x.contraction_for(&fam.at(q)?)?;
            let failed = !r.is_contractive();
            if worst.as_ref().is_none_or(|(_, w)| failed || r.c_hat > w.c_hat) {
                worst = Some((q, r));
            }
            if failed {
                break 'laws;
            }
        }
    }
    let (param, report) = worst.expect("grid is nonempty");
    x.write_contraction(&report, Some(param))?;
    let certified = report.is_contractive();
    let cfg = SweepConfig {
        eps: sw.eps,
        n_atoms: sw.n_atoms,
        observable: if sw.full_state { Observable::FullState } else { Observable::Coordinate(sw.coordinate) },
        solve: x.solve_config("cli/sweep"),
    };
    let rows = continuity_sweep(x.system.system(), fam, &sw.grid, certified.then_some(&report), &cfg)?;
    x.write(SWEEP_CSV, &table::sweep_to_string(&rows))?;
    let ok = rows.iter().filter(|r| r.converged).count() as f64;
    Ok(match (ok >= sw.min_success * rows.len() as f64, certified) {
        (true, _) => 0,
        (false, false) => 2,
        (false, true) => 3,
    })
}

#[derive(Debug, Serialize)]
pub struct SeqReport {
    pub stationarity_gap: f64,
    pub fixed_point_residual: f64,
    pub filter_consistency_gap: f64,
}

pub fn seq(x: &Experiment) -> Result<u8, CliError> {
    let q = &x.config.seq;
    let report = x.certified()?;
    let g = x.system.system();
    let wc = WindowConfig {
        horizon: q.horizon,
        n_windows: q.n_windows,
        stride: q.stride,
        washout: q.washout,
        rng_seed: derive_seed(x.seed, "cli/seq"),
    };
    let m = stationary_window_measure(g, &x.process, &report, &wc)?;
    x.write(WINDOW_MEASURE, &table::measure_to_string(m.measure(), &table::window_header(q.horizon, g.state_dim())))?;
    let metric = default_window_metric(q.horizon)?;
    let Metric::WeightedSupWindow(wm) = &metric else {
        unreachable!("default window metric is a window metric")
    };
    let exact = W1Options { exact_cap: usize::MAX, ..W1Options::default() };
    let stationarity = stationarity_gap(&m, &metric, &exact)?;
    let pushed = foias_seq_apply(g, &x.process, &m, q.n_particles, derive_seed(x.seed, "cli/seq_apply"))?;
    let residual = w1(pushed.measure(), m.measure(), &metric, &exact)?.value;
    let fixed = solve_invariant(g, &x.theta, &report, &x.solve_config("cli/seq_filter"))?;
    if !fixed.converged {
        return Err(CliError::Numeric(format!("invariant solve did not converge in {} iterations", fixed.iterations)));
    }
    let filter = filter_consistency_gap(&m, &fixed.fixed_point, wm.base(), &exact)?;
    let out = SeqReport { stationarity_gap: stationarity, fixed_point_residual: residual, filter_consistency_gap: filter };
    let json = serde_json::to_string_pretty(&out).map_err(|e| CliError::Numeric(e.to_string()))?;
    x.write(SEQ_REPORT, &(json + "\n"))?;
    let pass = stationarity <= q.stationarity_tol && residual <= q.residual_tol && filter <= q.filter_tol;
    Ok(if pass { 0 } else { 3 })
}

pub fn simulate(x: &Experiment) -> Result<u8, CliError> {
    let s = &x.config.simulate;
    let g = x.system.system();
    let path = sample_path(&x.process, s.washout + s.length, derive_seed(x.seed, "cli/simulate"))?;
    let x0 = s.x0.clone().unwrap_or_else(|| vec![0.0; g.state_dim()]);
    let states = washout_trajectory(g, &path, &x0, s.washout)?;
    let mut out = String::from("t");
    for i in 0..g.input_dim() {
        out.push_str(&format!(",u{i}"));
    }
    for i in 0..g.state_dim() {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (k, state) in states.iter().enumerate() {
        let t = s.washout + k;
        out.push_str(&t.to_string());
        for v in path[t].iter().chain(state) {
            out.push(',');
            out.push_str(&fmt_sig(*v, table::FILE_DIGITS));
        }
        out.push('\n');
    }
    x.write(TRAJECTORY, &out)?;
    Ok(0)
}

/// Parses `euclidean`, `capped:C` or `window:T` (default window metric of horizon `T`).
pub fn parse_metric(spec: &str) -> Result<Metric, CliError> {
    let bad = |m: String| CliError::Usage(format!("--metric {spec}: {m}"));
    match spec.split_once(':') {
        None if spec == "euclidean" => Ok(Metric::Euclidean),
        Some(("capped", c)) => {
            let c: f64 = c.parse().map_err(|_| bad("cap is not a number".into()))?;
            Metric::capped(c).map_err(|e| bad(e.to_string()))
        }
        Some(("window", t)) => {
            let t: usize = t.parse().map_err(|_| bad("horizon is not an integer".into()))?;
            default_window_metric(t).map_err(|e| bad(e.to_string()))
        }
        _ => Err(bad("expected euclidean, capped:C or window:T".into())),
    }
}

/// Exact W₁ between two measure files, formatted for printing.
pub fn wasserstein(mu: &Path, nu: &Path, metric: &str, plan: Option<&Path>) -> Result<String, CliError> {
    let metric = parse_metric(metric)?;
    let a = table::read_measure(mu)?;
    let b = table::read_measure(nu)?;
    if a.dim() != b.dim() {
        return Err(CliError::Usage(format!("measures have dimensions {} and {}", a.dim(), b.dim())));
    }
    metric.validate_dim(a.dim()).map_err(|e| CliError::Usage(format!("--metric: {e}")))?;
    let value = match plan {
        Some(path) => {
            let (v, p) = w1_exact(&a, &b, &metric)?;
            table::write_file(path, &table::plan_to_string(&p))?;
            v
        }
        None if a.dim() == 1 && metric == Metric::Euclidean => w1(&a, &b, &metric, &W1Options::default())?.value,
        None => w1_exact(&a, &b, &metric)?.0,
    };
    Ok(fmt_sig(value, PRINT_DIGITS))
}
