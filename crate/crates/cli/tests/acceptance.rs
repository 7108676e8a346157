//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Criterion 11 reruns 1-10 and compares
//! every artifact byte for byte.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use foias_core::contraction::{estimate_contraction, garch_certificate, varma_certificate, ContractionReport};
use foias_core::foias::{compress, foias_exact};
use foias_core::invariant::{solve_invariant, SolveConfig};
use foias_core::linalg::Matrix;
use foias_core::rng;
use foias_core::systems::{make_linear_scalar, make_product_system, make_varma, GarchParams, StateBox, VarmaParams};
use foias_core::transport::{dual_lower_bound, w1_exact, w1_exact_1d, PiecewiseLinear};
use foias_core::{DistributionSpec, DrivenSystem, EmpiricalMeasure, Metric};
use rand::Rng as _;

const SEED: u64 = 20240917;

struct Measured {
    pass: bool,
    detail: String,
    artifacts: Vec<(String, Vec<u8>)>,
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Measured,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "exact OT agrees with 1-D and enumeration oracles", limit: Some(secs(10)), run: c01_ot },
    Criterion { id: 2, name: "dual lower bound never exceeds W1", limit: Some(secs(5)), run: c02_duality },
    Criterion { id: 3, name: "Foias operator contracts by 0.5", limit: Some(secs(30)), run: c03_contraction },
    Criterion { id: 4, name: "linear a=0.5, delta_1 converges to delta_2", limit: Some(secs(1)), run: c04_fixed_point },
    Criterion { id: 5, name: "fair-coin inputs give Uniform[0,2]", limit: Some(secs(60)), run: c05_uniform },
    Criterion { id: 6, name: "VARMA gaps decay at the certified rate", limit: Some(secs(60)), run: c06_banach },
    Criterion { id: 7, name: "GARCH and product certificates", limit: Some(secs(1)), run: c07_certificates },
    Criterion { id: 8, name: "sweep input gap at lambda=1", limit: Some(secs(10)), run: c08_input_curve },
    Criterion { id: 9, name: "continuity sweep and ESN contrast", limit: None, run: c09_continuity },
    Criterion { id: 10, name: "sequence-space gaps for a contractive ESN", limit: Some(secs(300)), run: c10_sequence },
];

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn g17(x: f64) -> String {
    foias_cli::table::fmt_sig(x, 17)
}

fn values(name: &str, xs: &[f64]) -> (String, Vec<u8>) {
    (name.into(), xs.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(",").into_bytes())
}

fn random_measure(r: &mut rng::Rng, n: usize, dim: usize, lo: f64, hi: f64) -> EmpiricalMeasure {
    let coords = (0..n * dim).map(|_| r.random_range(lo..hi)).collect();
    let weights = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    EmpiricalMeasure::from_unnormalized(dim, coords, weights).unwrap()
}

/// W₁ between a 1-D measure and Uniform[a, b], integrating the quantile
/// difference piece by piece.
fn w1_to_uniform(mu: &EmpiricalMeasure, a: f64, b: f64) -> f64 {
    let mut atoms: Vec<(f64, f64)> = mu.iter().map(|(p, w)| (p[0], w)).collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let signed = |x: f64, p0: f64, p1: f64| x * (p1 - p0) - (a * (p1 - p0) + (b - a) * (p1 * p1 - p0 * p0) / 2.0);
    let mut total = 0.0;
    let mut p0 = 0.0;
    for (x, w) in atoms {
        let p1 = (p0 + w).min(1.0);
        let root = ((x - a) / (b - a)).clamp(p0, p1);
        total += signed(x, p0, root).abs() + signed(x, root, p1).abs();
        p0 = p1;
    }
    total
}

/// Cheapest vertex of the transportation polytope, found by trying every
/// spanning tree of the complete bipartite graph.
fn enumerate_couplings(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells = m * n;
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut supply = a.to_vec();
        let mut demand = b.to_vec();
        let mut open: Vec<usize> = (0..cells).filter(|c| mask & (1 << c) != 0).collect();
        let mut flow = vec![0.0; cells];
        while !open.is_empty() {
            let leaf = (0..m)
                .find_map(|i| {
                    let inc: Vec<usize> = open.iter().copied().filter(|c| c / n == i).collect();
                    (inc.len() == 1).then(|| (inc[0], true))
                })
                .or_else(|| {
                    (0..n).find_map(|j| {
                        let inc: Vec<usize> = open.iter().copied().filter(|c| c % n == j).collect();
                        (inc.len() == 1).then(|| (inc[0], false))
                    })
                });
            let Some((c, is_row)) = leaf else { break };
            let (i, j) = (c / n, c % n);
            let f = if is_row { supply[i] } else { demand[j] };
            flow[c] = f;
            supply[i] -= f;
            demand[j] -= f;
            open.retain(|&x| x != c);
        }
        let balanced = supply.iter().chain(&demand).all(|r| r.abs() < 1e-12);
        if !open.is_empty() || !balanced || flow.iter().any(|&f| f < -1e-12) {
            continue;
        }
        best = best.min(flow.iter().zip(cost).map(|(f, c)| f * c).sum());
    }
    best
}

fn c01_ot() -> Measured {
    let mut r = rng::stream(SEED, "acceptance/ot");
    let mut worst_1d: f64 = 0.0;
    let mut out = Vec::new();
    for _ in 0..100 {
        let mu = random_measure(&mut r, 10, 1, -5.0, 5.0);
        let nu = random_measure(&mut r, 10, 1, -5.0, 5.0);
        let exact = w1_exact(&mu, &nu, &Metric::Euclidean).unwrap().0;
        worst_1d = worst_1d.max((exact - w1_exact_1d(&mu, &nu).unwrap()).abs());
        out.push(exact);
    }
    let mut worst_3x3: f64 = 0.0;
    for _ in 0..20 {
        let mu = random_measure(&mut r, 3, 2, -1.0, 1.0);
        let nu = random_measure(&mut r, 3, 2, -1.0, 1.0);
        let cost: Vec<f64> = (0..9).map(|c| Metric::Euclidean.distance(mu.point(c / 3), nu.point(c % 3)).unwrap()).collect();
        let exact = w1_exact(&mu, &nu, &Metric::Euclidean).unwrap().0;
        worst_3x3 = worst_3x3.max((exact - enumerate_couplings(mu.weights(), nu.weights(), &cost)).abs());
        out.push(exact);
    }
    Measured {
        pass: worst_1d <= 1e-9 && worst_3x3 <= 1e-9,
        detail: format!("max |exact - 1d| = {worst_1d:.3e}, max |exact - enumeration| = {worst_3x3:.3e}, tol 1e-9"),
        artifacts: vec![values("w1", &out)],
    }
}

fn c02_duality() -> Measured {
    let mut r = rng::stream(SEED, "acceptance/duality");
    let mut worst = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for _ in 0..100 {
        let mut knots: Vec<f64> = (0..8).map(|_| r.random_range(-3.0..3.0)).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut vals = vec![r.random_range(-1.0..1.0)];
        for w in knots.windows(2) {
            let slope: f64 = r.random_range(-1.0..1.0);
            vals.push(vals.last().unwrap() + slope * (w[1] - w[0]));
        }
        let f = PiecewiseLinear::new(knots, vals).unwrap();
        let mu = random_measure(&mut r, 10, 1, -4.0, 4.0);
        let nu = random_measure(&mut r, 10, 1, -4.0, 4.0);
        let lower = dual_lower_bound(&mu, &nu, |x| f.eval(x[0]), &Metric::Euclidean).unwrap();
        let exact = w1_exact(&mu, &nu, &Metric::Euclidean).unwrap().0;
        worst = worst.max(lower - exact);
        out.extend([lower, exact]);
    }
    Measured {
        pass: worst <= 1e-9,
        detail: format!("max (dual - W1) = {worst:.3e}, tol 1e-9"),
        artifacts: vec![values("dual", &out)],
    }
}

fn c03_contraction() -> Measured {
    let mut r = rng::stream(SEED, "acceptance/contraction");
    let g = make_linear_scalar(0.5).unwrap();
    let theta = random_measure(&mut r, 16, 1, 0.0, 1.0);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut out = Vec::new();
    for _ in 0..100 {
        let m1 = random_measure(&mut r, 32, 1, -3.0, 3.0);
        let m2 = random_measure(&mut r, 32, 1, -3.0, 3.0);
        let before = w1_exact_1d(&m1, &m2).unwrap();
        let after = w1_exact_1d(&foias_exact(&g, &theta, &m1).unwrap(), &foias_exact(&g, &theta, &m2).unwrap()).unwrap();
        if after > 0.5 * before + 1e-9 {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(after / before);
        out.extend([before, after]);
    }
    Measured {
        pass: violations == 0,
        detail: format!("{violations} violations of W(P mu1, P mu2) <= 0.5 W(mu1, mu2) + 1e-9, max ratio {worst_ratio:.6}"),
        artifacts: vec![values("pairs", &out)],
    }
}

fn certify_linear(g: &dyn DrivenSystem, theta: &DistributionSpec) -> ContractionReport {
    let b = StateBox::cube(1, -1.0, 1.0).unwrap();
    estimate_contraction(g, theta, &b, &Metric::Euclidean, 200, 1, SEED).unwrap()
}

fn c04_fixed_point() -> Measured {
    let g = make_linear_scalar(0.5).unwrap();
    let theta = DistributionSpec::dirac(&[1.0]).unwrap();
    let report = certify_linear(&g, &theta);
    let cfg = SolveConfig { rng_seed: SEED, ..SolveConfig::default() };
    let sol = solve_invariant(&g, &theta, &report, &cfg).unwrap();
    let dist = w1_exact_1d(&sol.fixed_point, &EmpiricalMeasure::dirac(&[2.0])).unwrap();
    Measured {
        pass: sol.converged && dist <= 1e-6 && sol.iterations <= 60,
        detail: format!("W1 to delta_2 = {dist:.3e} (tol 1e-6) after {} iterations (max 60)", sol.iterations),
        artifacts: vec![values("fixed_point", sol.fixed_point.coords()), values("gaps", &sol.gaps)],
    }
}

fn c05_uniform() -> Measured {
    let g = make_linear_scalar(0.5).unwrap();
    let coin = EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let theta = DistributionSpec::atoms(coin.clone());
    let report = certify_linear(&g, &theta);
    let cfg = SolveConfig { n_particles: 4096, rng_seed: SEED, ..SolveConfig::default() };
    let sol = solve_invariant(&g, &theta, &report, &cfg).unwrap();
    let to_uniform = w1_to_uniform(&sol.fixed_point, 0.0, 2.0);
    let mut pushed = EmpiricalMeasure::dirac(&[0.0]);
    for k in 0..30 {
        pushed = compress(&foias_exact(&g, &coin, &pushed).unwrap(), 4096, rng::derive_indexed(SEED, "push", k)).unwrap();
    }
    let pushed_to_uniform = w1_to_uniform(&pushed, 0.0, 2.0);
    Measured {
        pass: sol.converged && to_uniform <= 0.02 && pushed_to_uniform <= 0.02,
        detail: format!(
            "W1 to Uniform[0,2] = {to_uniform:.3e} (tol 0.02); 30 exact pushes of delta_0: {pushed_to_uniform:.3e}"
        ),
        artifacts: vec![values("fixed_point", sol.fixed_point.coords()), values("pushed", pushed.coords())],
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn c06_banach() -> Measured {
    let a0 = Matrix::diagonal(&[0.6, 0.2]);
    let a1 = Matrix::diagonal(&[0.0, 0.2]);
    let f = Matrix::new(2, 1, vec![1.0, 0.5]).unwrap();
    let params = VarmaParams::new(a0, vec![a1], vec![0.0, 0.0], f).unwrap();
    let g = make_varma(params.clone());
    let theta = DistributionSpec::atoms(EmpiricalMeasure::new(1, vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap());
    let report = varma_certificate(&params, &theta, 1, SEED).unwrap();
    let cfg = SolveConfig { rng_seed: SEED, ..SolveConfig::default() };
    let sol = solve_invariant(&g, &theta, &report, &cfg).unwrap();
    let med = median(sol.gap_ratios());
    Measured {
        pass: (report.c_hat - 0.6).abs() <= 1e-12 && sol.converged && med <= 0.65,
        detail: format!(
            "certificate {}, median gap ratio {med:.4} (tol 0.65) over {} iterations, converged {}",
            g17(report.c_hat),
            sol.iterations,
            sol.converged
        ),
        artifacts: vec![values("gaps", &sol.gaps), values("fixed_point", sol.fixed_point.coords())],
    }
}

fn c07_certificates() -> Measured {
    let garch = garch_certificate(&GarchParams::new(0.1, 0.05, 0.9).unwrap()).unwrap();
    let product = make_product_system();
    let b = product.state_bounds().cloned().unwrap_or_else(|| StateBox::cube(1, -1.0, 1.0).unwrap());
    let zero = DistributionSpec::dirac(&[0.0]).unwrap();
    let p = estimate_contraction(&product, &zero, &b, &Metric::Euclidean, 500, 1, SEED).unwrap();
    let garch_ok = garch.c_hat == 0.05 + 0.9 && (garch.c_hat - 0.95).abs() <= f64::EPSILON;
    Measured {
        pass: garch_ok && p.c_hat == 0.0,
        detail: format!("garch c = {} (alpha+beta), product with delta_0 c_hat = {}", g17(garch.c_hat), g17(p.c_hat)),
        artifacts: vec![values("certificates", &[garch.c_hat, p.c_hat])],
    }
}

struct CliRun {
    code: i32,
    files: Vec<(String, Vec<u8>)>,
    stderr: String,
}

fn run_cli(cmd: &str, config: &str) -> CliRun {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let res = Command::new(env!("CARGO_BIN_EXE_foias"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    CliRun { code: res.status.code().unwrap_or(-1), files: read_dir(&out), stderr: String::from_utf8_lossy(&res.stderr).into() }
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|d| {
            d.map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

impl CliRun {
    fn file(&self, name: &str) -> String {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| String::from_utf8_lossy(b).into_owned()).unwrap_or_default()
    }

    fn prefixed(&self, prefix: &str) -> Vec<(String, Vec<u8>)> {
        self.files.iter().map(|(n, b)| (format!("{prefix}/{n}"), b.clone())).collect()
    }
}

struct Row {
    param: f64,
    input_gap: f64,
    ratio: f64,
}

const SWEEP_HEADER: &str = "param,input_gap,state_gap,ratio,converged";

fn sweep_rows(csv: &str) -> Option<Vec<Row>> {
    let mut lines = csv.lines();
    if lines.next()? != SWEEP_HEADER {
        return None;
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 || !matches!(f[4], "true" | "false") {
                return None;
            }
            Some(Row { param: f[0].parse().ok()?, input_gap: f[1].parse().ok()?, ratio: f[3].parse().ok()? })
        })
        .collect()
}

const LINEAR_EXP_SWEEP: &str = r#"
seed = 11
[system]
kind = "linear"
a = 0.5
[input]
kind = "exponential"
rate = 1.0
[sweep]
family = "exponential_rate"
grid = [1.0]
eps = 0.01
n_atoms = 3500
"#;

fn c08_input_curve() -> Measured {
    let run = run_cli("sweep", LINEAR_EXP_SWEEP);
    let rows = sweep_rows(&run.file("sweep.csv")).unwrap_or_default();
    let closed = 0.01 / (1.0 * 1.01);
    let gap = rows.iter().find(|r| r.param == 1.0).map_or(f64::NAN, |r| r.input_gap);
    Measured {
        pass: run.code == 0 && (gap - closed).abs() <= 0.005,
        detail: format!("input_gap at lambda=1 = {gap:.6} vs {closed:.6} (tol 0.005), exit {}", run.code),
        artifacts: run.prefixed("sweep"),
    }
}

const LINEAR_SHIFT_SWEEP: &str = r#"
seed = 12
[system]
kind = "linear"
a = 0.5
[input]
kind = "uniform"
lo = 0.0
hi = 1.0
[sweep]
family = "uniform_shift"
width = 1.0
grid = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
"#;

const ESN_CONTRAST_SWEEP: &str = r#"
seed = 13
[system]
kind = "esn"
n = 100
radius = 1.5
[input]
kind = "exponential"
rate = 1.0
[sweep]
family = "exponential_rate"
grid = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0]
"#;

fn c09_continuity() -> Measured {
    let lin = run_cli("sweep", LINEAR_SHIFT_SWEEP);
    let lin_rows = sweep_rows(&lin.file("sweep.csv")).unwrap_or_default();
    let lin_max = lin_rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lin_ok = lin.code == 0 && lin_rows.len() == 7 && lin_rows.iter().all(|r| r.ratio <= 2.1);
    let esn = run_cli("sweep", ESN_CONTRAST_SWEEP);
    let esn_rows = sweep_rows(&esn.file("sweep.csv"));
    let schema_ok = esn.code == 0 && esn_rows.as_ref().is_some_and(|r| r.len() == 15);
    let esn_max = esn_rows.iter().flatten().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let contrast = esn_max > 2.0;
    let mut artifacts = lin.prefixed("linear");
    artifacts.extend(esn.prefixed("esn"));
    Measured {
        pass: lin_ok && schema_ok && contrast,
        detail: format!(
            "linear max ratio {lin_max:.4} (tol 2.1); ESN CSV schema ok {schema_ok} (exit {}), max ratio {esn_max:.4} (needs > 2){}",
            esn.code,
            if esn.stderr.is_empty() { String::new() } else { format!(", stderr: {}", esn.stderr.trim()) }
        ),
        artifacts,
    }
}

const ESN_SEQ: &str = r#"
seed = 14
[system]
kind = "esn"
n = 20
radius = 0.5
[input]
kind = "uniform"
lo = 0.0
hi = 1.0
[seq]
horizon = 8
n_windows = 5000
"#;

fn json_number(json: &str, key: &str) -> f64 {
    let Some(i) = json.find(&format!("\"{key}\":")) else { return f64::NAN };
    let rest = &json[i + key.len() + 3..];
    let end = rest.find([',', '\n', '}']).unwrap_or(rest.len());
    rest[..end].trim().parse().unwrap_or(f64::NAN)
}

fn c10_sequence() -> Measured {
    let run = run_cli("seq", ESN_SEQ);
    let json = run.file("seq_report.json");
    let s = json_number(&json, "stationarity_gap");
    let r = json_number(&json, "fixed_point_residual");
    let f = json_number(&json, "filter_consistency_gap");
    Measured {
        pass: run.code == 0 && s <= 0.05 && r <= 0.05 && f <= 0.05,
        detail: format!(
            "stationarity {s:.4}, fixed-point residual {r:.4}, filter consistency {f:.4} (tol 0.05 each), exit {}",
            run.code
        ),
        artifacts: run.prefixed("seq"),
    }
}

fn main() {
    let mut failed = Vec::new();
    let mut first = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let m = (c.run)();
        let took = start.elapsed();
        let in_time = c.limit.is_none_or(|l| took <= l);
        let pass = m.pass && in_time;
        let limit = c.limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!(
            "criterion {:>2} {}: {} - {} [{:.2}s{limit}]",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            m.detail,
            took.as_secs_f64()
        );
        if !pass {
            failed.push(c.id);
        }
        first.push(m.artifacts);
    }
    let mut differing = Vec::new();
    let mut count = 0;
    for (c, before) in CRITERIA.iter().zip(&first) {
        let again = (c.run)().artifacts;
        count += before.len();
        if &again != before {
            let names: Vec<&str> = before
                .iter()
                .zip(&again)
                .filter(|(a, b)| a != b)
                .map(|(a, _)| a.0.as_str())
                .collect();
            differing.push(format!("{} {:?}", c.id, names));
        }
    }
    let pass = differing.is_empty();
    println!(
        "criterion 11 {}: reruns are byte-identical - {count} artifacts compared{}",
        if pass { "PASS" } else { "FAIL" },
        if pass { String::new() } else { format!(", differing: {}", differing.join("; ")) }
    );
    if !pass {
        failed.push(11);
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
