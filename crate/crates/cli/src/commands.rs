use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gibbs_spectral::dynamics::{
    chain_rng, estimate_partition_function, estimate_tv_curve, exact_transition_matrix, gibbs_distribution,
    glauber_step, stationary_distribution, ChainState, TvMode, ZOptions,
};
use gibbs_spectral::extensions::{domination_matrix_j, extended_influence_matrix};
use gibbs_spectral::gibbs::{
    influence_matrix_exact, influence_spectral_radius, parse_pinning, symmetrized_influence,
};
use gibbs_spectral::graph::{connective_constant_k, LoadedGraph};
use gibbs_spectral::regimes::{
    ising_uniqueness_interval, lambda_c, regime_verdict, sup_abs_h, RegimeVerdict,
};
use gibbs_spectral::spectral::{
    adjacency_spectral_radius, knb_matrix_capped, SpectralReport, DEFAULT_LABEL_CAP,
};
use gibbs_spectral::tsaw::{influence_matrix_tsaw_capped, DEFAULT_NODE_CAP};
use gibbs_spectral::{GibbsSpec, Graph, LabeledMatrix, Pinning, VERSION};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{emit, usage, CliResult, Failure, GraphArgs, ModelArgs, Provenance};

#[derive(Args, Clone, Debug)]
pub struct SpectralArgs {
    /// Walk length for the non-backtracking matrix and connective constant.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Power used for the root norm ‖H^N‖^(1/N).
    #[arg(long = "N", default_value_t = 4)]
    pub n_power: usize,
    /// Label cap for walk-indexed matrices.
    #[arg(long, default_value_t = DEFAULT_LABEL_CAP)]
    pub cap_walks: usize,
}

impl SpectralArgs {
    fn record(&self, p: &mut Provenance) {
        p.set("k", self.k).set("N", self.n_power).set("cap_walks", self.cap_walks);
    }

    fn check(&self) -> CliResult<()> {
        if self.k == 0 || self.n_power == 0 {
            return usage("--k and --N must be at least 1");
        }
        Ok(())
    }

    fn report(&self, g: &Graph) -> CliResult<SpectralReport> {
        let rho_adjacency = adjacency_spectral_radius(g)?.value;
        let connective_k = connective_constant_k(g, self.k)?;
        let h = knb_matrix_capped(g, self.k, self.cap_walks)?;
        let mut hk_norms = Vec::new();
        let mut hk_root_norms = Vec::new();
        for l in 1..=self.n_power {
            let s = h.sigma(l)?;
            hk_norms.push((l, s));
            hk_root_norms.push((l, s.powf(1.0 / l as f64)));
        }
        Ok(SpectralReport {
            rho_adjacency,
            connective_k,
            hk_norms,
            hk_root_norms,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Statistic {
    /// ρ(A_G)
    Adjacency,
    /// ‖H_{G,k}^N‖₂^{1/N}
    Knb,
    /// 𝔡_k
    Connective,
}

impl Statistic {
    fn name(self) -> &'static str {
        match self {
            Statistic::Adjacency => "adjacency",
            Statistic::Knb => "knb",
            Statistic::Connective => "connective",
        }
    }

    fn value(self, r: &SpectralReport) -> f64 {
        match self {
            Statistic::Adjacency => r.rho_adjacency,
            Statistic::Knb => r.hk_root_norms.last().map_or(0.0, |x| x.1),
            Statistic::Connective => r.connective_k,
        }
    }
}

const STATISTICS: [Statistic; 3] = [Statistic::Adjacency, Statistic::Knb, Statistic::Connective];

fn write_json(out: Option<&PathBuf>, value: &serde_json::Value) -> CliResult<()> {
    emit(out.map(|p| p.as_path()), &(serde_json::to_string_pretty(value)? + "\n"))
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    a.spectral.check()?;
    let spec = a.model.spec()?;
    let mut prov = Provenance::new("analyze");
    prov.spec(&spec);
    a.spectral.record(&mut prov);
    let LoadedGraph { graph: g, .. } = a.graph.load(&mut prov)?;
    let report = a.spectral.report(&g)?;
    let dmax = g.max_degree();
    let mut verdicts = serde_json::Map::new();
    let mut text = String::new();
    writeln!(text, "graph: n={} m={} max_degree={}", g.n(), g.edge_count(), dmax).unwrap();
    writeln!(
        text,
        "model: beta={} gamma={} lambda={} ({:?})",
        spec.beta(),
        spec.gamma(),
        spec.lambda(),
        spec.kind()
    )
    .unwrap();
    writeln!(text, "rho(A) = {:.9}", report.rho_adjacency).unwrap();
    writeln!(text, "connective constant d_{} = {:.9}", a.spectral.k, report.connective_k).unwrap();
    for ((l, s), (_, r)) in report.hk_norms.iter().zip(&report.hk_root_norms) {
        writeln!(text, "||H^{l}||_2 = {s:.9}   root = {r:.9}").unwrap();
    }
    writeln!(text, "sup|h| = {:.9}", sup_abs_h(&spec, dmax)).unwrap();
    for stat in STATISTICS {
        let rho = stat.value(&report);
        let lc = lambda_c(rho).map_or("n/a".to_string(), |x| format!("{x:.9}"));
        let ui = ising_uniqueness_interval(rho, f64::MIN_POSITIVE)
            .map_or("n/a".to_string(), |u| format!("({:.9}, {:.9})", u.lo, u.hi));
        let v = regime_verdict(&spec, rho, dmax, stat.name())?;
        writeln!(
            text,
            "[{}] statistic={rho:.9} lambda_c={lc} ising_interval={ui} in_regime={} margin={:.6e}{}",
            stat.name(),
            v.in_regime,
            v.margin,
            v.bound_rhs.map_or(String::new(), |b| format!(" rho(I)_bound={b:.6}"))
        )
        .unwrap();
        verdicts.insert(stat.name().into(), serde_json::to_value(&v)?);
    }
    let hash = prov.hash();
    writeln!(text, "config_hash={hash} version={VERSION}").unwrap();
    print!("{text}");
    if let Some(out) = &a.out {
        let doc = json!({
            "version": VERSION,
            "config_hash": hash,
            "spectral": report,
            "verdicts": verdicts,
        });
        write_json(Some(out), &doc)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Spectral quantity compared against the threshold.
    #[arg(long, value_enum, default_value_t = Statistic::Adjacency)]
    pub criterion: Statistic,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Returns whether the parameters are in the regime.
pub fn regime(a: &RegimeArgs) -> CliResult<bool> {
    a.spectral.check()?;
    let spec = a.model.spec()?;
    let mut prov = Provenance::new("regime");
    prov.spec(&spec).set("criterion", a.criterion.name());
    a.spectral.record(&mut prov);
    let LoadedGraph { graph: g, .. } = a.graph.load(&mut prov)?;
    let rho = match a.criterion {
        Statistic::Adjacency => adjacency_spectral_radius(&g)?.value,
        _ => a.criterion.value(&a.spectral.report(&g)?),
    };
    let v: RegimeVerdict = regime_verdict(&spec, rho, g.max_degree(), a.criterion.name())?;
    let mut doc = serde_json::to_value(&v)?;
    doc["config_hash"] = json!(prov.hash());
    doc["version"] = json!(VERSION);
    write_json(a.out.as_ref(), &doc)?;
    Ok(v.in_regime)
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Optional pinning file with lines "v +1" / "v -1".
    #[arg(long)]
    pub pinning: Option<PathBuf>,
    /// Residuals up to this value pass.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Node cap for each tree of self-avoiding walks.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub cap_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Floating-point residuals below this are reported but never fail.
const ROUNDOFF: f64 = 1e-9;

#[derive(Serialize)]
struct Check {
    name: String,
    residual: f64,
    status: &'static str,
}

struct Checks {
    tol: f64,
    items: Vec<Check>,
}

impl Checks {
    /// `residual` is the amount by which the relation is violated.
    fn float(&mut self, name: String, residual: f64) {
        let status = if residual <= self.tol {
            "pass"
        } else if residual <= ROUNDOFF {
            "info"
        } else {
            "fail"
        };
        self.items.push(Check { name, residual, status });
    }

    fn exact(&mut self, name: String, mismatches: usize) {
        let status = if mismatches == 0 { "pass" } else { "fail" };
        self.items.push(Check {
            name,
            residual: mismatches as f64,
            status,
        });
    }
}

fn sym_residual(m: &LabeledMatrix<usize>) -> f64 {
    let t = m.transpose();
    m.max_abs_diff(&t).unwrap_or(f64::INFINITY)
}

pub fn verify(a: &VerifyArgs) -> CliResult<bool> {
    a.spectral.check()?;
    if !(a.tolerance >= 0.0) {
        return usage("--tolerance must be nonnegative");
    }
    let spec = a.model.spec()?;
    let mut prov = Provenance::new("verify");
    prov.spec(&spec).set("tolerance", a.tolerance).set("cap_nodes", a.cap_nodes);
    a.spectral.record(&mut prov);
    let loaded = a.graph.load(&mut prov)?;
    let g = &loaded.graph;
    let mut pins = vec![("empty".to_string(), Pinning::new())];
    if let Some(p) = &a.pinning {
        prov.file("pinning_sha256", p)?;
        let f = File::open(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        let pin = parse_pinning(BufReader::new(f), &loaded.labels)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        pins.push(("file".to_string(), pin));
    }
    let mut checks = Checks {
        tol: a.tolerance,
        items: Vec::new(),
    };
    let dmax = g.max_degree();
    let rho = adjacency_spectral_radius(g)?.value;
    let verdict = regime_verdict(&spec, rho, dmax, "adjacency")?;
    for (label, pin) in &pins {
        let exact = influence_matrix_exact(&spec, g, pin)?;
        let tree = influence_matrix_tsaw_capped(&spec, g, pin, a.cap_nodes)?;
        checks.float(format!("tsaw_equals_exact[{label}]"), tree.max_abs_diff(&exact)?);
        let sym = symmetrized_influence(&spec, g, pin, &exact)?;
        checks.float(format!("symmetrization[{label}]"), sym_residual(&sym));
        if let (true, Some(rhs)) = (verdict.in_regime, verdict.bound_rhs) {
            let r = influence_spectral_radius(&spec, g, pin, &exact)?;
            checks.float(format!("rho(I)<=bound[{label}]"), (r - rhs).max(0.0));
        }
    }
    for k in 1..=a.spectral.k {
        let h = match knb_matrix_capped(g, k, a.spectral.cap_walks) {
            Ok(h) => h,
            Err(gibbs_spectral::Error::Degenerate(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let dk = connective_constant_k(g, k)?;
        for l in 1..=a.spectral.n_power {
            let hr = h.power_times_r(l)?;
            let t = hr.transpose();
            let mismatches = hr.data().iter().zip(t.data()).filter(|(x, y)| x != y).count();
            checks.exact(format!("pt_invariance[k={k},l={l}]"), mismatches);
            let sigma = h.sigma(l)?;
            let top = h.power(l)?.max_entry() as f64;
            checks.float(format!("entry<=sigma[k={k},l={l}]"), (top - sigma).max(0.0));
            checks.float(
                format!("sigma<=d_k^(l+k)[k={k},l={l}]"),
                (sigma - dk.powi((l + k) as i32)).max(0.0),
            );
        }
    }
    if g.n() <= 8 && dmax >= 2 {
        let delta = sup_abs_h(&spec, dmax);
        for (label, pin) in &pins {
            for k in 1..=a.spectral.k.min(2) {
                let l = extended_influence_matrix(&spec, g, pin, k)?;
                let j = domination_matrix_j(g, pin, k, delta)?;
                let excess = l
                    .data()
                    .iter()
                    .zip(j.data())
                    .map(|(x, y)| x.abs() - y)
                    .fold(0.0, f64::max);
                checks.float(format!("|L|<=J[k={k},{label}]"), excess);
            }
        }
    }
    if let Ok((_, mu)) = gibbs_distribution(&spec, g, 256) {
        let p = exact_transition_matrix(&spec, g)?;
        let mut balance = 0.0f64;
        for x in 0..mu.len() {
            for y in 0..mu.len() {
                balance = balance.max((mu[x] * p.get(x, y) - mu[y] * p.get(y, x)).abs());
            }
        }
        checks.float("detailed_balance".into(), balance);
        let pi = stationary_distribution(&p)?;
        let diff = pi.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.float("stationary_equals_gibbs".into(), diff);
    }
    let failed = checks.items.iter().filter(|c| c.status == "fail").count();
    for c in &checks.items {
        println!("{:<4} {} residual={:.3e}", c.status.to_uppercase(), c.name, c.residual);
    }
    let hash = prov.hash();
    println!(
        "{} checks, {failed} failed; tolerance={:e} config_hash={hash} version={VERSION}",
        checks.items.len(),
        a.tolerance
    );
    if let Some(out) = &a.out {
        write_json(
            Some(out),
            &json!({"checks": checks.items, "failed": failed, "config_hash": hash, "version": VERSION}),
        )?;
    }
    Ok(failed == 0)
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ChainArgs {
    fn setup(&self, command: &str) -> CliResult<(GibbsSpec, LoadedGraph, Provenance)> {
        let spec = self.model.spec()?;
        let mut prov = Provenance::new(command);
        prov.spec(&spec).set("seed", self.seed);
        let loaded = self.graph.load(&mut prov)?;
        if loaded.graph.n() == 0 {
            return usage("graph has no vertices");
        }
        Ok((spec, loaded, prov))
    }
}

fn default_horizon(n: usize) -> u64 {
    let n = n.max(2) as f64;
    (8.0 * n * n.ln()).ceil() as u64
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Independent chains, one configuration each.
    #[arg(long, default_value_t = 10)]
    pub chains: usize,
    /// Steps per chain (default ⌈8 n ln n⌉).
    #[arg(long)]
    pub horizon: Option<u64>,
}

pub fn sample(a: &SampleArgs) -> CliResult<()> {
    let (spec, loaded, mut prov) = a.chain.setup("sample")?;
    let g = &loaded.graph;
    let steps = a.horizon.unwrap_or_else(|| default_horizon(g.n()));
    prov.set("chains", a.chains).set("horizon", steps);
    let finals: Vec<ChainState> = (0..a.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(a.chain.seed, c as u64);
            let mut st = ChainState::all_minus(g.n());
            while st.step < steps {
                glauber_step(&spec, g, &mut st, &mut rng);
            }
            st
        })
        .collect();
    let mut out = String::new();
    let header = json!({
        "record": "header",
        "version": VERSION,
        "config_hash": prov.hash(),
        "seed": a.chain.seed,
        "chains": a.chains,
        "steps": steps,
        "labels": loaded.labels,
    });
    writeln!(out, "{header}").unwrap();
    for (c, st) in finals.iter().enumerate() {
        let sigma: Vec<i8> = st.sigma.iter().map(|s| s.sign()).collect();
        writeln!(out, "{}", json!({"record": "sample", "chain": c, "step": st.step, "sigma": sigma})).unwrap();
    }
    emit(a.chain.out.as_deref(), &out)?;
    if a.chain.out.is_some() {
        println!("wrote {} samples after {steps} steps (seed {})", a.chains, a.chain.seed);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Auto,
    Full,
    Marginal,
}

#[derive(Args, Debug)]
pub struct MixArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 1000)]
    pub chains: usize,
    /// Last step of the curve (default ⌈8 n ln n⌉).
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Full-state TV needs chains ≥ 10·|support| under auto.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

pub fn mix(a: &MixArgs) -> CliResult<()> {
    let (spec, loaded, mut prov) = a.chain.setup("mix")?;
    let g = &loaded.graph;
    let horizon = a.horizon.unwrap_or_else(|| default_horizon(g.n()));
    let mode = match a.mode {
        ModeArg::Auto => TvMode::Auto,
        ModeArg::Full => TvMode::Full,
        ModeArg::Marginal => TvMode::Marginal,
    };
    prov.set("chains", a.chains).set("horizon", horizon).set("mode", format!("{mode:?}"));
    let start = ChainState::all_minus(g.n()).sigma;
    let est = estimate_tv_curve(&spec, g, &start, a.chains, horizon, a.chain.seed, mode)?;
    let mut csv = String::new();
    writeln!(csv, "# version={VERSION}").unwrap();
    writeln!(csv, "# config_hash={}", prov.hash()).unwrap();
    writeln!(csv, "# seed={} chains={} mode={:?}", est.seed, est.chains, est.mode).unwrap();
    match est.threshold_step {
        Some(t) => writeln!(csv, "# threshold_step={t}").unwrap(),
        None => writeln!(csv, "# threshold_step=none").unwrap(),
    }
    writeln!(csv, "t,tv").unwrap();
    for (t, tv) in &est.tv_curve {
        writeln!(csv, "{t},{tv}").unwrap();
    }
    emit(a.chain.out.as_deref(), &csv)?;
    if a.chain.out.is_some() {
        println!(
            "{} checkpoints, mode {:?}, threshold step {}",
            est.tv_curve.len(),
            est.mode,
            est.threshold_step.map_or("not reached".to_string(), |t| t.to_string())
        );
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EstimateZArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Target relative error.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    pub confidence: f64,
}

pub fn estimate_z(a: &EstimateZArgs) -> CliResult<()> {
    let (spec, loaded, mut prov) = a.chain.setup("estimate-z")?;
    prov.set("epsilon", a.epsilon).set("confidence", a.confidence);
    let est = estimate_partition_function(
        &spec,
        &loaded.graph,
        a.epsilon,
        a.confidence,
        a.chain.seed,
        &ZOptions::default(),
    )?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let doc = json!({
        "z_hat": est.z_hat,
        "epsilon": est.epsilon,
        "confidence": est.confidence,
        "seed": est.seed,
        "groups": est.groups,
        "samples_per_stage": est.samples_per_stage,
        "warnings": est.warnings,
        "config_hash": prov.hash(),
        "version": VERSION,
    });
    write_json(a.chain.out.as_ref(), &doc)?;
    if a.chain.out.is_some() {
        println!("z_hat = {}", est.z_hat);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_horizon_values() {
        assert_eq!(default_horizon(1), default_horizon(2));
        assert_eq!(default_horizon(5), (40.0 * 5f64.ln()).ceil() as u64);
    }

    #[test]
    fn check_classification() {
        let mut c = Checks { tol: 0.0, items: Vec::new() };
        c.float("a".into(), 0.0);
        c.float("b".into(), 1e-15);
        c.float("c".into(), 1e-3);
        c.exact("d".into(), 1);
        let s: Vec<&str> = c.items.iter().map(|x| x.status).collect();
        assert_eq!(s, ["pass", "info", "fail", "fail"]);
    }
}
