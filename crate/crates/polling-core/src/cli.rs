//! Command-line front end: scenario analysis, simulation, limits, sweeps,
//! and the analytic-versus-simulation cross-check.
//!
//! All floating-point output is printed with nine significant digits.
//! Failures print a single `error: ...` line on stderr and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exhaustive::{
    exhaustive_mean_delivery, exhaustive_mean_sojourn, expected_waiting_customers, solve_fk,
    GridFunction, SolverReport,
};
use crate::gg;
use crate::limits::{exhaustive_limits, gg_limits, Regime};
use crate::model::SystemParameters;
use crate::policy::Policy;
use crate::scenario;
use crate::sim::{simulate, trace_events, SimulationConfig, SimulationEstimate, TRACE_ROW_CAP};

#[derive(Parser)]
#[command(
    name = "polling",
    about = "Performance analysis of a continuous polling system on a circle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact globally gated metrics for a scenario.
    Gg { scenario: PathBuf },
    /// Exhaustive metrics with certified numerical error bounds.
    Exhaustive {
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solved kernel grid as CSV (i,j,x,y,g,f_k) here.
        #[arg(long)]
        dump_grid: Option<PathBuf>,
    },
    /// Simulation estimates for a scenario under one policy.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        policy: Policy,
        #[command(flatten)]
        sim: SimArgs,
        /// Write an event trace of the first replication as CSV
        /// (time,event,position,batch), capped at one million rows.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Light or heavy traffic limits for both policies.
    Limits {
        scenario: PathBuf,
        #[arg(long)]
        regime: Regime,
    },
    /// Run a sweep spec and emit CSV.
    Sweep {
        spec: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check analysis against simulation; exits 0 when all pass.
    Validate {
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Grid resolution for the kernel solver.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Stopping tolerance for the kernel solver.
    #[arg(long, default_value_t = 1e-9)]
    delta: f64,
}

#[derive(Args, Clone, Copy)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    replications: u32,
    /// Measured batches per replication.
    #[arg(long, default_value_t = 10_000)]
    batches: u64,
    /// Warmup batches; defaults to ten mean cycles of arrivals.
    #[arg(long)]
    warmup: Option<u64>,
}

impl SimArgs {
    fn config(&self, params: &SystemParameters, policy: Policy) -> SimulationConfig {
        let mut config = SimulationConfig::new(params.clone(), policy);
        config.seed = self.seed;
        config.replications = self.replications;
        config.measured_batches = self.batches;
        if let Some(w) = self.warmup {
            config.warmup_batches = w;
        }
        config
    }
}

/// Entry point used by the binary. Configures the thread pool from
/// POLLING_THREADS, runs the subcommand, and maps errors to exit code 2
/// with a single machine-readable `error:` line on stderr.
pub fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("POLLING_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: POLLING_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gg { scenario } => {
            cmd_gg(&scenario)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exhaustive {
            scenario,
            solver,
            dump_grid,
        } => {
            cmd_exhaustive(&scenario, solver, dump_grid.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            scenario,
            policy,
            sim,
            trace,
        } => {
            cmd_simulate(&scenario, policy, sim, trace.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Limits { scenario, regime } => {
            cmd_limits(&scenario, regime)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { spec, out } => {
            cmd_sweep(&spec, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            scenario,
            solver,
            sim,
        } => cmd_validate(&scenario, solver, sim),
    }
}

/// Nine significant digits; plain notation in a comfortable range,
/// scientific outside it.
fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let a = x.abs();
    if (1e-3..1e9).contains(&a) {
        let magnitude = a.log10().floor() as i32;
        let decimals = (8 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

fn opt_sig9(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

fn cmd_gg(path: &Path) -> Result<()> {
    let params = scenario::load_scenario(path)?;
    let stats = gg::cycle_moments(&params);
    println!("esb={}", sig9(gg::gg_mean_sojourn(&params)));
    println!("ed={}", sig9(gg::gg_mean_delivery(&params)));
    println!("cycle_mean={}", sig9(stats.mean_c));
    println!("cycle_second_moment={}", sig9(stats.second_moment_c));
    println!("cycle_residual_mean={}", sig9(stats.mean_residual));
    println!("cycle_length_biased_mean={}", sig9(stats.mean_length_biased));
    Ok(())
}

fn max_f_k(params: &SystemParameters, grid: &GridFunction) -> Result<f64> {
    let mut max = 0.0f64;
    for i in 0..grid.n {
        let x = grid.node_position(i);
        for j in 0..grid.n {
            max = max.max(grid.f_k_at(params, x, grid.node_position(j))?);
        }
    }
    Ok(max)
}

fn print_solver_report(report: &SolverReport) {
    println!("solver_iterations={}", report.iterations);
    println!("solver_achieved_delta={}", sig9(report.achieved_delta));
    println!(
        "solver_regularity_margin={}",
        sig9(report.regularity_margin)
    );
    println!(
        "solver_shift={}",
        report
            .shift_applied
            .map(sig9)
            .unwrap_or_else(|| "none".into())
    );
    println!("solver_zeta={}", sig9(report.zeta));
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", path.display())))
}

fn cmd_exhaustive(path: &Path, solver: SolverArgs, dump_grid: Option<&Path>) -> Result<()> {
    let params = scenario::load_scenario(path)?;
    let (grid, report) = solve_fk(&params, solver.grid, solver.delta)?;
    let (esb, esb_bound) = exhaustive_mean_sojourn(&params, &grid)?;
    let (ed, ed_bound) = exhaustive_mean_delivery(&params, &grid)?;
    println!("el={}", sig9(expected_waiting_customers(&params)));
    println!("esb={}", sig9(esb));
    println!("esb_bound={}", sig9(esb_bound));
    println!("ed={}", sig9(ed));
    println!("ed_bound={}", sig9(ed_bound));
    println!("max_f_k={}", sig9(max_f_k(&params, &grid)?));
    print_solver_report(&report);
    if let Some(dump) = dump_grid {
        write_file(dump, &grid.to_csv(&params)?)?;
    }
    Ok(())
}

fn cmd_simulate(path: &Path, policy: Policy, sim: SimArgs, trace: Option<&Path>) -> Result<()> {
    let params = scenario::load_scenario(path)?;
    let config = sim.config(&params, policy);
    if let Some(trace_path) = trace {
        let mut csv = String::from("time,event,position,batch\n");
        for row in trace_events(&config, TRACE_ROW_CAP)? {
            let batch = row.batch.map(|b| b.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{batch}\n",
                row.time,
                row.kind.name(),
                row.position
            ));
        }
        write_file(trace_path, &csv)?;
    }
    let estimates = simulate(&config)?;
    for est in &estimates {
        println!("{}={}", est.metric, sig9(est.mean));
        println!("{}_ci={}", est.metric, sig9(est.ci_half_width));
    }
    Ok(())
}

fn cmd_limits(path: &Path, regime: Regime) -> Result<()> {
    let params = scenario::load_scenario(path)?;
    for report in [gg_limits(&params, regime), exhaustive_limits(&params, regime)] {
        println!(
            "policy={} regime={} sojourn_limit={} delivery_limit={} gap_sojourn={} gap_delivery={}",
            report.policy,
            report.regime,
            sig9(report.sojourn_limit),
            sig9(report.delivery_limit),
            sig9(report.policy_gap_sojourn),
            sig9(report.policy_gap_delivery),
        );
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepVariable {
    RhoViaLambda,
}

#[derive(Debug, Deserialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum OutputKind {
    Analysis,
    Simulation,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Analysis]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSolverSettings {
    #[serde(default = "default_grid_n")]
    grid: usize,
    #[serde(default = "default_delta")]
    delta: f64,
}

fn default_grid_n() -> usize {
    256
}

fn default_delta() -> f64 {
    1e-9
}

impl Default for SweepSolverSettings {
    fn default() -> Self {
        SweepSolverSettings {
            grid: default_grid_n(),
            delta: default_delta(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSimSettings {
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_replications")]
    replications: u32,
    #[serde(default = "default_batches")]
    measured_batches: u64,
    #[serde(default)]
    warmup_batches: Option<u64>,
}

fn default_seed() -> u64 {
    1
}

fn default_replications() -> u32 {
    5
}

fn default_batches() -> u64 {
    10_000
}

impl Default for SweepSimSettings {
    fn default() -> Self {
        SweepSimSettings {
            seed: default_seed(),
            replications: default_replications(),
            measured_batches: default_batches(),
            warmup_batches: None,
        }
    }
}

/// Sweep description: a base scenario, a sweep variable with its grid of
/// values, the policies to include, and which outputs to compute.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    /// Scenario path, resolved relative to the spec file when relative.
    scenario: PathBuf,
    variable: SweepVariable,
    grid: Vec<f64>,
    policies: Vec<Policy>,
    #[serde(default = "default_outputs")]
    outputs: Vec<OutputKind>,
    #[serde(default)]
    solver: SweepSolverSettings,
    #[serde(default)]
    simulation: SweepSimSettings,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sweep grid values must be strictly increasing".into(),
            ));
        }
        if self.grid.iter().any(|&r| !(0.0..1.0).contains(&r)) {
            return Err(Error::InvalidConfig(
                "every swept utilization must lie in [0, 1)".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("sweep lists no policies".into()));
        }
        if self.outputs.is_empty() {
            return Err(Error::InvalidConfig("sweep requests no outputs".into()));
        }
        Ok(())
    }
}

struct SweepRow {
    rho: f64,
    policy: Policy,
    metric: &'static str,
    value: Option<f64>,
    bound: Option<f64>,
    sim_mean: Option<f64>,
    sim_ci: Option<f64>,
}

fn sim_lookup(
    estimates: &Option<Vec<SimulationEstimate>>,
    metric: &str,
) -> (Option<f64>, Option<f64>) {
    match estimates {
        Some(list) => list
            .iter()
            .find(|e| e.metric == metric)
            .map(|e| (Some(e.mean), Some(e.ci_half_width)))
            .unwrap_or((None, None)),
        None => (None, None),
    }
}

fn sweep_point(spec: &SweepSpec, base: &SystemParameters, rho: f64) -> Result<Vec<SweepRow>> {
    let params = match spec.variable {
        SweepVariable::RhoViaLambda => scenario::with_rho(base, rho)?,
    };
    let analysis = spec.outputs.contains(&OutputKind::Analysis);
    let simulation = spec.outputs.contains(&OutputKind::Simulation);
    let mut rows = Vec::new();
    for &policy in &[Policy::GloballyGated, Policy::Exhaustive] {
        if !spec.policies.contains(&policy) {
            continue;
        }
        let estimates = if simulation {
            let mut config = SimulationConfig::new(params.clone(), policy);
            config.seed = spec.simulation.seed;
            config.replications = spec.simulation.replications;
            config.measured_batches = spec.simulation.measured_batches;
            if let Some(w) = spec.simulation.warmup_batches {
                config.warmup_batches = w;
            }
            Some(simulate(&config)?)
        } else {
            None
        };
        match policy {
            Policy::GloballyGated => {
                let (esb, ed) = if analysis {
                    (
                        Some(gg::gg_mean_sojourn(&params)),
                        Some(gg::gg_mean_delivery(&params)),
                    )
                } else {
                    (None, None)
                };
                for (metric, value) in [("esb", esb), ("ed", ed)] {
                    let (sim_mean, sim_ci) = sim_lookup(&estimates, metric);
                    rows.push(SweepRow {
                        rho,
                        policy,
                        metric,
                        value,
                        bound: None,
                        sim_mean,
                        sim_ci,
                    });
                }
            }
            Policy::Exhaustive => {
                let (el, esb, ed) = if analysis {
                    let (grid, _) = solve_fk(&params, spec.solver.grid, spec.solver.delta)?;
                    let (esb, esb_bound) = exhaustive_mean_sojourn(&params, &grid)?;
                    let (ed, ed_bound) = exhaustive_mean_delivery(&params, &grid)?;
                    (
                        Some(expected_waiting_customers(&params)),
                        Some((esb, esb_bound)),
                        Some((ed, ed_bound)),
                    )
                } else {
                    (None, None, None)
                };
                let (sim_mean, sim_ci) = sim_lookup(&estimates, "el");
                rows.push(SweepRow {
                    rho,
                    policy,
                    metric: "el",
                    value: el,
                    bound: None,
                    sim_mean,
                    sim_ci,
                });
                for (metric, pair) in [("esb", esb), ("ed", ed)] {
                    let (sim_mean, sim_ci) = sim_lookup(&estimates, metric);
                    rows.push(SweepRow {
                        rho,
                        policy,
                        metric,
                        value: pair.map(|p| p.0),
                        bound: pair.map(|p| p.1),
                        sim_mean,
                        sim_ci,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn cmd_sweep(spec_path: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| {
        Error::InvalidConfig(format!("cannot read sweep spec {}: {e}", spec_path.display()))
    })?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("sweep spec JSON: {e}")))?;
    spec.validate()?;
    let scenario_path = if spec.scenario.is_relative() {
        spec_path
            .parent()
            .map(|dir| dir.join(&spec.scenario))
            .unwrap_or_else(|| spec.scenario.clone())
    } else {
        spec.scenario.clone()
    };
    let base = scenario::load_scenario(&scenario_path)?;

    let points: Vec<Result<Vec<SweepRow>>> = spec
        .grid
        .par_iter()
        .map(|&rho| sweep_point(&spec, &base, rho))
        .collect();

    let mut csv = String::from("rho,policy,metric,value,bound,sim_mean,sim_ci\n");
    for point in points {
        for row in point? {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig9(row.rho),
                row.policy,
                row.metric,
                opt_sig9(row.value),
                opt_sig9(row.bound),
                opt_sig9(row.sim_mean),
                opt_sig9(row.sim_ci),
            ));
        }
    }
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| {
            Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{csv}"),
    }
    Ok(())
}

struct Check {
    name: &'static str,
    analytic: f64,
    sim_mean: f64,
    tolerance: f64,
}

impl Check {
    fn passes(&self) -> bool {
        (self.analytic - self.sim_mean).abs() <= self.tolerance
    }
}

fn cmd_validate(path: &Path, solver: SolverArgs, sim: SimArgs) -> Result<ExitCode> {
    let params = scenario::load_scenario(path)?;
    let mut checks = Vec::new();

    let gg_estimates = simulate(&sim.config(&params, Policy::GloballyGated))?;
    let stats = gg::cycle_moments(&params);
    let by_name = |list: &[SimulationEstimate], name: &str| -> SimulationEstimate {
        list.iter().find(|e| e.metric == name).expect("metric present").clone()
    };
    for (name, analytic, metric) in [
        ("gg_esb", gg::gg_mean_sojourn(&params), "esb"),
        ("gg_ed", gg::gg_mean_delivery(&params), "ed"),
        ("gg_cycle_mean", stats.mean_c, "cycle_mean"),
        ("gg_cycle_second_moment", stats.second_moment_c, "cycle_second_moment"),
        ("gg_work_fraction", params.rho(), "work_fraction"),
    ] {
        let est = by_name(&gg_estimates, metric);
        checks.push(Check {
            name,
            analytic,
            sim_mean: est.mean,
            tolerance: 3.0 * est.ci_half_width,
        });
    }

    let ex_estimates = simulate(&sim.config(&params, Policy::Exhaustive))?;
    let (grid, _) = solve_fk(&params, solver.grid, solver.delta)?;
    let (esb, esb_bound) = exhaustive_mean_sojourn(&params, &grid)?;
    let (ed, ed_bound) = exhaustive_mean_delivery(&params, &grid)?;
    for (name, analytic, bound, metric) in [
        ("exhaustive_el", expected_waiting_customers(&params), 0.0, "el"),
        ("exhaustive_esb", esb, esb_bound, "esb"),
        ("exhaustive_ed", ed, ed_bound, "ed"),
        ("exhaustive_cycle_mean", params.mean_cycle(), 0.0, "cycle_mean"),
        ("exhaustive_work_fraction", params.rho(), 0.0, "work_fraction"),
    ] {
        let est = by_name(&ex_estimates, metric);
        checks.push(Check {
            name,
            analytic,
            sim_mean: est.mean,
            tolerance: (3.0 * est.ci_half_width).max(bound),
        });
    }

    let mut all_pass = true;
    for check in &checks {
        let status = if check.passes() { "pass" } else { "fail" };
        all_pass &= check.passes();
        println!(
            "check={} analytic={} sim={} tol={} status={}",
            check.name,
            sig9(check.analytic),
            sig9(check.sim_mean),
            sig9(check.tolerance),
            status
        );
    }
    println!("validate={}", if all_pass { "pass" } else { "fail" });
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
