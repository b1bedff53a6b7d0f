//! Experiment driver: run single episodes, compare policies across
//! seeds, sweep the objective weight, and check the exact small-instance
//! solver against the greedy policy.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uavsim::domain::{build_scenario, Scenario, ScenarioConfig};
use uavsim::mdp::{
    self, EvalMode, SmallMdpInstance,
};
use uavsim::report::{
    compare, export_log_csv, export_log_ndjson, export_summary_csv, export_summary_json,
    round_sig6, summarize,
};
use uavsim::scheduler::{Policy, PolicyKind, SearchKind};
use uavsim::sim::{run_episode, World};
use uavsim::Scalar;

#[derive(Parser)]
#[command(name = "uavsim", about = "Multi-UAV surveillance scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Proposed,
    Comp1,
    Comp2,
    Comp3,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchName {
    Exhaustive,
    Local,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML; defaults to the built-in scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the scenario's objective weight.
    #[arg(long)]
    epsilon: Option<Scalar>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded episode and export its log and summary.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        policy: PolicyName,
        #[arg(long, value_enum, default_value = "exhaustive")]
        search: SearchName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run policies x seeds and report trend orderings.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated policies; defaults to all four.
        #[arg(long, value_delimiter = ',', value_enum)]
        policies: Option<Vec<PolicyName>>,
        /// Seed range `a..b` (end exclusive).
        #[arg(long, default_value = "0..20")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Exit with code 2 when any trend ordering fails.
        #[arg(long)]
        assert: bool,
    },
    /// Run the greedy policy for each objective weight in a list.
    SweepEpsilon {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated weights in [0, 1].
        #[arg(long, value_delimiter = ',')]
        values: Vec<Scalar>,
        #[arg(long, default_value = "0..5")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the scenario's small quantized instance exactly and report
    /// the greedy policy's gap.
    MdpCheck {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, String> {
    let config = match &args.scenario {
        Some(path) => ScenarioConfig::from_path(path).map_err(|e| e.to_string())?,
        None => ScenarioConfig::default(),
    };
    let mut scenario = build_scenario(&config).map_err(|e| e.to_string())?;
    if let Some(eps) = args.epsilon {
        if !(0.0..=1.0).contains(&eps) {
            return Err(format!("epsilon must lie in [0, 1], got {eps}"));
        }
        scenario.epsilon = eps;
    }
    Ok(scenario)
}

fn make_policy(name: PolicyName, epsilon: Scalar, search: SearchKind) -> Policy {
    let kind = match name {
        PolicyName::Proposed => PolicyKind::Proposed { epsilon },
        PolicyName::Comp1 => PolicyKind::Comp1,
        PolicyName::Comp2 => PolicyKind::Comp2,
        PolicyName::Comp3 => PolicyKind::Comp3,
    };
    let mut p = Policy::new(kind);
    p.search = search;
    p
}

/// Parses `a..b` (end exclusive) into a seed list.
fn parse_seeds(spec: &str) -> Result<Vec<u64>, String> {
    let (a, b) = spec
        .split_once("..")
        .ok_or_else(|| format!("seed range must look like a..b, got {spec:?}"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b:?}"))?;
    if a >= b {
        return Err(format!("empty seed range {spec:?}"));
    }
    Ok((a..b).collect())
}

fn ensure_dir(path: &Path) -> Result<(), String> {
    std::fs::create_dir_all(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

fn cmd_run(
    scenario: ScenarioArgs,
    policy: PolicyName,
    search: SearchName,
    seed: u64,
    out: PathBuf,
) -> Result<(), String> {
    let scenario = load_scenario(&scenario)?;
    let search = match search {
        SearchName::Exhaustive => SearchKind::Exhaustive,
        SearchName::Local => SearchKind::Local,
    };
    let policy = make_policy(policy, scenario.epsilon, search);
    let world = World::new(scenario).map_err(|e| e.to_string())?;
    let log = run_episode(&world, &policy, seed).map_err(|e| e.to_string())?;
    ensure_dir(&out)?;
    let tag = format!("{}_{seed}", sanitize(&policy.label()));
    export_log_ndjson(&log, &out.join(format!("log_{tag}.ndjson"))).map_err(|e| e.to_string())?;
    export_log_csv(&log, &out.join(format!("log_{tag}.csv"))).map_err(|e| e.to_string())?;
    let stats = summarize(std::slice::from_ref(&log)).map_err(|e| e.to_string())?;
    export_summary_json(&stats, &out.join(format!("summary_{tag}.json")))
        .map_err(|e| e.to_string())?;
    println!(
        "episode done: policy {} seed {seed}, {} steps, system value {:.6}",
        log.policy,
        log.records.len(),
        log.system_value
    );
    Ok(())
}

fn cmd_compare(
    scenario: ScenarioArgs,
    policies: Option<Vec<PolicyName>>,
    seeds: String,
    out: PathBuf,
    assert_orderings: bool,
) -> Result<bool, String> {
    let scenario = load_scenario(&scenario)?;
    let names = policies.unwrap_or(vec![
        PolicyName::Proposed,
        PolicyName::Comp1,
        PolicyName::Comp2,
        PolicyName::Comp3,
    ]);
    let policies: Vec<Policy> = names
        .iter()
        .map(|&n| make_policy(n, scenario.epsilon, SearchKind::Exhaustive))
        .collect();
    let seeds = parse_seeds(&seeds)?;
    let table = compare(&scenario, &policies, &seeds).map_err(|e| e.to_string())?;
    ensure_dir(&out)?;
    for column in &table.columns {
        let tag = sanitize(&column.label);
        export_summary_json(&column.stats, &out.join(format!("summary_{tag}.json")))
            .map_err(|e| e.to_string())?;
        export_summary_csv(&column.stats, &out.join(format!("summary_{tag}.csv")))
            .map_err(|e| e.to_string())?;
    }
    let report = serde_json::json!({
        "scenario_digest": table.scenario_digest,
        "seeds": seeds,
        "columns": table.columns.iter().map(|c| serde_json::json!({
            "policy": c.label,
            "system_value": round_sig6(c.stats.system_value),
            "per_seed": c.per_seed,
        })).collect::<Vec<_>>(),
        "checks": table.checks,
    });
    std::fs::write(
        out.join("comparison.json"),
        serde_json::to_vec_pretty(&report).unwrap(),
    )
    .map_err(|e| format!("{}: {e}", out.join("comparison.json").display()))?;
    for c in &table.checks {
        println!(
            "{}: {} ({:.0}% of seeds)",
            c.label,
            if c.pass { "pass" } else { "FAIL" },
            c.fraction * 100.0
        );
    }
    Ok(!assert_orderings || table.all_checks_pass())
}

fn cmd_sweep(
    scenario: ScenarioArgs,
    values: Vec<Scalar>,
    seeds: String,
    out: PathBuf,
) -> Result<(), String> {
    if values.is_empty() {
        return Err("sweep needs at least one epsilon value".into());
    }
    let scenario = load_scenario(&scenario)?;
    let seeds = parse_seeds(&seeds)?;
    ensure_dir(&out)?;
    let mut rows = vec!["epsilon,system_value,final_mean_energy,final_tower_std".to_string()];
    for &eps in &values {
        if !(0.0..=1.0).contains(&eps) {
            return Err(format!("epsilon must lie in [0, 1], got {eps}"));
        }
        let policy = Policy::new(PolicyKind::Proposed { epsilon: eps });
        let table = compare(&scenario, &[policy], &seeds).map_err(|e| e.to_string())?;
        let column = &table.columns[0];
        export_summary_csv(
            &column.stats,
            &out.join(format!("summary_{}.csv", sanitize(&column.label))),
        )
        .map_err(|e| e.to_string())?;
        let n = column.per_seed.len() as Scalar;
        let energy = column.per_seed.iter().map(|m| m.final_mean_energy).sum::<Scalar>() / n;
        let std = column.per_seed.iter().map(|m| m.final_tower_std).sum::<Scalar>() / n;
        rows.push(format!(
            "{eps},{},{},{}",
            round_sig6(column.stats.system_value),
            round_sig6(energy),
            round_sig6(std)
        ));
        println!(
            "epsilon {eps}: system value {:.6}, final energy {:.1} J, tower std {:.3}",
            column.stats.system_value, energy, std
        );
    }
    let path = out.join("sweep.csv");
    std::fs::write(&path, rows.join("\n") + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_mdp_check(scenario: ScenarioArgs, out: PathBuf) -> Result<(), String> {
    let scenario = load_scenario(&scenario)?;
    let instance: SmallMdpInstance = scenario.mdp.clone().unwrap_or_default();
    instance.validate().map_err(|e| e.to_string())?;
    let solution = mdp::value_iteration(&instance).map_err(|e| e.to_string())?;
    let residual = mdp::bellman_residual(&instance, &solution);
    let s0 = mdp::index_of(&instance, &instance.initial_state());
    let v_star = solution.values[0][s0];
    let optimal = mdp::optimal_tabular(&solution);
    let v_opt = mdp::evaluate_policy(&instance, &optimal, EvalMode::Exact)
        .map_err(|e| e.to_string())?
        .value;
    let greedy = mdp::greedy_policy(&instance).map_err(|e| e.to_string())?;
    let v_greedy = mdp::evaluate_policy(&instance, &greedy, EvalMode::Exact)
        .map_err(|e| e.to_string())?
        .value;
    ensure_dir(&out)?;

    let mut rows = vec!["step,state,value,action".to_string()];
    for t in 0..instance.horizon {
        for s in 0..instance.state_count() {
            let action = solution.policy[t][s]
                .0
                .iter()
                .map(|(i, j)| format!("{i}-{j}"))
                .collect::<Vec<_>>()
                .join(" ");
            rows.push(format!("{t},{s},{},{action}", round_sig6(solution.values[t][s])));
        }
    }
    let values_path = out.join("values.csv");
    std::fs::write(&values_path, rows.join("\n") + "\n")
        .map_err(|e| format!("{}: {e}", values_path.display()))?;

    let gap = if v_star > 0.0 { v_greedy / v_star } else { 1.0 };
    let report = serde_json::json!({
        "states": instance.state_count(),
        "horizon": instance.horizon,
        "bellman_residual": residual,
        "v_star": round_sig6(v_star),
        "v_optimal_policy": round_sig6(v_opt),
        "v_greedy": round_sig6(v_greedy),
        "greedy_ratio": round_sig6(gap),
    });
    let report_path = out.join("mdp_report.json");
    std::fs::write(&report_path, serde_json::to_vec_pretty(&report).unwrap())
        .map_err(|e| format!("{}: {e}", report_path.display()))?;
    println!(
        "{} states, horizon {}: residual {residual:.2e}, V* {v_star:.6}, greedy {v_greedy:.6} ({:.1}%)",
        instance.state_count(),
        instance.horizon,
        gap * 100.0
    );
    if residual > 1e-9 {
        return Err(format!("Bellman residual {residual:.3e} exceeds 1e-9"));
    }
    if (v_opt - v_star).abs() > 1e-9 {
        return Err(format!(
            "optimal policy evaluation {v_opt} disagrees with V* {v_star}"
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            policy,
            search,
            seed,
            out,
        } => cmd_run(scenario, policy, search, seed, out).map(|()| true),
        Command::Compare {
            scenario,
            policies,
            seeds,
            out,
            assert,
        } => cmd_compare(scenario, policies, seeds, out, assert),
        Command::SweepEpsilon {
            scenario,
            values,
            seeds,
            out,
        } => cmd_sweep(scenario, values, seeds, out).map(|()| true),
        Command::MdpCheck { scenario, out } => cmd_mdp_check(scenario, out).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("trend orderings failed under --assert");
            ExitCode::from(2)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
