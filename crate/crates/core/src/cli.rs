//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime or numerical failure, 2 when the
//! scenario or the arguments fail validation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compare::planner_optimal_chain;
use crate::equilibrium::{equilibrium_drawdowns, equilibrium_exit_schedule};
use crate::error::Error;
use crate::penalty::{penalty_policy, simulate_penalty, PenaltyConfig};
use crate::planner::{planner_drawdown, AllianceChain};
use crate::report::{fmt_sig, join_tables, Table};
use crate::scan::{scan_grid, scan_svg, scan_table};
use crate::scenario::ScenarioConfig;
use crate::scope::{solve_equilibrium_scopes, solve_planner_scopes, Alliance};
use crate::sim::{simulate_schedule, SimOutcome};
use crate::welfare::{chain_welfare, Staged, WelfareReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Agreement band for the analytic-versus-simulated check.
const AGREE_SE: f64 = 3.0;

#[derive(Debug, Parser)]
#[command(
    name = "teamsearch",
    version,
    about = "Team search with drawdown stopping: equilibrium, planner and Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Eq,
    Sp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Eq,
    Sp,
    Penalty,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a scenario, then echo it in normalized form.
    Validate { config: PathBuf },
    /// Scope profile and drawdowns of the full team.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "eq")]
        mode: Mode,
    },
    /// Exit waves or planner chain with closed-form welfare.
    Schedule {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "eq")]
        mode: Mode,
    },
    /// Monte Carlo check against the closed forms.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "eq")]
        mode: SimMode,
        /// Overrides `sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Fail when more than 1% of paths hit the horizon guard.
        #[arg(long)]
        strict: bool,
        /// Write per-path samples to this file.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Equilibrium and planner exit patterns over a (beta2, beta3) grid.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Also render the equilibrium regions as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidBounds { .. } | Error::InvalidSimConfig(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_RUNTIME,
    }
}

/// Run the CLI with explicit arguments and output streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> crate::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(path: &Path) -> crate::Result<ScenarioConfig> {
    ScenarioConfig::from_file(path)
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> crate::Result<i32> {
    match cmd {
        Command::Validate { config } => {
            let s = load(&config)?;
            stdout.write_all(s.to_toml().as_bytes())?;
        }
        Command::Solve { common, mode } => {
            let s = load(&common.config)?;
            emit(&common.out, &solve_table(&s, mode)?.to_csv(), stdout)?;
        }
        Command::Schedule { common, mode } => {
            let s = load(&common.config)?;
            emit(&common.out, &schedule_tables(&s, mode)?, stdout)?;
        }
        Command::Simulate {
            common,
            mode,
            seed,
            strict,
            dump_samples,
        } => {
            let s = load(&common.config)?;
            let mut cfg = s.sim_config();
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.strict |= strict;
            let (table, outcome) = simulate_table(&s, mode, &cfg)?;
            for w in &outcome.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if let Some(p) = dump_samples {
                outcome.dump_samples(&p)?;
            }
            let failed = table
                .rows
                .iter()
                .filter(|r| r.last().map(String::as_str) == Some("FAIL"))
                .count();
            if failed > 0 {
                let _ = writeln!(
                    stderr,
                    "warning: {failed} quantities outside {AGREE_SE} standard errors"
                );
            }
            emit(&common.out, &table.to_csv(), stdout)?;
        }
        Command::Scan { common, svg } => {
            let s = load(&common.config)?;
            let template = s
                .template
                .as_ref()
                .filter(|_| s.scan.is_some())
                .ok_or_else(|| Error::Config("scan needs a [scan] section and a [well_ordered] template".into()))?;
            let grid = s.scan_section();
            let cells = scan_grid(&template.cost, template.betas[0], &grid, &s.scope_bounds);
            emit(&common.out, &scan_table(&cells).to_csv(), stdout)?;
            if let Some(p) = svg {
                std::fs::write(p, scan_svg(&cells, &grid))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn solve_table(s: &ScenarioConfig, mode: Mode) -> crate::Result<Table> {
    let costs = &s.agents;
    let full = Alliance::full(costs.len());
    let mut t = Table::new(["agent", "sigma", "cost_rate", "drawdown"]);
    match mode {
        Mode::Eq => {
            let profile = solve_equilibrium_scopes(&full, costs, &s.scope_bounds)?;
            let dd = equilibrium_drawdowns(&profile, costs)?;
            for ((a, sigma), d) in profile.iter().zip(&dd.drawdowns) {
                t.push(vec![
                    (a + 1).to_string(),
                    fmt_sig(sigma),
                    fmt_sig(costs[a].cost(sigma)?),
                    fmt_sig(*d),
                ]);
            }
        }
        Mode::Sp => {
            let profile = solve_planner_scopes(&full, costs, &s.scope_bounds)?;
            let d = planner_drawdown(&full, &Alliance::empty(), costs, &s.scope_bounds)?;
            for (a, sigma) in profile.iter() {
                t.push(vec![
                    (a + 1).to_string(),
                    fmt_sig(sigma),
                    fmt_sig(costs[a].cost(sigma)?),
                    fmt_sig(d),
                ]);
            }
        }
    }
    Ok(t)
}

fn welfare_table(w: &WelfareReport) -> Table {
    let mut t = Table::new(["agent", "expected_payoff"]);
    for (a, v) in w.per_agent.iter().enumerate() {
        t.push(vec![(a + 1).to_string(), fmt_sig(*v)]);
    }
    t.push(vec!["total".into(), fmt_sig(w.total)]);
    t
}

fn stage_table<S: Staged + ?Sized>(plan: &S) -> Table {
    let mut t = Table::new(["wave", "exiting", "alliance", "total_scope", "drawdown"]);
    for (k, st) in plan.stages().iter().enumerate() {
        t.push(vec![
            (k + 1).to_string(),
            st.exiting.label(),
            st.scopes.alliance.label(),
            fmt_sig(st.scopes.total),
            fmt_sig(st.stop_gap),
        ]);
    }
    t
}

fn schedule_tables(s: &ScenarioConfig, mode: Mode) -> crate::Result<String> {
    let costs = &s.agents;
    let tables = match mode {
        Mode::Eq => {
            let schedule = equilibrium_exit_schedule(costs, &s.scope_bounds)?;
            vec![stage_table(&schedule), welfare_table(&chain_welfare(&schedule, costs)?)]
        }
        Mode::Sp => {
            let (chain, trace) = planner_optimal_chain(costs, &s.scope_bounds)?;
            let mut tables = vec![stage_table(&chain), welfare_table(&chain_welfare(&chain, costs)?)];
            if let Some(trace) = trace {
                let mut t = Table::new(["step", "alliance", "drawdown"]);
                for (k, st) in trace.iter().enumerate() {
                    t.push(vec![
                        format!("L{}", k + 1),
                        Alliance::suffix(st.start, costs.len()).label(),
                        fmt_sig(st.drawdown),
                    ]);
                }
                tables.push(t);
            }
            tables
        }
    };
    Ok(join_tables(&tables))
}

fn agree(analytic: f64, mc: f64, se: f64) -> &'static str {
    let ok = if se > 0.0 {
        (mc - analytic).abs() <= AGREE_SE * se
    } else {
        (mc - analytic).abs() <= 1e-12 * analytic.abs().max(1.0)
    };
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn push_check(t: &mut Table, name: String, analytic: f64, mc: f64, se: f64) {
    t.push(vec![
        name,
        fmt_sig(analytic),
        fmt_sig(mc),
        fmt_sig(se),
        agree(analytic, mc, se).into(),
    ]);
}

fn schedule_checks<S: Staged + ?Sized>(plan: &S, welfare: &WelfareReport, out: &SimOutcome) -> Table {
    let mut t = Table::new(["quantity", "analytic", "monte_carlo", "std_error", "agreement"]);
    for a in 0..out.team_size {
        push_check(
            &mut t,
            format!("payoff_{}", a + 1),
            welfare.per_agent[a],
            out.mean_payoff[a],
            out.payoff_se[a],
        );
    }
    push_check(&mut t, "total".into(), welfare.total, out.mean_total, out.total_se);
    let mut tau = 0.0;
    for (k, (st, w)) in plan.stages().iter().zip(&out.waves).enumerate() {
        tau += welfare.phases[k].expected_duration;
        push_check(&mut t, format!("tau_wave_{}", k + 1), tau, w.mean_tau, w.tau_se);
        push_check(&mut t, format!("M_wave_{}", k + 1), st.stop_gap, w.mean_max, w.max_se);
    }
    t
}

fn simulate_table(
    s: &ScenarioConfig,
    mode: SimMode,
    cfg: &crate::sim::SimConfig,
) -> crate::Result<(Table, SimOutcome)> {
    let costs = &s.agents;
    match mode {
        SimMode::Eq => {
            let schedule = equilibrium_exit_schedule(costs, &s.scope_bounds)?;
            let welfare = chain_welfare(&schedule, costs)?;
            let out = simulate_schedule(&schedule, costs, cfg)?;
            Ok((schedule_checks(&schedule, &welfare, &out), out))
        }
        SimMode::Sp => {
            let (chain, _): (AllianceChain, _) = planner_optimal_chain(costs, &s.scope_bounds)?;
            let welfare = chain_welfare(&chain, costs)?;
            let out = simulate_schedule(&chain, costs, cfg)?;
            Ok((schedule_checks(&chain, &welfare, &out), out))
        }
        SimMode::Penalty => {
            let alpha = s
                .penalty
                .ok_or_else(|| Error::Config("--mode penalty needs a [penalty] section".into()))?
                .alpha;
            if costs.len() != 2 {
                return Err(Error::Config(format!(
                    "--mode penalty needs exactly two agents, got {}",
                    costs.len()
                )));
            }
            let policy = penalty_policy(&PenaltyConfig::new(alpha, costs, s.scope_bounds)?)?;
            let analytic = policy.expected_payoffs(costs)?;
            let out = simulate_penalty(&policy, costs, cfg)?;
            let mut t = Table::new(["quantity", "analytic", "monte_carlo", "std_error", "agreement"]);
            for (a, &value) in analytic.iter().enumerate() {
                push_check(
                    &mut t,
                    format!("payoff_{}", a + 1),
                    value,
                    out.mean_payoff[a],
                    out.payoff_se[a],
                );
            }
            push_check(
                &mut t,
                "total".into(),
                analytic[0] + analytic[1],
                out.mean_total,
                out.total_se,
            );
            let w = &out.waves[0];
            let s_t = policy.team_scopes.total;
            push_check(
                &mut t,
                "tau_leader".into(),
                (policy.leader_drawdown / s_t).powi(2),
                w.mean_tau,
                w.tau_se,
            );
            push_check(&mut t, "M_leader".into(), policy.leader_drawdown, w.mean_max, w.max_se);
            if let Some(k) = out.continued {
                let p = policy.continuation_probability();
                let n = out.n_paths as f64;
                let freq = k as f64 / n;
                push_check(
                    &mut t,
                    "continuation_freq".into(),
                    p,
                    freq,
                    (freq * (1.0 - freq) / n).sqrt(),
                );
            }
            t.push(vec![
                "threshold".into(),
                fmt_sig(policy.threshold),
                String::new(),
                String::new(),
                String::new(),
            ]);
            Ok((t, out))
        }
    }
}
