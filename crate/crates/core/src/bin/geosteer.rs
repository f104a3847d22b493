use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::{baseline, solve_dsdp_cached};
use geosteer::harness::export::{
    checkpoint_path, curves_csv, parse_report_csv, read_checkpoint, write_checkpoint, write_comparison, write_file,
};
use geosteer::harness::plot::plot_trajectories;
use geosteer::harness::{compare, train_multi_seed, Contender, ExperimentConfig};
use geosteer::{Error, Result};

#[derive(Parser)]
#[command(name = "geosteer", version, about = "Geosteering decision experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learned agent for every seed and write checkpoints and curves.
    Train(Common),
    /// Evaluate one agent on fresh realizations.
    Evaluate(Common),
    /// Evaluate several agents on one paired realization sequence.
    Compare(Common),
    /// Solve and write the dynamic-programming tables.
    DsdpSolve(Common),
    /// Draw trajectories of the given agents on one evaluation realization.
    Plot(PlotArgs),
    /// Render report.csv in the output directory as a markdown table.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// ex1 or ex2
    #[arg(long)]
    env: Option<EnvId>,
    /// Agent, or a comma-separated list for compare and plot.
    #[arg(long, value_delimiter = ',')]
    agent: Vec<AgentKind>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    eval_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eval_seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    /// Evaluation realization to draw.
    #[arg(long)]
    realization: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(env) = self.env {
            c.env.id = env;
        }
        if let Some(&kind) = self.agent.first() {
            c.agent.kind = kind;
        }
        if !self.seeds.is_empty() {
            c.harness.seeds = self.seeds.clone();
        }
        if let Some(n) = self.episodes {
            c.harness.episodes = n;
        }
        if let Some(n) = self.eval_n {
            c.harness.eval_realizations = n;
        }
        if let Some(o) = &self.out {
            c.harness.out_dir = o.clone();
        }
        if let Some(s) = self.eval_seed {
            c.harness.eval_seed = s;
        }
        if c.harness.cache_dir.is_none() {
            c.harness.cache_dir = Some(c.harness.out_dir.join("cache"));
        }
        c.validate()?;
        Ok(c)
    }

    fn agents(&self, config: &ExperimentConfig) -> Vec<AgentKind> {
        if self.agent.is_empty() {
            vec![config.agent.kind]
        } else {
            self.agent.clone()
        }
    }
}

fn agent_dir(config: &ExperimentConfig, kind: AgentKind) -> PathBuf {
    config.harness.out_dir.join(kind.as_str())
}

fn for_kind(config: &ExperimentConfig, kind: AgentKind) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    c.agent.kind = kind;
    c.validate()?;
    Ok(c)
}

fn train(config: &ExperimentConfig) -> Result<()> {
    let dir = agent_dir(config, config.agent.kind);
    let start = Instant::now();
    let outputs = train_multi_seed(config)?;
    let elapsed = start.elapsed().as_secs_f64();
    for o in &outputs {
        if let Some(ck) = o.agent.checkpoint() {
            let p = write_checkpoint(&dir, ck)?;
            log::info!("wrote {}", p.display());
        }
    }
    write_file(&dir.join("curves.csv"), curves_csv(&outputs))?;
    let timing = serde_json::json!({
        "agent": config.agent.kind.as_str(),
        "seeds": config.harness.seeds.len(),
        "episodes": config.harness.episodes,
        "total_s": elapsed,
        "per_seed_s": elapsed / outputs.len() as f64,
    });
    write_file(&dir.join("training_timing.json"), format!("{timing:#}\n"))?;
    for o in &outputs {
        if let Some(rise) = o.curve.contact_rise() {
            log::info!("seed {}: contact rise {rise:.1} percentage points", o.seed);
        }
    }
    Ok(())
}

/// Learned agents load checkpoints written by `train`; the tabular agent
/// has no file format and is trained in-process.
fn contender(config: &ExperimentConfig, kind: AgentKind) -> Result<Contender> {
    let c = for_kind(config, kind)?;
    match kind {
        AgentKind::Greedy | AgentKind::Dsdp => baseline(&c, kind),
        AgentKind::QTable => Contender::from_training(&c, train_multi_seed(&c)?),
        AgentKind::DqnSensor | AgentKind::DqnPosterior => {
            let dir = agent_dir(&c, kind);
            let checkpoints = c
                .harness
                .seeds
                .iter()
                .map(|&s| {
                    let p = checkpoint_path(&dir, s);
                    if !p.exists() {
                        return Err(Error::Usage(format!(
                            "missing {}; run `geosteer train --agent {}` first",
                            p.display(),
                            kind.as_str()
                        )));
                    }
                    let ck = read_checkpoint(&p)?;
                    if ck.meta.env != c.env.id {
                        return Err(Error::Usage(format!("{} was trained on env {}", p.display(), ck.meta.env.as_str())));
                    }
                    Ok(ck)
                })
                .collect::<Result<Vec<_>>>()?;
            Contender::from_checkpoints(&c, checkpoints)
        }
    }
}

fn run_compare(config: &ExperimentConfig, kinds: &[AgentKind], dir: &Path) -> Result<()> {
    let contenders = kinds
        .iter()
        .map(|&k| contender(config, k))
        .collect::<Result<Vec<_>>>()?;
    let table = compare(&contenders, config, config.harness.eval_seed)?;
    for p in write_comparison(dir, &table)? {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn dsdp_tables(config: &ExperimentConfig) -> Result<()> {
    if config.env.id != EnvId::Faulted {
        return Err(Error::Usage("dsdp-solve needs --env ex2".into()));
    }
    let dir = agent_dir(config, AgentKind::Dsdp);
    for &v in &config.env.v_prod_eval {
        let policy = solve_dsdp_cached(config, v, config.harness.cache_dir.as_deref())?;
        let p = dir.join(format!("policy_v{v}.csv"));
        write_file(&p, policy.to_text())?;
        log::info!("wrote {} (root value {:.4})", p.display(), policy.root_value());
    }
    Ok(())
}

fn plot(config: &ExperimentConfig, kinds: &[AgentKind], k: usize) -> Result<()> {
    let contenders = kinds
        .iter()
        .map(|&kind| contender(config, kind))
        .collect::<Result<Vec<_>>>()?;
    for (name, svg) in plot_trajectories(config, &contenders, config.harness.eval_seed, k)? {
        let p = config.harness.out_dir.join(format!("{name}.svg"));
        write_file(&p, svg)?;
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn report(config: &ExperimentConfig) -> Result<()> {
    let src = config.harness.out_dir.join("report.csv");
    let text = std::fs::read_to_string(&src).map_err(|e| Error::io(&src, e))?;
    let rows = parse_report_csv(&text)?;
    let mut md = String::from("| method | setting | seeds | realizations | reward | contact % | high quality % | operating cost |\n");
    md.push_str("|---|---|---|---|---|---|---|---|\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
    for r in rows {
        md.push_str(&format!(
            "| {} | {} | {} | {} | {:.2} | {:.2} | {} | {} |\n",
            r.method,
            r.setting,
            r.n_seeds,
            r.n_realizations,
            r.reward,
            r.contact,
            opt(r.high_quality),
            opt(r.operating_cost)
        ));
    }
    let dst = config.harness.out_dir.join("report.md");
    write_file(&dst, md)?;
    log::info!("wrote {}", dst.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(&a.load()?),
        Command::Evaluate(a) => {
            let c = a.load()?;
            let kind = c.agent.kind;
            run_compare(&c, &[kind], &agent_dir(&c, kind))
        }
        Command::Compare(a) => {
            let c = a.load()?;
            let kinds = a.agents(&c);
            run_compare(&c, &kinds, &c.harness.out_dir)
        }
        Command::DsdpSolve(a) => dsdp_tables(&a.load()?),
        Command::Plot(p) => {
            let c = p.common.load()?;
            let kinds = p.common.agents(&c);
            plot(&c, &kinds, p.realization.unwrap_or(c.harness.plot_realization))
        }
        Command::Report(a) => report(&a.load()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOSTEER_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
