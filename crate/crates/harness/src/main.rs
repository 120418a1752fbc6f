use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plite_core::theory::{
    default_kappa, dirichlet_bonus_exact, dirichlet_bound, sample_complexity_experiment, DirichletCounts,
};
use plite_core::{
    initial_belief, solve_internal_vi, AugmentedState, Belief, BeliefConfig, Budget, PlannerConfig, PomdpLite,
    RootSelection,
};
use plite_harness::{
    load_model, run_episodes, write_results, DomainInfo, DomainSpec, DomainVisitor, HarnessError, PlannerKind,
    Result, RunConfig, RunOutput,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "plite", version, about = "POMDP-lite planning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded episodes of one planner on one domain.
    Run(RunArgs),
    /// Theory experiments.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Solve the internal-reward MDP of a model file and print its Q table.
    Solve(SolveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// tiger, rocksample, battleship, chain or file:<path.plite>
    #[arg(long)]
    domain: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// pomdplite, meanmdp, pomdplite-vi, qmdp, random or oracle
    #[arg(long, default_value = "pomdplite")]
    planner: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sims:N or ms:N per decision
    #[arg(long, default_value = "sims:10000")]
    budget: String,
    #[arg(long)]
    gamma: Option<f64>,
    /// Random RockSample layout (default: the standard one for 7x8 and 11x11)
    #[arg(long)]
    layout_seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Oracle lookahead
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    /// UCB exploration constant (default: the domain's return range)
    #[arg(long)]
    exploration: Option<f64>,
    /// Root decision rule: mean or visits
    #[arg(long, default_value = "mean")]
    root: String,
    /// Keep one sampled θ for a whole simulation
    #[arg(long)]
    persist_theta: bool,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Closed-form Dirichlet bonus and its bound.
    Dirichlet {
        /// Comma-separated pseudo-counts
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Known-set experiment on the deterministic chain family.
    SampleComplexity {
        #[arg(long, default_value_t = 4)]
        variants: usize,
        #[arg(long, default_value_t = 6)]
        length: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Defaults to 0.1·(1 − γ)
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        freeze: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated weights over the declared hidden values (default: prior)
    #[arg(long, value_delimiter = ',')]
    belief: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Start state name (default: the declared initial state)
    #[arg(long)]
    state: Option<String>,
}

fn parse_budget(text: &str) -> Result<Budget> {
    let bad = || HarnessError::Config(format!("budget must be sims:N or ms:N, got `{text}`"));
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    let value: u64 = value.parse().map_err(|_| bad())?;
    match kind {
        "sims" => Ok(Budget::Simulations(value as usize)),
        "ms" => Ok(Budget::TimeMs(value)),
        _ => Err(bad()),
    }
}

struct RunVisitor<'a> {
    cfg: &'a RunConfig,
}

impl DomainVisitor for RunVisitor<'_> {
    type Output = Result<RunOutput>;

    fn visit<M: PomdpLite + 'static>(self, model: &M, info: &DomainInfo) -> Result<RunOutput> {
        run_episodes(model, &info.name, info.default_max_steps, self.cfg)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let spec = DomainSpec::from_args(&args.domain, args.n, args.k, args.gamma, args.layout_seed)?;
    let mut planner_cfg = PlannerConfig::default()
        .with_beta(args.beta)
        .with_budget(parse_budget(&args.budget)?)
        .with_seed(args.seed);
    planner_cfg.uct_exploration_c = args.exploration;
    planner_cfg.root_selection = match args.root.as_str() {
        "mean" => RootSelection::MeanValue,
        "visits" => RootSelection::Visits,
        other => return Err(HarnessError::Config(format!("root must be mean or visits, got `{other}`"))),
    };
    planner_cfg.persist_theta = args.persist_theta;
    let mut cfg = RunConfig::new(
        PlannerKind::parse(&args.planner, args.horizon)?,
        planner_cfg,
        args.episodes,
        args.seed,
    );
    cfg.max_steps = args.max_steps;
    if let Some(p) = args.particles {
        cfg.belief.particles = p;
    }
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    let out = spec.with_model(RunVisitor { cfg: &cfg })??;
    write_results(&out.summary, &out.rows, args.out_csv.as_deref(), args.out_json.as_deref())?;
    let s = &out.summary;
    println!(
        "{} {} beta={} episodes={} mean={:.4} stderr={:.4} success={:.3} failures={} wall={:.1}s",
        s.domain,
        s.planner,
        s.beta,
        s.episodes,
        s.mean_return,
        s.stderr,
        s.success_rate,
        s.failures,
        s.total_wall_ms / 1000.0
    );
    if let Some(row) = out.rows.iter().find(|r| r.error.is_some()) {
        eprintln!("episode {} failed: {}", row.episode, row.error.as_deref().unwrap_or(""));
    }
    Ok(())
}

fn theory(cmd: TheoryCommand) -> Result<()> {
    match cmd {
        TheoryCommand::Dirichlet { alpha, beta } => {
            let counts = DirichletCounts::new(alpha)?;
            println!("alpha0={}", counts.alpha0());
            println!("bonus={}", dirichlet_bonus_exact(&counts, beta));
            println!("bound={}", dirichlet_bound(&counts, beta));
        }
        TheoryCommand::SampleComplexity {
            variants,
            length,
            beta,
            kappa,
            steps,
            seed,
            freeze,
            out_csv,
        } => {
            let chain = plite_core::domains::make_deterministic_chain::<f64>(variants, length)?;
            let kappa = kappa.unwrap_or_else(|| default_kappa(chain.gamma()));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prior = initial_belief(&chain, &BeliefConfig::default(), &mut rng)?;
            let report = sample_complexity_experiment(&chain, &prior, beta, kappa, steps, freeze, &mut rng)?;
            if let Some(path) = out_csv {
                let mut writer = csv::Writer::from_path(path)?;
                writer.write_record(["s", "a", "visit", "bonus", "known_at"])?;
                for row in &report.tracker.rows {
                    writer.write_record([
                        row.s.clone(),
                        row.a.clone(),
                        row.visit.to_string(),
                        row.bonus.to_string(),
                        row.known_at.map(|k| k.to_string()).unwrap_or_default(),
                    ])?;
                }
                writer.flush()?;
            }
            println!(
                "pairs visited={} known={} max_zeta={} bonus_increases={} episodes={}",
                report.tracker.visited_count(),
                report.tracker.known_count(),
                report.max_zeta(),
                report.tracker.increases.len(),
                report.episodes
            );
        }
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let b = match &args.belief {
        Some(weights) => {
            let atoms: Vec<usize> = (0..model.params().len()).collect();
            Belief::exact(atoms.into(), weights.clone())?
        }
        None => initial_belief(&model, &BeliefConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))?,
    };
    let x = match &args.state {
        Some(name) => model
            .state_index(name)
            .ok_or_else(|| HarnessError::Config(format!("unknown state `{name}`")))?,
        None => model.initial_x(),
    };
    let root = AugmentedState::start(x);
    let cfg = PlannerConfig::default().with_beta(args.beta);
    let table = solve_internal_vi(&model, &b, &root, &cfg)?;
    println!("state\tobs\taction\tq");
    for s in table.states() {
        for (a, q) in table.q_row(s).unwrap_or(&[]) {
            println!(
                "{}\t{}\t{}\t{:.9}",
                model.state_name(&s.x),
                model.observation_name(s.obs),
                model.action_name(*a),
                q
            );
        }
    }
    if let Some(a) = table.greedy(&root) {
        println!("greedy {} value {:.9}", model.action_name(a), table.v(&root).unwrap_or(0.0));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Theory(cmd) => theory(cmd),
        Command::Solve(args) => solve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
