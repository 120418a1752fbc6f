//! Seeded episode batches and their statistics.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use plite_core::baselines::{QmdpPolicy, QmdpSolution, RandomPolicy, QMDP_TOLERANCE};
use plite_core::planners::{InternalViPolicy, OraclePolicy, DEFAULT_NODE_CAP};
use plite_core::{
    initial_belief, run_agent_loop, AugmentedState, BeliefConfig, PlannerConfig, PomdpLite, Policy, UctPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum PlannerKind {
    /// UCT on the internal-reward MDP.
    PomdpLite,
    /// The same planner with β = 0.
    MeanMdp,
    /// Exact value iteration on the internal-reward MDP.
    PomdpLiteVi,
    Qmdp,
    Random,
    Oracle { horizon: usize },
}

impl PlannerKind {
    pub fn parse(name: &str, horizon: usize) -> Result<Self> {
        match name {
            "pomdplite" => Ok(PlannerKind::PomdpLite),
            "meanmdp" => Ok(PlannerKind::MeanMdp),
            "pomdplite-vi" => Ok(PlannerKind::PomdpLiteVi),
            "qmdp" => Ok(PlannerKind::Qmdp),
            "random" => Ok(PlannerKind::Random),
            "oracle" => Ok(PlannerKind::Oracle { horizon }),
            other => Err(HarnessError::Config(format!(
                "unknown planner `{other}` (expected pomdplite, meanmdp, pomdplite-vi, qmdp, random or oracle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::PomdpLite => "pomdplite",
            PlannerKind::MeanMdp => "meanmdp",
            PlannerKind::PomdpLiteVi => "pomdplite-vi",
            PlannerKind::Qmdp => "qmdp",
            PlannerKind::Random => "random",
            PlannerKind::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub planner: PlannerKind,
    pub planner_cfg: PlannerConfig,
    pub episodes: usize,
    pub master_seed: u64,
    /// `None` uses the domain default.
    pub max_steps: Option<usize>,
    pub belief: BeliefConfig,
}

impl RunConfig {
    pub fn new(planner: PlannerKind, planner_cfg: PlannerConfig, episodes: usize, master_seed: u64) -> Self {
        RunConfig {
            planner,
            planner_cfg,
            episodes,
            master_seed,
            max_steps: None,
            belief: BeliefConfig::default(),
        }
    }

    /// β actually used by the planner.
    pub fn effective_beta(&self) -> f64 {
        match self.planner {
            PlannerKind::PomdpLite | PlannerKind::PomdpLiteVi => self.planner_cfg.beta,
            _ => 0.0,
        }
    }
}

/// One CSV row per episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub theta_true: String,
    pub steps: usize,
    #[serde(rename = "return")]
    pub discounted_return: f64,
    pub undiscounted_return: f64,
    pub ms_per_step: f64,
    pub terminated: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub domain: String,
    pub planner: String,
    pub beta: f64,
    pub episodes: usize,
    pub failures: usize,
    pub mean_return: f64,
    /// Sample standard deviation over √episodes.
    pub stderr: f64,
    /// Fraction of episodes that reached a terminal state.
    pub success_rate: f64,
    pub mean_steps: f64,
    pub total_wall_ms: f64,
}

/// Mean and standard error (n − 1 denominator); stderr is 0 for one value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates the successful episodes of a run.
pub fn summarize(domain: &str, planner: &str, beta: f64, rows: &[EpisodeRow], total_wall_ms: f64) -> Result<RunSummary> {
    if rows.is_empty() {
        return Err(HarnessError::Config("cannot summarize zero episodes".into()));
    }
    let ok: Vec<&EpisodeRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let returns: Vec<f64> = ok.iter().map(|r| r.discounted_return).collect();
    let (mean_return, stderr) = mean_stderr(&returns);
    let count = ok.len().max(1) as f64;
    Ok(RunSummary {
        domain: domain.to_string(),
        planner: planner.to_string(),
        beta,
        episodes: rows.len(),
        failures: rows.len() - ok.len(),
        mean_return,
        stderr,
        success_rate: ok.iter().filter(|r| r.terminated).count() as f64 / count,
        mean_steps: ok.iter().map(|r| r.steps as f64).sum::<f64>() / count,
        total_wall_ms,
    })
}

/// Per-episode seed derived from the master seed.
pub fn episode_seed(master: u64, episode: usize) -> u64 {
    let mut z = master ^ (episode as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub rows: Vec<EpisodeRow>,
}

fn make_policy<M: PomdpLite + 'static>(
    cfg: &RunConfig,
    qmdp: &Option<Arc<QmdpSolution<M::X, M::Theta, M::Scalar>>>,
) -> Box<dyn Policy<M>> {
    match &cfg.planner {
        PlannerKind::PomdpLite => Box::new(UctPolicy::new(cfg.planner_cfg.clone())),
        PlannerKind::MeanMdp => Box::new(UctPolicy::new(cfg.planner_cfg.mean_mdp())),
        PlannerKind::PomdpLiteVi => Box::new(InternalViPolicy {
            cfg: cfg.planner_cfg.clone(),
        }),
        PlannerKind::Qmdp => Box::new(QmdpPolicy {
            solution: qmdp.clone().expect("solved before the episodes start"),
        }),
        PlannerKind::Random => Box::new(RandomPolicy),
        PlannerKind::Oracle { horizon } => Box::new(OraclePolicy {
            horizon: *horizon,
            node_cap: DEFAULT_NODE_CAP,
        }),
    }
}

/// Runs `cfg.episodes` episodes, each against a hidden value drawn from
/// the prior with its own derived seed. Episodes run in parallel; results
/// come back in episode order and do not depend on scheduling.
pub fn run_episodes<M: PomdpLite + 'static>(model: &M, domain: &str, default_max_steps: usize, cfg: &RunConfig) -> Result<RunOutput> {
    if cfg.episodes == 0 {
        return Err(HarnessError::Config("episodes must be at least 1".into()));
    }
    cfg.planner_cfg.validate()?;
    let max_steps = cfg.max_steps.unwrap_or(default_max_steps);
    if max_steps == 0 {
        return Err(HarnessError::Config("max steps must be at least 1".into()));
    }
    let started = Instant::now();
    let qmdp = match cfg.planner {
        PlannerKind::Qmdp => {
            let root = AugmentedState::start(model.initial_x());
            Some(Arc::new(QmdpSolution::solve(
                model,
                &[root],
                QMDP_TOLERANCE,
                cfg.planner_cfg.vi_max_iters,
                cfg.planner_cfg.vi_state_cap,
            )?))
        }
        _ => None,
    };
    let rows: Vec<EpisodeRow> = (0..cfg.episodes)
        .into_par_iter()
        .map(|episode| {
            let seed = episode_seed(cfg.master_seed, episode);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = model.sample_prior(&mut rng);
            let theta_name = model.theta_name(&theta);
            let failed = |error: String| EpisodeRow {
                episode,
                seed,
                theta_true: theta_name.clone(),
                steps: 0,
                discounted_return: 0.0,
                undiscounted_return: 0.0,
                ms_per_step: 0.0,
                terminated: false,
                error: Some(error),
            };
            let b0 = match initial_belief(model, &cfg.belief, &mut rng) {
                Ok(b) => b,
                Err(e) => return failed(e.to_string()),
            };
            let mut policy = make_policy::<M>(cfg, &qmdp);
            match run_agent_loop(model, &theta, b0, policy.as_mut(), max_steps, &cfg.belief, &mut rng) {
                Ok(record) => EpisodeRow {
                    episode,
                    seed,
                    theta_true: theta_name.clone(),
                    steps: record.steps.len(),
                    discounted_return: record.discounted_return,
                    undiscounted_return: record.undiscounted_return,
                    ms_per_step: record.wall_ms_per_step,
                    terminated: record.terminated,
                    error: None,
                },
                Err(failure) => EpisodeRow {
                    steps: failure.record.steps.len(),
                    discounted_return: failure.record.discounted_return,
                    undiscounted_return: failure.record.undiscounted_return,
                    ms_per_step: failure.record.wall_ms_per_step,
                    ..failed(failure.to_string())
                },
            }
        })
        .collect();
    let total_wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    let summary = summarize(domain, cfg.planner.name(), cfg.effective_beta(), &rows, total_wall_ms)?;
    Ok(RunOutput { summary, rows })
}

/// Writes the per-episode CSV and the JSON summary.
pub fn write_results(summary: &RunSummary, rows: &[EpisodeRow], csv_path: Option<&Path>, json_path: Option<&Path>) -> Result<()> {
    if let Some(path) = csv_path {
        let mut writer = csv::Writer::from_path(path)?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    if let Some(path) = json_path {
        std::fs::write(path, serde_json::to_string_pretty(summary)?)?;
    }
    Ok(())
}

/// Runs every β in `grid` and returns the best one (highest mean, lowest β
/// on ties) with all summaries.
pub fn tune_beta<M: PomdpLite + 'static>(
    model: &M,
    domain: &str,
    default_max_steps: usize,
    grid: &[f64],
    cfg: &RunConfig,
) -> Result<(f64, Vec<RunSummary>)> {
    let mut summaries = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &beta in grid {
        let mut run = cfg.clone();
        run.planner_cfg.beta = beta;
        let out = run_episodes(model, domain, default_max_steps, &run)?;
        let mean = out.summary.mean_return;
        match best {
            Some((_, m)) if mean <= m => {}
            _ => best = Some((beta, mean)),
        }
        summaries.push(out.summary);
    }
    let (beta, _) = best.ok_or_else(|| HarnessError::Config("empty β grid".into()))?;
    Ok((beta, summaries))
}

/// Standard β grid.
pub const BETA_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
