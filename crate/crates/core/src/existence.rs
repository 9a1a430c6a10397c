//! Monte Carlo study of equilibrium existence in random games.
//!
//! Games are sampled with payoffs and weights drawn i.i.d. from one of four
//! distributions on `(0, 1]`, then probed by tracing the deterministic
//! improvement path from the all-ones profile. A converging path certifies
//! that an equilibrium exists. A cycle on the probe path proves nothing by
//! itself, so cycling instances are escalated to exhaustive enumeration when
//! the profile space is small enough; otherwise they are reported as
//! undecided. Step-cap hits are counted separately and never treated as
//! non-existence.

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    enumerate_pnes, improvement_path, GameConfig, PathOutcome, PathResult, StrategyProfile,
    DEFAULT_ENUM_CAP,
};
use crate::rng::{stream_rng, STREAM_MC};

/// Default per-probe step budget.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

fn default_mean() -> f64 {
    0.5
}
fn default_sd() -> f64 {
    0.1
}
fn default_dof() -> f64 {
    5.0
}
fn default_shift() -> f64 {
    0.5
}
fn default_beta_param() -> f64 {
    0.5
}

/// Sampling distribution for payoffs and weights, truncated to `(0, 1]` by
/// rejection. Rejection rather than clamping keeps the support continuous:
/// clamping would put atoms at the interval ends, and an atom at zero would
/// distort the positive-weight statistics that drive the long-tail test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform01,
    TruncNormal {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_sd")]
        sd: f64,
    },
    /// Student t, shifted by `shift`, truncated. Scale is the standard one.
    TruncStudentT {
        #[serde(default = "default_dof")]
        dof: f64,
        #[serde(default = "default_shift")]
        shift: f64,
    },
    Beta {
        #[serde(default = "default_beta_param")]
        alpha: f64,
        #[serde(default = "default_beta_param")]
        beta: f64,
    },
}

impl DistributionSpec {
    /// The four study distributions with their standard parameters.
    pub fn standard_set() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::Uniform01,
            DistributionSpec::TruncNormal { mean: 0.5, sd: 0.1 },
            DistributionSpec::TruncStudentT { dof: 5.0, shift: 0.5 },
            DistributionSpec::Beta { alpha: 0.5, beta: 0.5 },
        ]
    }

    pub fn label(&self) -> String {
        match self {
            DistributionSpec::Uniform01 => "uniform01".into(),
            DistributionSpec::TruncNormal { mean, sd } => format!("trunc_normal({mean},{sd})"),
            DistributionSpec::TruncStudentT { dof, shift } => {
                format!("trunc_student_t({dof},{shift})")
            }
            DistributionSpec::Beta { alpha, beta } => format!("beta({alpha},{beta})"),
        }
    }
}

/// One draw from `spec`, rejected until it lands in `(0, 1]`. Exact zeros are
/// rejected because payoffs must be strictly positive.
pub fn sample_value(spec: &DistributionSpec, rng: &mut impl Rng) -> f64 {
    loop {
        let v = match *spec {
            DistributionSpec::Uniform01 => rng.random::<f64>(),
            DistributionSpec::TruncNormal { mean, sd } => {
                Normal::new(mean, sd).expect("valid normal parameters").sample(rng)
            }
            DistributionSpec::TruncStudentT { dof, shift } => {
                StudentT::new(dof).expect("valid t parameters").sample(rng) + shift
            }
            DistributionSpec::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .expect("valid beta parameters")
                .sample(rng),
        };
        if v > 0.0 && v <= 1.0 {
            return v;
        }
    }
}

/// Sample a game: `N` and `K` uniform over the given inclusive ranges, every
/// payoff and weight i.i.d. from `spec`.
pub fn sample_game(
    spec: &DistributionSpec,
    n_range: (usize, usize),
    k_range: (usize, usize),
    rng: &mut impl Rng,
) -> Result<GameConfig> {
    if n_range.0 < 2 || n_range.0 > n_range.1 {
        return Err(Error::InvalidArgument(format!("bad player range {n_range:?}")));
    }
    if k_range.0 < 2 || k_range.0 > k_range.1 {
        return Err(Error::InvalidArgument(format!("bad resource range {k_range:?}")));
    }
    let n = rng.random_range(n_range.0..=n_range.1);
    let k = rng.random_range(k_range.0..=k_range.1);
    let payoffs: Vec<f64> = (0..k).map(|_| sample_value(spec, rng)).collect();
    let mut weights: Vec<Vec<f64>> =
        (0..n).map(|_| (0..k).map(|_| sample_value(spec, rng)).collect()).collect();
    // Draws are strictly positive so dead columns cannot occur, but resample
    // defensively in case a spec variant ever admits zero weights.
    for c in 0..k {
        while !weights.iter().any(|row| row[c] > 0.0) {
            for row in weights.iter_mut() {
                row[c] = sample_value(spec, rng);
            }
        }
    }
    GameConfig::new(payoffs, weights)
}

/// What a probe established about equilibrium existence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceVerdict {
    /// The probe converged, or escalation enumerated at least one PNE.
    PneExists,
    /// Exhaustive escalation enumerated zero PNEs.
    NoPne,
    /// Cycle on a game too large to enumerate, or the step cap was hit.
    Undecided,
}

/// A probe run plus the existence verdict it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub path: PathResult,
    pub verdict: ExistenceVerdict,
}

/// Trace the improvement path from the all-ones profile, escalating cycles
/// to exhaustive enumeration when `K^N <= enum_cap`.
pub fn existence_probe(cfg: &GameConfig, max_steps: usize, enum_cap: u64) -> ProbeReport {
    let start = StrategyProfile::new(vec![1; cfg.num_players()], cfg)
        .expect("all-ones profile is always valid");
    let path = improvement_path(cfg, &start, max_steps);
    let verdict = match path.outcome {
        PathOutcome::Converged => ExistenceVerdict::PneExists,
        PathOutcome::StepCapReached => ExistenceVerdict::Undecided,
        PathOutcome::CycleDetected => match enumerate_pnes(cfg, enum_cap) {
            Ok(pnes) if pnes.is_empty() => ExistenceVerdict::NoPne,
            Ok(_) => ExistenceVerdict::PneExists,
            Err(_) => ExistenceVerdict::Undecided,
        },
    };
    ProbeReport { path, verdict }
}

/// Per-distribution outcome tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTally {
    pub distribution: String,
    pub trials: u64,
    pub converged: u64,
    pub cycles: u64,
    pub cap_hits: u64,
    pub pne_exists: u64,
    pub no_pne: u64,
    pub undecided: u64,
}

/// A trial whose probe path cycled or hit the step cap, with enough detail
/// to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    pub distribution: String,
    pub trial: u64,
    pub seed: u64,
    pub num_players: usize,
    pub num_resources: usize,
    pub outcome: PathOutcome,
    pub verdict: ExistenceVerdict,
}

/// Aggregate result of a Monte Carlo existence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceSummary {
    pub trials: u64,
    pub converged: u64,
    pub cycles: u64,
    pub cap_hits: u64,
    pub per_distribution: Vec<DistributionTally>,
    pub incidents: Vec<Incident>,
}

impl ExistenceSummary {
    /// Write the per-distribution tallies as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["distribution", "trials", "converged", "cycles", "cap_hits"])?;
        for row in &self.per_distribution {
            w.write_record([
                row.distribution.clone(),
                row.trials.to_string(),
                row.converged.to_string(),
                row.cycles.to_string(),
                row.cap_hits.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Configuration for a Monte Carlo existence study; the CLI's `exist-mc`
/// input format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub distributions: Vec<DistributionSpec>,
    /// Trials per distribution.
    pub trials: u64,
    pub n_range: (usize, usize),
    pub k_range: (usize, usize),
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_enum_cap")]
    pub enum_cap: u64,
    pub seed: u64,
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_enum_cap() -> u64 {
    DEFAULT_ENUM_CAP
}

/// Run `trials` independent probes per distribution. Trials draw from
/// per-trial derived seed streams, so the result is a pure function of the
/// configuration regardless of thread scheduling.
pub fn run_mc(cfg: &McConfig) -> Result<ExistenceSummary> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if cfg.distributions.is_empty() {
        return Err(Error::InvalidArgument("need at least one distribution".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..cfg.distributions.len())
        .flat_map(|d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let results: Vec<(usize, u64, u64, usize, usize, PathOutcome, ExistenceVerdict)> = jobs
        .par_iter()
        .map(|&(d, t)| {
            let trial_seed = crate::rng::derive_seed(cfg.seed, &[STREAM_MC, d as u64, t]);
            let mut rng = stream_rng(cfg.seed, &[STREAM_MC, d as u64, t]);
            let game = sample_game(&cfg.distributions[d], cfg.n_range, cfg.k_range, &mut rng)
                .expect("validated ranges");
            let probe = existence_probe(&game, cfg.max_steps, cfg.enum_cap);
            (
                d,
                t,
                trial_seed,
                game.num_players(),
                game.num_resources(),
                probe.path.outcome,
                probe.verdict,
            )
        })
        .collect();

    let mut per: Vec<DistributionTally> = cfg
        .distributions
        .iter()
        .map(|s| DistributionTally {
            distribution: s.label(),
            trials: 0,
            converged: 0,
            cycles: 0,
            cap_hits: 0,
            pne_exists: 0,
            no_pne: 0,
            undecided: 0,
        })
        .collect();
    let mut incidents = Vec::new();
    for (d, t, seed, n, k, outcome, verdict) in results {
        let tally = &mut per[d];
        tally.trials += 1;
        match outcome {
            PathOutcome::Converged => tally.converged += 1,
            PathOutcome::CycleDetected => tally.cycles += 1,
            PathOutcome::StepCapReached => tally.cap_hits += 1,
        }
        match verdict {
            ExistenceVerdict::PneExists => tally.pne_exists += 1,
            ExistenceVerdict::NoPne => tally.no_pne += 1,
            ExistenceVerdict::Undecided => tally.undecided += 1,
        }
        if outcome != PathOutcome::Converged {
            incidents.push(Incident {
                distribution: cfg.distributions[d].label(),
                trial: t,
                seed,
                num_players: n,
                num_resources: k,
                outcome,
                verdict,
            });
        }
    }
    Ok(ExistenceSummary {
        trials: per.iter().map(|p| p.trials).sum(),
        converged: per.iter().map(|p| p.converged).sum(),
        cycles: per.iter().map(|p| p.cycles).sum(),
        cap_hits: per.iter().map(|p| p.cap_hits).sum(),
        per_distribution: per,
        incidents,
    })
}
