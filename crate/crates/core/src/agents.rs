//! Decentralized agent policies.
//!
//! Every agent implements the same contract: pick an arm, then digest its own
//! observation. An agent never reads the true game, other agents' state, or
//! other agents' actions — only its own observations and its own seeded
//! randomness, so a run's outcome for one agent is a pure function of its
//! parameters, its seed, and what it saw.
//!
//! The main policy is a three-phase learner. It first explores every arm a
//! fixed number of times on a staggered schedule that minimizes collisions,
//! turning arm totals into payoff estimates and drawing a frozen perturbation
//! vector. It then alternates learning and exploitation subphases: during
//! learning it runs a trial-and-error state machine over moods
//! (discontent/content/watchful/hopeful) whose stationary behavior
//! concentrates on the most efficient equilibrium of the perturbed game built
//! from its estimates, counting per-arm rounds spent content; during
//! exploitation it commits to the arm with the highest cumulative content
//! count. Exploitation subphases double in length, so almost all rounds are
//! eventually spent committed.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};
use crate::game::EQ_TOL;
use crate::rng::{stream_rng, STREAM_AGENT};

/// The agent contract. `act` is called for every round `t = 1..=T` in rank
/// order, then each agent's `observe` receives its own observation for the
/// round. All `act` calls of a round complete before any `observe`, making
/// the round simultaneous in effect.
pub trait Agent {
    fn act(&mut self, round: u64) -> usize;
    fn observe(&mut self, round: u64, obs: &Observation);
}

/// Exploration-phase arm for player `rank` at round `t`: a modular stagger
/// so at most `ceil(N/K)` players share an arm in any round, and over any
/// window of `K` rounds each player pulls every arm exactly once.
pub fn explore_arm(rank: usize, t: u64, num_arms: usize) -> usize {
    ((t + rank as u64) % num_arms as u64) as usize + 1
}

/// Acceptance exponent for a discontent player: decreasing in the observed
/// utility, in `(0, 1/(2N))` for utilities in `[0, 1 + Gamma]`.
pub fn mood_f(u: f64, num_players: usize, gamma_range: f64) -> f64 {
    -u / ((4.0 + 3.0 * gamma_range) * num_players as f64) + 1.0 / (3.0 * num_players as f64)
}

/// Acceptance exponent for a content player's improving experiment:
/// decreasing in the utility gain, in `(0, 1/2)` for gains in `[0, 1 + Gamma]`.
pub fn mood_g(u: f64, gamma_range: f64) -> f64 {
    -u / (4.0 + 3.0 * gamma_range) + 1.0 / 3.0
}

/// The learner's attitude toward its current benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mood {
    Discontent,
    Content,
    Watchful,
    Hopeful,
}

/// Mood plus the benchmark (arm, utility) it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoodState {
    pub mood: Mood,
    pub benchmark_arm: usize,
    pub benchmark_utility: f64,
}

impl MoodState {
    fn reset() -> Self {
        MoodState { mood: Mood::Discontent, benchmark_arm: 1, benchmark_utility: 0.0 }
    }
}

/// Learner hyperparameters. `c1_pulls` is the per-arm exploration count;
/// subphase `s` spends `c2 * ceil(s^eta)` rounds learning and `c3 * 2^s`
/// rounds exploiting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    /// Player rank, 1-based; consumed by the exploration stagger.
    pub rank: usize,
    pub num_players: usize,
    pub num_arms: usize,
    pub horizon: u64,
    pub c1_pulls: u64,
    pub c2: u64,
    pub c3: u64,
    pub eta: f64,
    /// Experimentation rate in `[0, 1)`.
    pub epsilon: f64,
    /// Perturbation range `Gamma`.
    pub gamma_range: f64,
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.rank < 1 || self.rank > self.num_players {
            return bad(format!("rank {} outside 1..={}", self.rank, self.num_players));
        }
        if self.num_arms < 2 {
            return bad("need at least two arms".into());
        }
        if self.c1_pulls < 1 || self.c2 < 1 || self.c3 < 1 {
            return bad("phase length parameters must be positive".into());
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if !(self.gamma_range >= 0.0) {
            return bad(format!("perturbation range must be non-negative, got {}", self.gamma_range));
        }
        Ok(())
    }

    /// Rounds spent learning in subphase `s`.
    pub fn learn_len(&self, s: u32) -> u64 {
        self.c2 * (s as f64).powf(self.eta).ceil() as u64
    }

    /// Rounds spent exploiting in subphase `s`.
    pub fn exploit_len(&self, s: u32) -> u64 {
        if s >= 63 {
            return u64::MAX;
        }
        self.c3.saturating_mul(1u64 << s)
    }

    /// First round of learning subphase `s` (1-based rounds).
    pub fn learn_start(&self, s: u32) -> u64 {
        let mut start = self.c1_pulls * self.num_arms as u64 + 1;
        for i in 1..s {
            start = start.saturating_add(self.learn_len(i)).saturating_add(self.exploit_len(i));
        }
        start
    }

    /// The last exploitation subphase that begins within the horizon, as an
    /// inclusive round window truncated at the horizon. `None` when the
    /// horizon ends before any exploitation starts.
    pub fn final_exploit_window(&self, horizon: u64) -> Option<(u64, u64)> {
        let mut window = None;
        let mut s = 1u32;
        loop {
            let learn_start = self.learn_start(s);
            if learn_start > horizon {
                break;
            }
            let exploit_start = learn_start.saturating_add(self.learn_len(s));
            if exploit_start > horizon {
                break;
            }
            let exploit_end = exploit_start.saturating_add(self.exploit_len(s)).saturating_sub(1);
            window = Some((exploit_start, exploit_end.min(horizon)));
            if exploit_end >= horizon {
                break;
            }
            s += 1;
        }
        window
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Explore,
    Learn { s: u32, remaining: u64 },
    Exploit { s: u32, remaining: u64, arm: usize },
}

/// Introspection of a learner's current phase; the harness uses it only for
/// reporting, never for control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerPhase {
    Explore,
    Learn(u32),
    Exploit(u32),
}

/// The three-phase trial-and-error learner.
#[derive(Debug, Clone)]
pub struct Learner {
    params: LearnerParams,
    rng: ChaCha12Rng,
    phase: Phase,
    reward_sums: Vec<f64>,
    mu_hat: Vec<f64>,
    gamma: Vec<f64>,
    mood: MoodState,
    q_subphase: Vec<u64>,
    q_total: Vec<u64>,
    pending_arm: usize,
}

impl Learner {
    /// Build a learner whose randomness comes from the stream derived from
    /// `(run_seed, rank)`.
    pub fn new(params: LearnerParams, run_seed: u64) -> Result<Self> {
        params.validate()?;
        let k = params.num_arms;
        Ok(Learner {
            rng: stream_rng(run_seed, &[STREAM_AGENT, params.rank as u64]),
            params,
            phase: Phase::Explore,
            reward_sums: vec![0.0; k],
            mu_hat: vec![0.0; k],
            gamma: vec![0.0; k],
            mood: MoodState::reset(),
            q_subphase: vec![0; k],
            q_total: vec![0; k],
            pending_arm: 1,
        })
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    pub fn phase(&self) -> LearnerPhase {
        match self.phase {
            Phase::Explore => LearnerPhase::Explore,
            Phase::Learn { s, .. } => LearnerPhase::Learn(s),
            Phase::Exploit { s, .. } => LearnerPhase::Exploit(s),
        }
    }

    pub fn mood_state(&self) -> &MoodState {
        &self.mood
    }

    /// Per-arm payoff estimates; zeros until exploration completes.
    pub fn estimates(&self) -> &[f64] {
        &self.mu_hat
    }

    pub fn perturbations(&self) -> &[f64] {
        &self.gamma
    }

    /// Cumulative content counters across completed learning subphases.
    pub fn content_counts(&self) -> &[u64] {
        &self.q_total
    }

    /// Arm with the highest cumulative content count, lowest index on ties.
    pub fn pick_exploit_arm(&self) -> usize {
        let mut best = 0usize;
        for k0 in 1..self.params.num_arms {
            if self.q_total[k0] > self.q_total[best] {
                best = k0;
            }
        }
        best + 1
    }

    fn choose_arm_by_mood(&mut self) -> usize {
        let k = self.params.num_arms;
        match self.mood.mood {
            Mood::Discontent => self.rng.random_range(1..=k),
            Mood::Content => {
                if self.rng.random::<f64>() < self.params.epsilon {
                    // Uniform over the other K-1 arms.
                    let o = self.rng.random_range(1..k);
                    if o >= self.mood.benchmark_arm {
                        o + 1
                    } else {
                        o
                    }
                } else {
                    self.mood.benchmark_arm
                }
            }
            Mood::Watchful | Mood::Hopeful => self.mood.benchmark_arm,
        }
    }

    /// Mood transition on the observed utility `u_prime` for the arm pulled
    /// this round. Utility comparisons treat differences within tolerance as
    /// equality; the observed utility is deterministic per joint action, so
    /// the tolerance only guards against non-associative float noise.
    fn update_mood(&mut self, chosen_arm: usize, u_prime: f64) {
        let u = self.mood.benchmark_utility;
        let cmp = if (u_prime - u).abs() <= EQ_TOL {
            std::cmp::Ordering::Equal
        } else if u_prime > u {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        };
        use std::cmp::Ordering::*;
        match self.mood.mood {
            Mood::Discontent => {
                let f = mood_f(u_prime, self.params.num_players, self.params.gamma_range);
                if self.rng.random::<f64>() < self.params.epsilon.powf(f) {
                    self.mood =
                        MoodState { mood: Mood::Content, benchmark_arm: chosen_arm, benchmark_utility: u_prime };
                }
            }
            Mood::Content => {
                if chosen_arm == self.mood.benchmark_arm {
                    self.mood.mood = match cmp {
                        Greater => Mood::Hopeful,
                        Equal => Mood::Content,
                        Less => Mood::Watchful,
                    };
                } else if cmp == Greater {
                    let g = mood_g(u_prime - u, self.params.gamma_range);
                    if self.rng.random::<f64>() < self.params.epsilon.powf(g) {
                        self.mood = MoodState {
                            mood: Mood::Content,
                            benchmark_arm: chosen_arm,
                            benchmark_utility: u_prime,
                        };
                    }
                }
            }
            Mood::Watchful => {
                self.mood.mood = match cmp {
                    Greater => Mood::Hopeful,
                    Equal => Mood::Content,
                    Less => Mood::Discontent,
                };
            }
            Mood::Hopeful => match cmp {
                Greater => {
                    self.mood.mood = Mood::Content;
                    self.mood.benchmark_utility = u_prime;
                }
                Equal => self.mood.mood = Mood::Content,
                Less => self.mood.mood = Mood::Watchful,
            },
        }
        debug_assert!(
            self.mood.benchmark_utility >= 0.0
                && self.mood.benchmark_utility <= 1.0 + self.params.gamma_range + EQ_TOL,
            "benchmark utility {} escaped [0, 1 + Gamma]",
            self.mood.benchmark_utility
        );
    }

    fn enter_learn(&mut self, s: u32) {
        self.q_subphase.iter_mut().for_each(|q| *q = 0);
        self.mood = MoodState::reset();
        self.phase = Phase::Learn { s, remaining: self.params.learn_len(s) };
    }

    #[cfg(test)]
    pub(crate) fn force_learn_state(&mut self, s: u32, remaining: u64, mood: MoodState) {
        self.phase = Phase::Learn { s, remaining };
        self.mood = mood;
    }

    #[cfg(test)]
    pub(crate) fn force_estimates(&mut self, mu_hat: Vec<f64>, gamma: Vec<f64>) {
        self.mu_hat = mu_hat;
        self.gamma = gamma;
    }
}

impl Agent for Learner {
    fn act(&mut self, round: u64) -> usize {
        let arm = match self.phase {
            Phase::Explore => explore_arm(self.params.rank, round, self.params.num_arms),
            Phase::Learn { .. } => self.choose_arm_by_mood(),
            Phase::Exploit { arm, .. } => arm,
        };
        self.pending_arm = arm;
        arm
    }

    fn observe(&mut self, round: u64, obs: &Observation) {
        debug_assert_eq!(obs.chosen_arm, self.pending_arm);
        let k0 = obs.chosen_arm - 1;
        match self.phase {
            Phase::Explore => {
                self.reward_sums[k0] += obs.arm_total;
                if round == self.params.c1_pulls * self.params.num_arms as u64 {
                    let c1 = self.params.c1_pulls as f64;
                    for (est, sum) in self.mu_hat.iter_mut().zip(&self.reward_sums) {
                        *est = sum / c1;
                    }
                    for g in self.gamma.iter_mut() {
                        *g = self.rng.random::<f64>() * self.params.gamma_range;
                    }
                    self.enter_learn(1);
                }
            }
            Phase::Learn { s, ref mut remaining } => {
                let u_prime = if obs.arm_total > 0.0 {
                    obs.own_reward * self.mu_hat[k0] / obs.arm_total + self.gamma[k0]
                } else {
                    self.gamma[k0]
                };
                self.update_mood(obs.chosen_arm, u_prime);
                if self.mood.mood == Mood::Content {
                    self.q_subphase[k0] += 1;
                    self.q_total[k0] += 1;
                }
                *remaining -= 1;
                if *remaining == 0 {
                    let arm = self.pick_exploit_arm();
                    self.phase = Phase::Exploit { s, remaining: self.params.exploit_len(s), arm };
                }
            }
            Phase::Exploit { s, ref mut remaining, .. } => {
                *remaining -= 1;
                if *remaining == 0 {
                    self.enter_learn(s + 1);
                }
            }
        }
    }
}

/// Parameters for the explore-then-commit total-reward baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalRewardParams {
    pub rank: usize,
    pub num_players: usize,
    pub num_arms: usize,
    pub horizon: u64,
    /// Exploration lasts `ceil(alpha * ln(horizon))` rounds.
    pub alpha: f64,
}

impl TotalRewardParams {
    pub fn explore_rounds(&self) -> u64 {
        (self.alpha * (self.horizon as f64).ln()).ceil().max(0.0) as u64
    }
}

/// Explore-then-commit baseline: sample arms uniformly while averaging the
/// observed arm totals, then commit permanently. Ranked by estimated total
/// reward, player `j` takes the arm of rank `(j - 1) mod min(N, K)`, so the
/// roster covers the top `N` arms when `N < K` and every arm when `N >= K`.
#[derive(Debug, Clone)]
pub struct TotalRewardAgent {
    params: TotalRewardParams,
    explore_rounds: u64,
    rng: ChaCha12Rng,
    sums: Vec<f64>,
    counts: Vec<u64>,
    committed: Option<usize>,
}

impl TotalRewardAgent {
    pub fn new(params: TotalRewardParams, run_seed: u64) -> Result<Self> {
        if params.alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                params.alpha
            )));
        }
        if params.rank < 1 || params.rank > params.num_players {
            return Err(Error::InvalidArgument(format!(
                "rank {} outside 1..={}",
                params.rank, params.num_players
            )));
        }
        Ok(TotalRewardAgent {
            explore_rounds: params.explore_rounds(),
            rng: stream_rng(run_seed, &[STREAM_AGENT, params.rank as u64]),
            sums: vec![0.0; params.num_arms],
            counts: vec![0; params.num_arms],
            committed: None,
            params,
        })
    }

    fn commit_arm(&self) -> usize {
        let k = self.params.num_arms;
        let estimates: Vec<f64> = (0..k)
            .map(|k0| if self.counts[k0] > 0 { self.sums[k0] / self.counts[k0] as f64 } else { 0.0 })
            .collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            estimates[b].partial_cmp(&estimates[a]).expect("finite estimates").then(a.cmp(&b))
        });
        let slots = self.params.num_players.min(k);
        order[(self.params.rank - 1) % slots] + 1
    }
}

impl Agent for TotalRewardAgent {
    fn act(&mut self, round: u64) -> usize {
        if round <= self.explore_rounds {
            self.rng.random_range(1..=self.params.num_arms)
        } else {
            *self.committed.get_or_insert_with(|| {
                let k = self.params.num_arms;
                let estimates: Vec<f64> = (0..k)
                    .map(|k0| {
                        if self.counts[k0] > 0 {
                            self.sums[k0] / self.counts[k0] as f64
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&a, &b| {
                    estimates[b]
                        .partial_cmp(&estimates[a])
                        .expect("finite estimates")
                        .then(a.cmp(&b))
                });
                let slots = self.params.num_players.min(k);
                order[(self.params.rank - 1) % slots] + 1
            })
        }
    }

    fn observe(&mut self, round: u64, obs: &Observation) {
        if round <= self.explore_rounds {
            self.sums[obs.chosen_arm - 1] += obs.arm_total;
            self.counts[obs.chosen_arm - 1] += 1;
        }
    }
}

/// Uniform-random control baseline.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    num_arms: usize,
    rng: ChaCha12Rng,
}

impl RandomAgent {
    pub fn new(rank: usize, num_arms: usize, run_seed: u64) -> Self {
        RandomAgent { num_arms, rng: stream_rng(run_seed, &[STREAM_AGENT, rank as u64]) }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, _round: u64) -> usize {
        self.rng.random_range(1..=self.num_arms)
    }

    fn observe(&mut self, _round: u64, _obs: &Observation) {}
}
