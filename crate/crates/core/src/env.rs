//! The stochastic multi-round environment.
//!
//! Each round every arm draws a reward from its distribution (supported on
//! `(0, 1]`), players' joint actions split each arm's draw proportionally by
//! weight, and every player observes both their own share and the total draw
//! of the arm they chose. The environment also computes god's-eye metrics —
//! per-player instantaneous regret against the best unilateral counterfactual
//! under the true expected payoffs, and the count of rounds spent away from
//! the welfare-maximal equilibria. Agents never see any of that.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    gain0_from_loads, most_efficient_pnes, resource_loads, share, utility0_from_loads, GameConfig,
    StrategyProfile,
};
use crate::rng::{stream_rng, STREAM_ENV};

/// Per-arm reward distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmModel {
    Beta { alpha: f64, beta: f64 },
    /// Degenerate arm paying the same value every round.
    Fixed { value: f64 },
}

impl ArmModel {
    pub fn mean(&self) -> f64 {
        match *self {
            ArmModel::Beta { alpha, beta } => alpha / (alpha + beta),
            ArmModel::Fixed { value } => value,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ArmModel::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "beta arm parameters must be positive, got ({alpha}, {beta})"
                    )));
                }
            }
            ArmModel::Fixed { value } => {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "fixed arm value must lie in (0, 1], got {value}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The environment's arm distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardModel {
    arms: Vec<ArmModel>,
}

impl RewardModel {
    pub fn new(arms: Vec<ArmModel>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidArgument("need at least two arms".into()));
        }
        for arm in &arms {
            arm.validate()?;
        }
        Ok(RewardModel { arms })
    }

    /// Arms paying constants; handy for exact-estimate tests.
    pub fn constant(values: Vec<f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|value| ArmModel::Fixed { value }).collect())
    }

    /// Beta arms with both shape parameters drawn uniformly from `(0, 10]`.
    pub fn sample_beta_arms(num_arms: usize, rng: &mut impl Rng) -> Result<Self> {
        let draw = |rng: &mut dyn FnMut() -> f64| -> f64 {
            loop {
                let v: f64 = rng();
                if v > 0.0 {
                    return v * 10.0;
                }
            }
        };
        let mut gen = || rng.random::<f64>();
        let arms = (0..num_arms)
            .map(|_| ArmModel::Beta { alpha: draw(&mut gen), beta: draw(&mut gen) })
            .collect();
        Self::new(arms)
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Expected reward of arm `k` (1-based).
    pub fn mean(&self, k: usize) -> f64 {
        self.arms[k - 1].mean()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::mean).collect()
    }

    /// Game whose payoffs are these arms' expected rewards.
    pub fn game_config(&self, weights: Vec<Vec<f64>>) -> Result<GameConfig> {
        GameConfig::new(self.means(), weights)
    }

    fn draw(&self, k0: usize, rng: &mut ChaCha12Rng) -> f64 {
        match self.arms[k0] {
            ArmModel::Fixed { value } => value,
            ArmModel::Beta { alpha, beta } => {
                let dist = rand_distr::Beta::new(alpha, beta).expect("validated parameters");
                // Zero draws are rejected: rewards are supported on (0, 1],
                // and downstream utility estimates divide by the draw.
                loop {
                    let x = dist.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
        }
    }
}

/// What one player sees after a round: their own share and the chosen arm's
/// total draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Arm this player pulled, 1-based.
    pub chosen_arm: usize,
    pub own_reward: f64,
    pub arm_total: f64,
}

/// The multi-round environment: true game, arm distributions, and a reward
/// stream independent of all agent randomness.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    config: GameConfig,
    model: RewardModel,
    rng: ChaCha12Rng,
}

impl BanditEnv {
    /// Build an environment. The game's payoffs must be the arms' means;
    /// they are the same quantity seen by two subsystems.
    pub fn new(config: GameConfig, model: RewardModel, seed: u64) -> Result<Self> {
        if model.num_arms() != config.num_resources() {
            return Err(Error::InvalidArgument(format!(
                "{} arms for {} resources",
                model.num_arms(),
                config.num_resources()
            )));
        }
        for k in 1..=config.num_resources() {
            if (model.mean(k) - config.payoff(k)).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "arm {k} mean {} does not match game payoff {}",
                    model.mean(k),
                    config.payoff(k)
                )));
            }
        }
        Ok(BanditEnv { config, model, rng: stream_rng(seed, &[STREAM_ENV]) })
    }

    /// Build the true game from the model's means and the given weights.
    pub fn from_model(model: RewardModel, weights: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let config = model.game_config(weights)?;
        Self::new(config, model, seed)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    /// Play one round: draw every arm, split each arm's draw among its
    /// choosers in proportion to their weights. Shares of an arm sum to its
    /// draw whenever any chooser has positive weight.
    pub fn step(&mut self, joint_actions: &StrategyProfile) -> (Vec<Observation>, Vec<f64>) {
        let choices0 = joint_actions.to_zero_based();
        assert_eq!(
            choices0.len(),
            self.config.num_players(),
            "joint action length must equal player count"
        );
        let k = self.config.num_resources();
        let draws: Vec<f64> = (0..k).map(|k0| self.model.draw(k0, &mut self.rng)).collect();
        let loads = resource_loads(&self.config, &choices0);
        let observations = choices0
            .iter()
            .enumerate()
            .map(|(j0, &c0)| Observation {
                chosen_arm: c0 + 1,
                own_reward: share(draws[c0], self.config.weight(j0 + 1, c0 + 1), loads[c0]),
                arm_total: draws[c0],
            })
            .collect();
        (observations, draws)
    }
}

/// Expected-utility regret of `player` at this round's joint action: the best
/// unilateral counterfactual (others fixed) minus the realized expected
/// utility, under the true payoffs. Never negative.
pub fn instant_regret(cfg: &GameConfig, joint_actions: &StrategyProfile, player: usize) -> f64 {
    assert!(player >= 1 && player <= cfg.num_players());
    let choices0 = joint_actions.to_zero_based();
    let loads = resource_loads(cfg, &choices0);
    let j0 = player - 1;
    let mut best_gain = 0.0f64;
    for to0 in 0..cfg.num_resources() {
        let g = gain0_from_loads(cfg, &choices0, j0, to0, &loads);
        if g > best_gain {
            best_gain = g;
        }
    }
    best_gain
}

/// The welfare-maximal equilibria of a game, as a membership set.
#[derive(Debug, Clone)]
pub struct EfficientSet {
    profiles: HashSet<Vec<usize>>,
    welfare: f64,
}

impl EfficientSet {
    /// Enumerate the game's most efficient equilibria. Errors when the game
    /// has none: the away-from-equilibrium metric is undefined there.
    pub fn from_game(cfg: &GameConfig, cap: u64) -> Result<Self> {
        let (best, welfare) = most_efficient_pnes(cfg, cap)?;
        if best.is_empty() {
            return Err(Error::NoPne(
                "most-efficient-equilibrium metrics need a game with at least one PNE".into(),
            ));
        }
        Ok(EfficientSet {
            profiles: best.into_iter().map(|p| p.choices().to_vec()).collect(),
            welfare: welfare.expect("welfare defined for non-empty set"),
        })
    }

    pub fn contains(&self, profile: &StrategyProfile) -> bool {
        self.profiles.contains(profile.choices())
    }

    pub fn welfare(&self) -> f64 {
        self.welfare
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.profiles.iter()
    }
}

/// Cumulative god's-eye metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Per-player cumulative regret.
    pub regret: Vec<f64>,
    /// Rounds whose joint action was not a most efficient equilibrium.
    pub noneq: u64,
    pub rounds: u64,
}

impl RunMetrics {
    pub fn new(num_players: usize) -> Self {
        RunMetrics { regret: vec![0.0; num_players], noneq: 0, rounds: 0 }
    }

    /// Fold one round's joint action into the metrics. Membership in the
    /// efficient set decides the away count, so ties among equally efficient
    /// equilibria all count as success.
    pub fn observe_round(
        &mut self,
        cfg: &GameConfig,
        joint_actions: &StrategyProfile,
        efficient: &EfficientSet,
    ) {
        self.rounds += 1;
        for j in 1..=cfg.num_players() {
            self.regret[j - 1] += instant_regret(cfg, joint_actions, j);
        }
        self.update_noneq(joint_actions, efficient);
    }

    /// Increment the away count when the joint action misses the set.
    pub fn update_noneq(&mut self, joint_actions: &StrategyProfile, efficient: &EfficientSet) {
        if !efficient.contains(joint_actions) {
            self.noneq += 1;
        }
    }

    pub fn mean_regret(&self) -> f64 {
        self.regret.iter().sum::<f64>() / self.regret.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{utility, DEFAULT_ENUM_CAP, EQ_TOL};

    fn example_three_resources() -> GameConfig {
        GameConfig::with_player_weights(vec![0.6, 0.4, 0.2], vec![1.0, 3.0 / 8.0, 1.0 / 4.0]).unwrap()
    }

    fn profile(cfg: &GameConfig, choices: &[usize]) -> StrategyProfile {
        StrategyProfile::new(choices.to_vec(), cfg).unwrap()
    }

    #[test]
    fn single_chooser_takes_whole_draw() {
        let model = RewardModel::new(vec![
            ArmModel::Beta { alpha: 2.0, beta: 5.0 },
            ArmModel::Beta { alpha: 1.0, beta: 1.0 },
        ])
        .unwrap();
        let weights = vec![vec![0.8, 0.3], vec![0.6, 0.9]];
        let mut env = BanditEnv::from_model(model, weights, 7).unwrap();
        let p = StrategyProfile::new(vec![1, 2], env.config()).unwrap();
        for _ in 0..50 {
            let (obs, draws) = env.step(&p);
            assert_eq!(obs[0].own_reward, draws[0]);
            assert_eq!(obs[1].own_reward, draws[1]);
            assert_eq!(obs[0].arm_total, draws[0]);
        }
    }

    #[test]
    fn equal_weights_split_evenly() {
        let model = RewardModel::constant(vec![0.8, 0.5]).unwrap();
        let weights = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let mut env = BanditEnv::from_model(model, weights, 3).unwrap();
        let p = StrategyProfile::new(vec![1, 1], env.config()).unwrap();
        let (obs, draws) = env.step(&p);
        assert_eq!(draws[0], 0.8);
        assert!((obs[0].own_reward - 0.4).abs() <= EQ_TOL);
        assert!((obs[1].own_reward - 0.4).abs() <= EQ_TOL);
    }

    #[test]
    fn share_ratio_is_constant_across_rounds() {
        let model = RewardModel::new(vec![
            ArmModel::Beta { alpha: 3.0, beta: 2.0 },
            ArmModel::Beta { alpha: 1.0, beta: 3.0 },
        ])
        .unwrap();
        let weights = vec![vec![0.9, 0.2], vec![0.5, 0.7], vec![0.4, 0.1]];
        let mut env = BanditEnv::from_model(model, weights, 11).unwrap();
        let p = StrategyProfile::new(vec![1, 1, 2], env.config()).unwrap();
        let mut ratios: Vec<f64> = Vec::new();
        for _ in 0..100 {
            let (obs, _) = env.step(&p);
            ratios.push(obs[0].own_reward / obs[0].arm_total);
        }
        for r in &ratios {
            assert!((r - ratios[0]).abs() <= EQ_TOL);
        }
        assert!((ratios[0] - 0.9 / 1.4).abs() <= EQ_TOL);
    }

    #[test]
    fn draws_track_expected_value() {
        let model = RewardModel::new(vec![
            ArmModel::Beta { alpha: 6.4, beta: 2.1 },
            ArmModel::Beta { alpha: 0.7, beta: 4.0 },
        ])
        .unwrap();
        let weights = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let mut env = BanditEnv::from_model(model.clone(), weights, 13).unwrap();
        let p = StrategyProfile::new(vec![1, 2], env.config()).unwrap();
        let rounds = 100_000;
        let mut sums = [0.0f64; 2];
        for _ in 0..rounds {
            let (_, draws) = env.step(&p);
            sums[0] += draws[0];
            sums[1] += draws[1];
            assert!(draws.iter().all(|&x| x > 0.0 && x <= 1.0));
        }
        for k in 0..2 {
            let mean = sums[k] / rounds as f64;
            assert!(
                (mean - model.mean(k + 1)).abs() < 0.005,
                "arm {k} empirical mean {mean} vs {}",
                model.mean(k + 1)
            );
        }
    }

    #[test]
    fn shares_conserve_each_arm_draw() {
        let model = RewardModel::new(vec![
            ArmModel::Beta { alpha: 2.0, beta: 2.0 },
            ArmModel::Beta { alpha: 5.0, beta: 1.0 },
            ArmModel::Beta { alpha: 1.0, beta: 5.0 },
        ])
        .unwrap();
        let weights = vec![
            vec![0.3, 0.9, 0.5],
            vec![0.8, 0.1, 0.6],
            vec![0.2, 0.7, 0.4],
            vec![0.9, 0.3, 0.8],
        ];
        let mut env = BanditEnv::from_model(model, weights, 17).unwrap();
        let p = StrategyProfile::new(vec![1, 1, 3, 3], env.config()).unwrap();
        for _ in 0..200 {
            let (obs, draws) = env.step(&p);
            let arm1: f64 = obs.iter().filter(|o| o.chosen_arm == 1).map(|o| o.own_reward).sum();
            let arm3: f64 = obs.iter().filter(|o| o.chosen_arm == 3).map(|o| o.own_reward).sum();
            assert!((arm1 - draws[0]).abs() <= EQ_TOL);
            assert!((arm3 - draws[2]).abs() <= EQ_TOL);
        }
    }

    #[test]
    fn env_rejects_mismatched_means() {
        let model = RewardModel::constant(vec![0.8, 0.5]).unwrap();
        let cfg = GameConfig::new(vec![0.7, 0.5], vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(BanditEnv::new(cfg, model, 1).is_err());
    }

    #[test]
    fn instant_regret_examples() {
        let cfg = example_three_resources();
        // Player 1 at (2,2,3): the best counterfactual is resource 1 alone.
        let r = instant_regret(&cfg, &profile(&cfg, &[2, 2, 3]), 1);
        let realized = utility(&cfg, &profile(&cfg, &[2, 2, 3]), 1);
        assert!((realized - 0.4 / 1.375).abs() <= EQ_TOL);
        assert!((r - (0.6 - 0.4 / 1.375)).abs() <= EQ_TOL);

        // A best-responding player has zero regret.
        assert_eq!(instant_regret(&cfg, &profile(&cfg, &[1, 2, 3]), 1), 0.0);

        // At the efficient equilibrium everyone's regret is zero.
        let total: f64 =
            (1..=3).map(|j| instant_regret(&cfg, &profile(&cfg, &[1, 2, 3]), j)).sum();
        assert_eq!(total, 0.0);
    }

    #[test]
    fn noneq_counts_set_membership() {
        let cfg = example_three_resources();
        let efficient = EfficientSet::from_game(&cfg, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(efficient.len(), 1);
        let mut metrics = RunMetrics::new(3);
        metrics.update_noneq(&profile(&cfg, &[1, 2, 3]), &efficient);
        assert_eq!(metrics.noneq, 0);
        // A PNE that is not welfare-maximal still counts as away.
        metrics.update_noneq(&profile(&cfg, &[2, 1, 1]), &efficient);
        assert_eq!(metrics.noneq, 1);
        for _ in 0..10 {
            metrics.update_noneq(&profile(&cfg, &[1, 2, 3]), &efficient);
        }
        assert_eq!(metrics.noneq, 1);
    }

    #[test]
    fn efficient_set_requires_equilibrium() {
        let cfg = GameConfig::new(
            vec![1.0, 0.4904, 0.2447, 0.1065],
            vec![
                vec![0.1657, 0.5755, 0.0, 0.0],
                vec![0.0, 0.0, 0.5623, 0.0314],
                vec![0.0, 0.4217, 0.9517, 0.0],
                vec![0.0, 0.4057, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert!(matches!(EfficientSet::from_game(&cfg, DEFAULT_ENUM_CAP), Err(Error::NoPne(_))));
    }

    #[test]
    fn streaming_regret_matches_batch_recomputation() {
        let cfg = example_three_resources();
        let efficient = EfficientSet::from_game(&cfg, DEFAULT_ENUM_CAP).unwrap();
        let mut rng = stream_rng(23, &[STREAM_ENV, 9]);
        let mut metrics = RunMetrics::new(3);
        let mut log: Vec<StrategyProfile> = Vec::new();
        for _ in 0..500 {
            let choices: Vec<usize> = (0..3).map(|_| rng.random_range(1..=3)).collect();
            let p = StrategyProfile::new(choices, &cfg).unwrap();
            metrics.observe_round(&cfg, &p, &efficient);
            log.push(p);
        }
        // Reference: recompute everything from the action log.
        let mut batch_regret = vec![0.0f64; 3];
        let mut batch_noneq = 0u64;
        for p in &log {
            for j in 1..=3 {
                batch_regret[j - 1] += instant_regret(&cfg, p, j);
            }
            if !efficient.contains(p) {
                batch_noneq += 1;
            }
        }
        for j in 0..3 {
            assert!((metrics.regret[j] - batch_regret[j]).abs() <= 1e-9);
        }
        assert_eq!(metrics.noneq, batch_noneq);
        assert_eq!(metrics.rounds, 500);
    }
}
