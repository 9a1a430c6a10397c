//! Static analysis of proportional payoff allocation games.
//!
//! A game has `N >= 2` players and `K >= 2` resources. Resource `k` carries a
//! payoff `mu_k` in `(0, 1]`, and player `j` has a weight `w[j][k]` in `[0, 1]`
//! for it. Every player picks one resource; a resource's payoff is split among
//! its choosers in proportion to their weights (a chooser with weight zero
//! gets nothing, and a resource whose choosers all have weight zero pays
//! nobody). Players and resources are 1-based in the public API and all file
//! formats, matching the conventional presentation of such games.
//!
//! This module provides exact utilities and welfare, unilateral deviation
//! gains, epsilon-equilibrium tests, exhaustive equilibrium enumeration,
//! deterministic best-improvement dynamics with cycle detection, the gap
//! quantities used to calibrate equilibrium identification under estimation
//! noise, and classifiers for the structural scenarios that guarantee
//! equilibrium existence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for utility comparisons. Utilities are short rational
/// expressions; any genuine gap in the games of interest is many orders of
/// magnitude larger than this.
pub const EQ_TOL: f64 = 1e-12;

/// Default cap on exhaustive enumeration, in number of strategy profiles.
/// Instances above the cap must use improvement-path probes instead.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 20;

#[derive(Serialize, Deserialize, Clone)]
struct RawGameConfig {
    payoffs: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

/// The static game: payoffs `mu_k` per resource and a players-by-resources
/// weight matrix.
///
/// Serializes as `{"payoffs": [K reals], "weights": [[K reals] x N]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGameConfig", into = "RawGameConfig")]
pub struct GameConfig {
    payoffs: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<RawGameConfig> for GameConfig {
    type Error = Error;
    fn try_from(raw: RawGameConfig) -> Result<Self> {
        GameConfig::new(raw.payoffs, raw.weights)
    }
}

impl From<GameConfig> for RawGameConfig {
    fn from(cfg: GameConfig) -> Self {
        RawGameConfig { payoffs: cfg.payoffs, weights: cfg.weights }
    }
}

impl GameConfig {
    /// Build and validate a game.
    ///
    /// Requires `N, K >= 2`, payoffs in `(0, 1]`, weights in `[0, 1]`, a
    /// rectangular weight matrix, and at least one strictly positive weight in
    /// every resource column (a column nobody can use would be dead weight in
    /// every analysis).
    pub fn new(payoffs: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let k = payoffs.len();
        let n = weights.len();
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 players, got {n}")));
        }
        if k < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 resources, got {k}")));
        }
        for (i, &mu) in payoffs.iter().enumerate() {
            if !mu.is_finite() || mu <= 0.0 || mu > 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "payoff for resource {} must lie in (0, 1], got {mu}",
                    i + 1
                )));
            }
        }
        for (j, row) in weights.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "weight row for player {} has length {}, expected {k}",
                    j + 1,
                    row.len()
                )));
            }
            for (i, &w) in row.iter().enumerate() {
                if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidConfig(format!(
                        "weight for player {}, resource {} must lie in [0, 1], got {w}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        for col in 0..k {
            if !weights.iter().any(|row| row[col] > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "resource {} has no player with positive weight",
                    col + 1
                )));
            }
        }
        Ok(GameConfig { payoffs, weights })
    }

    /// Game where every player has one weight applied to all resources
    /// (constant weight rows).
    pub fn with_player_weights(payoffs: Vec<f64>, player_weights: Vec<f64>) -> Result<Self> {
        let k = payoffs.len();
        let weights = player_weights.iter().map(|&w| vec![w; k]).collect();
        Self::new(payoffs, weights)
    }

    /// Game with `num_players` players who all share one weight per resource
    /// (constant weight columns).
    pub fn with_resource_weights(
        payoffs: Vec<f64>,
        resource_weights: Vec<f64>,
        num_players: usize,
    ) -> Result<Self> {
        if resource_weights.len() != payoffs.len() {
            return Err(Error::InvalidConfig(format!(
                "{} resource weights for {} payoffs",
                resource_weights.len(),
                payoffs.len()
            )));
        }
        let weights = vec![resource_weights; num_players];
        Self::new(payoffs, weights)
    }

    pub fn num_players(&self) -> usize {
        self.weights.len()
    }

    pub fn num_resources(&self) -> usize {
        self.payoffs.len()
    }

    /// Payoff of resource `k` (1-based).
    pub fn payoff(&self, k: usize) -> f64 {
        self.payoffs[k - 1]
    }

    /// Weight of player `j` for resource `k` (both 1-based).
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j - 1][k - 1]
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    /// Whether every resource column attains the maximum-weight-one
    /// convention `max_j w[j][k] = 1`. Sampled games generally do not; the
    /// convention is reported, never enforced.
    pub fn is_max_normalized(&self) -> bool {
        (0..self.num_resources()).all(|c| {
            let top = self.weights.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            (top - 1.0).abs() <= EQ_TOL
        })
    }

    /// Number of strategy profiles `K^N`, or `None` on overflow.
    pub fn profile_count(&self) -> Option<u128> {
        (self.num_resources() as u128).checked_pow(self.num_players() as u32)
    }

    pub(crate) fn guard_enumeration(&self, cap: u64) -> Result<()> {
        match self.profile_count() {
            Some(p) if p <= cap as u128 => Ok(()),
            Some(p) => Err(Error::EnumerationTooLarge { profiles: p, cap }),
            None => Err(Error::EnumerationTooLarge { profiles: u128::MAX, cap }),
        }
    }
}

/// One resource choice per player, 1-based. Serializes as a bare array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    choices: Vec<usize>,
}

impl StrategyProfile {
    /// Validate `choices` against a game: length `N`, entries in `1..=K`.
    pub fn new(choices: Vec<usize>, config: &GameConfig) -> Result<Self> {
        if choices.len() != config.num_players() {
            return Err(Error::InvalidProfile(format!(
                "profile has {} entries, game has {} players",
                choices.len(),
                config.num_players()
            )));
        }
        let k = config.num_resources();
        for (j, &c) in choices.iter().enumerate() {
            if c < 1 || c > k {
                return Err(Error::InvalidProfile(format!(
                    "player {}'s choice {c} outside 1..={k}",
                    j + 1
                )));
            }
        }
        Ok(StrategyProfile { choices })
    }

    /// Resource chosen by each player, 1-based.
    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    /// Resource chosen by player `j` (1-based).
    pub fn choice(&self, j: usize) -> usize {
        self.choices[j - 1]
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub(crate) fn from_zero_based(choices0: &[usize]) -> Self {
        StrategyProfile { choices: choices0.iter().map(|&c| c + 1).collect() }
    }

    pub(crate) fn to_zero_based(&self) -> Vec<usize> {
        self.choices.iter().map(|&c| c - 1).collect()
    }
}

impl std::fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.choices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn assert_profile(cfg: &GameConfig, choices0: &[usize]) {
    assert_eq!(choices0.len(), cfg.num_players(), "profile length must equal player count");
    debug_assert!(choices0.iter().all(|&c| c < cfg.num_resources()));
}

fn assert_player(cfg: &GameConfig, player: usize) {
    assert!(
        player >= 1 && player <= cfg.num_players(),
        "player index {player} outside 1..={}",
        cfg.num_players()
    );
}

fn assert_resource(cfg: &GameConfig, k: usize) {
    assert!(
        k >= 1 && k <= cfg.num_resources(),
        "resource index {k} outside 1..={}",
        cfg.num_resources()
    );
}

/// Sum of choosers' weights per resource (0-based scratch representation).
pub(crate) fn resource_loads(cfg: &GameConfig, choices0: &[usize]) -> Vec<f64> {
    let mut loads = vec![0.0; cfg.num_resources()];
    for (j0, &c0) in choices0.iter().enumerate() {
        loads[c0] += cfg.weights[j0][c0];
    }
    loads
}

/// Proportional share: `mu * (w / denom)`, or 0 when the denominator is 0.
/// The ratio is formed first so a lone positive-weight chooser receives the
/// payoff bit-exactly (`w / w == 1`).
#[inline]
pub(crate) fn share(mu: f64, w: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        mu * (w / denom)
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn utility0_from_loads(cfg: &GameConfig, choices0: &[usize], j0: usize, loads: &[f64]) -> f64 {
    let c0 = choices0[j0];
    share(cfg.payoffs[c0], cfg.weights[j0][c0], loads[c0])
}

/// Gain for player `j0` from unilaterally moving to resource `to0`,
/// evaluated from precomputed loads. Zero when `to0` is the current choice.
#[inline]
pub(crate) fn gain0_from_loads(cfg: &GameConfig, choices0: &[usize], j0: usize, to0: usize, loads: &[f64]) -> f64 {
    let from0 = choices0[j0];
    if to0 == from0 {
        return 0.0;
    }
    let w_to = cfg.weights[j0][to0];
    let new_u = share(cfg.payoffs[to0], w_to, loads[to0] + w_to);
    new_u - utility0_from_loads(cfg, choices0, j0, loads)
}

/// Largest unilateral deviation gain over all players and resources.
pub(crate) fn max_gain0(cfg: &GameConfig, choices0: &[usize], loads: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for j0 in 0..cfg.num_players() {
        for to0 in 0..cfg.num_resources() {
            let g = gain0_from_loads(cfg, choices0, j0, to0, loads);
            if g > best {
                best = g;
            }
        }
    }
    best
}

/// Visit every strategy profile of `[K]^N` in lexicographic order. The
/// callback receives the 0-based choice vector.
pub(crate) fn for_each_profile(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut choices0 = vec![0usize; n];
    loop {
        f(&choices0);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            choices0[pos] += 1;
            if choices0[pos] < k {
                break;
            }
            choices0[pos] = 0;
        }
    }
}

/// Player `player`'s payoff under `profile`: their proportional share of the
/// chosen resource's payoff, zero when no chooser brings positive weight.
pub fn utility(cfg: &GameConfig, profile: &StrategyProfile, player: usize) -> f64 {
    assert_player(cfg, player);
    let choices0 = profile.to_zero_based();
    assert_profile(cfg, &choices0);
    let loads = resource_loads(cfg, &choices0);
    utility0_from_loads(cfg, &choices0, player - 1, &loads)
}

/// Total welfare: the sum of all players' utilities.
pub fn welfare(cfg: &GameConfig, profile: &StrategyProfile) -> f64 {
    let choices0 = profile.to_zero_based();
    assert_profile(cfg, &choices0);
    let loads = resource_loads(cfg, &choices0);
    (0..cfg.num_players()).map(|j0| utility0_from_loads(cfg, &choices0, j0, &loads)).sum()
}

/// Utility change for `player` from unilaterally switching to `new_resource`
/// (may be negative; exactly zero for the current resource).
pub fn deviation_gain(cfg: &GameConfig, profile: &StrategyProfile, player: usize, new_resource: usize) -> f64 {
    assert_player(cfg, player);
    assert_resource(cfg, new_resource);
    let choices0 = profile.to_zero_based();
    assert_profile(cfg, &choices0);
    let loads = resource_loads(cfg, &choices0);
    gain0_from_loads(cfg, &choices0, player - 1, new_resource - 1, &loads)
}

/// Whether no player can gain more than `epsilon` by any unilateral
/// deviation. `epsilon = 0` tests for a pure Nash equilibrium.
pub fn is_epsilon_pne(cfg: &GameConfig, profile: &StrategyProfile, epsilon: f64) -> bool {
    assert!(epsilon >= 0.0, "epsilon must be non-negative");
    let choices0 = profile.to_zero_based();
    assert_profile(cfg, &choices0);
    let loads = resource_loads(cfg, &choices0);
    max_gain0(cfg, &choices0, &loads) <= epsilon + EQ_TOL
}

/// All pure Nash equilibria, in lexicographic order.
///
/// Fails with an enumeration error when `K^N > cap`.
pub fn enumerate_pnes(cfg: &GameConfig, cap: u64) -> Result<Vec<StrategyProfile>> {
    cfg.guard_enumeration(cap)?;
    let mut pnes = Vec::new();
    for_each_profile(cfg.num_players(), cfg.num_resources(), |choices0| {
        let loads = resource_loads(cfg, choices0);
        if max_gain0(cfg, choices0, &loads) <= EQ_TOL {
            pnes.push(StrategyProfile::from_zero_based(choices0));
        }
    });
    Ok(pnes)
}

/// The welfare-maximal equilibria and their common welfare. Welfare ties
/// within tolerance are all reported. `(vec![], None)` when no PNE exists.
pub fn most_efficient_pnes(cfg: &GameConfig, cap: u64) -> Result<(Vec<StrategyProfile>, Option<f64>)> {
    let pnes = enumerate_pnes(cfg, cap)?;
    if pnes.is_empty() {
        return Ok((Vec::new(), None));
    }
    let welfares: Vec<f64> = pnes.iter().map(|p| welfare(cfg, p)).collect();
    let max_w = welfares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best = pnes
        .into_iter()
        .zip(&welfares)
        .filter(|(_, &w)| (max_w - w) <= EQ_TOL)
        .map(|(p, _)| p)
        .collect();
    Ok((best, Some(max_w)))
}

/// Margins separating equilibria from non-equilibria.
///
/// `delta_ne` is the smallest loss any deviation from any equilibrium incurs;
/// `delta_none` is the smallest, over non-equilibrium profiles, of the
/// largest available deviation gain. A profile fails to be a `d`-Nash
/// equilibrium exactly when some gain exceeds `d`, so `delta_none` realizes
/// the largest `d` for which every non-equilibrium is detectable. `delta` is
/// the minimum of the two; each side is `None` when its profile class is
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub delta_ne: Option<f64>,
    pub delta_none: Option<f64>,
    pub delta: Option<f64>,
    pub has_pne: bool,
}

/// Compute the gap quantities by exhaustive enumeration.
pub fn compute_gaps(cfg: &GameConfig, cap: u64) -> Result<GapReport> {
    cfg.guard_enumeration(cap)?;
    let mut delta_ne = f64::INFINITY;
    let mut delta_none = f64::INFINITY;
    let mut any_pne = false;
    let mut any_non_pne = false;
    for_each_profile(cfg.num_players(), cfg.num_resources(), |choices0| {
        let loads = resource_loads(cfg, choices0);
        let max_gain = max_gain0(cfg, choices0, &loads);
        if max_gain <= EQ_TOL {
            any_pne = true;
            // At an equilibrium the largest gain is the least negative, so
            // its negation is the smallest loss.
            let mut least_loss = f64::INFINITY;
            for j0 in 0..cfg.num_players() {
                for to0 in 0..cfg.num_resources() {
                    if to0 == choices0[j0] {
                        continue;
                    }
                    let loss = -gain0_from_loads(cfg, choices0, j0, to0, &loads);
                    if loss < least_loss {
                        least_loss = loss;
                    }
                }
            }
            delta_ne = delta_ne.min(least_loss.max(0.0));
        } else {
            any_non_pne = true;
            delta_none = delta_none.min(max_gain);
        }
    });
    let delta_ne = any_pne.then_some(delta_ne);
    let delta_none = any_non_pne.then_some(delta_none);
    let delta = match (delta_ne, delta_none) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    };
    Ok(GapReport { delta_ne, delta_none, delta, has_pne: any_pne })
}

/// A single deterministic improvement step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementStep {
    /// Deviating player, 1-based.
    pub player: usize,
    /// Target resource, 1-based.
    pub resource: usize,
    pub gain: f64,
}

/// The deterministic improvement-step rule: the lowest-index player with any
/// strictly improving deviation moves, taking their maximal-gain deviation
/// (ties broken by the lowest resource index). `None` at an equilibrium.
pub fn best_improvement_step(cfg: &GameConfig, profile: &StrategyProfile) -> Option<ImprovementStep> {
    let choices0 = profile.to_zero_based();
    assert_profile(cfg, &choices0);
    best_improvement_step0(cfg, &choices0)
}

fn best_improvement_step0(cfg: &GameConfig, choices0: &[usize]) -> Option<ImprovementStep> {
    let loads = resource_loads(cfg, choices0);
    for j0 in 0..cfg.num_players() {
        let mut best: Option<(usize, f64)> = None;
        for to0 in 0..cfg.num_resources() {
            let g = gain0_from_loads(cfg, choices0, j0, to0, &loads);
            if g > EQ_TOL && best.map_or(true, |(_, bg)| g > bg) {
                best = Some((to0, g));
            }
        }
        if let Some((to0, g)) = best {
            return Some(ImprovementStep { player: j0 + 1, resource: to0 + 1, gain: g });
        }
    }
    None
}

/// How an improvement path terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathOutcome {
    /// Reached a profile with no improving deviation (a PNE).
    Converged,
    /// Revisited an earlier profile; under the deterministic step rule the
    /// path is provably infinite.
    CycleDetected,
    /// Exhausted the step budget without converging or cycling.
    StepCapReached,
}

/// Result of running the deterministic improvement dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub outcome: PathOutcome,
    pub final_profile: StrategyProfile,
    pub steps_taken: usize,
    /// Step indices `(t1, t2)` with identical profiles when a cycle was found.
    pub cycle_witness: Option<(usize, usize)>,
}

/// Repeatedly apply [`best_improvement_step`] from `start`.
///
/// Every profile on the path is recorded; a revisit is reported as a cycle.
/// Memory is bounded by `max_steps`.
pub fn improvement_path(cfg: &GameConfig, start: &StrategyProfile, max_steps: usize) -> PathResult {
    assert!(max_steps >= 1, "max_steps must be at least 1");
    let mut current = start.to_zero_based();
    assert_profile(cfg, &current);
    let mut visited: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut t = 0usize;
    loop {
        if let Some(&t1) = visited.get(&current) {
            return PathResult {
                outcome: PathOutcome::CycleDetected,
                final_profile: StrategyProfile::from_zero_based(&current),
                steps_taken: t,
                cycle_witness: Some((t1, t)),
            };
        }
        visited.insert(current.clone(), t);
        match best_improvement_step0(cfg, &current) {
            None => {
                return PathResult {
                    outcome: PathOutcome::Converged,
                    final_profile: StrategyProfile::from_zero_based(&current),
                    steps_taken: t,
                    cycle_witness: None,
                }
            }
            Some(step) => {
                if t == max_steps {
                    return PathResult {
                        outcome: PathOutcome::StepCapReached,
                        final_profile: StrategyProfile::from_zero_based(&current),
                        steps_taken: t,
                        cycle_witness: None,
                    };
                }
                current[step.player - 1] = step.resource - 1;
                t += 1;
            }
        }
    }
}

/// Structural classification of a game against the known sufficient
/// conditions for equilibrium existence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFlags {
    /// Payoffs are long-tailed: for every resource pair one payoff ratio
    /// exceeds `n0 / eps0`.
    pub longtail: bool,
    /// Every player has one weight across all resources (constant rows).
    pub partially_heterogeneous: bool,
    /// All players share each resource's weight (constant columns).
    pub homogeneous_players: bool,
    /// All resource payoffs are equal.
    pub homogeneous_resources: bool,
    /// Largest number of positive-weight players on any resource.
    pub n0: usize,
    /// Smallest strictly positive weight.
    pub eps0: f64,
}

/// Classify a game against the structural existence conditions.
pub fn classify_scenario(cfg: &GameConfig) -> ScenarioFlags {
    let n = cfg.num_players();
    let k = cfg.num_resources();
    let n0 = (1..=k)
        .map(|c| (1..=n).filter(|&j| cfg.weight(j, c) > 0.0).count())
        .max()
        .expect("K >= 2");
    let eps0 = (1..=n)
        .flat_map(|j| (1..=k).map(move |c| (j, c)))
        .map(|(j, c)| cfg.weight(j, c))
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let threshold = n0 as f64 / eps0;
    let mut longtail = true;
    'outer: for a in 1..=k {
        for b in (a + 1)..=k {
            let r = cfg.payoff(a) / cfg.payoff(b);
            if !(r > threshold || 1.0 / r > threshold) {
                longtail = false;
                break 'outer;
            }
        }
    }
    let partially_heterogeneous =
        (1..=n).all(|j| (2..=k).all(|c| (cfg.weight(j, c) - cfg.weight(j, 1)).abs() <= EQ_TOL));
    let homogeneous_players =
        (1..=k).all(|c| (2..=n).all(|j| (cfg.weight(j, c) - cfg.weight(1, c)).abs() <= EQ_TOL));
    let homogeneous_resources = (2..=k).all(|c| (cfg.payoff(c) - cfg.payoff(1)).abs() <= EQ_TOL);
    ScenarioFlags {
        longtail,
        partially_heterogeneous,
        homogeneous_players,
        homogeneous_resources,
        n0,
        eps0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_three_resources() -> GameConfig {
        GameConfig::with_player_weights(vec![0.6, 0.4, 0.2], vec![1.0, 3.0 / 8.0, 1.0 / 4.0]).unwrap()
    }

    pub(crate) fn table3_game() -> GameConfig {
        GameConfig::with_player_weights(vec![1.0, 0.7], vec![1.0, 0.8, 0.4]).unwrap()
    }

    pub(crate) fn table4_game() -> GameConfig {
        GameConfig::with_player_weights(vec![1.0, 0.6], vec![1.0, 2.0 / 3.0, 4.0 / 9.0]).unwrap()
    }

    fn profile(cfg: &GameConfig, choices: &[usize]) -> StrategyProfile {
        StrategyProfile::new(choices.to_vec(), cfg).unwrap()
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        assert!(GameConfig::new(vec![0.5], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(GameConfig::new(vec![0.5, 0.5], vec![vec![1.0, 1.0]]).is_err());
        assert!(GameConfig::new(vec![0.0, 0.5], vec![vec![1.0; 2]; 2]).is_err());
        assert!(GameConfig::new(vec![1.5, 0.5], vec![vec![1.0; 2]; 2]).is_err());
        assert!(GameConfig::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(GameConfig::new(vec![0.5, 0.5], vec![vec![1.0, -0.1], vec![1.0, 0.5]]).is_err());
        assert!(GameConfig::new(vec![0.5, 0.5], vec![vec![1.0, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = table3_game();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: GameConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // Hand-written file format parses too.
        let cfg2: GameConfig = serde_json::from_str(
            r#"{"payoffs": [0.5, 0.25], "weights": [[1.0, 0.5], [0.5, 1.0]]}"#,
        )
        .unwrap();
        assert_eq!(cfg2.num_players(), 2);
        // Invalid content is rejected at parse time.
        assert!(serde_json::from_str::<GameConfig>(r#"{"payoffs": [2.0, 0.5], "weights": [[1,1],[1,1]]}"#).is_err());
    }

    #[test]
    fn utility_matches_worked_examples() {
        let cfg = example_three_resources();
        let p = profile(&cfg, &[1, 2, 3]);
        assert!((utility(&cfg, &p, 1) - 0.6).abs() <= EQ_TOL);
        assert!((welfare(&cfg, &p) - 1.2).abs() <= EQ_TOL);

        // Any player alone on a resource with positive weight gets the payoff.
        let alone = profile(&cfg, &[2, 1, 3]);
        assert!((utility(&cfg, &alone, 1) - 0.4).abs() <= EQ_TOL);

        // Two choosers with weights 1 and 0.375 on payoff 0.6 split it.
        let cfg2 = GameConfig::with_player_weights(vec![0.6, 0.4], vec![1.0, 0.375]).unwrap();
        let both = profile(&cfg2, &[1, 1]);
        let u1 = utility(&cfg2, &both, 1);
        let u2 = utility(&cfg2, &both, 2);
        assert!((u1 - 0.4363636363636364).abs() <= EQ_TOL);
        assert!((u2 - 0.16363636363636364).abs() <= EQ_TOL);
        assert!((u1 + u2 - 0.6).abs() <= EQ_TOL);

        // A zero-weight chooser sharing with a positive-weight chooser gets 0.
        let cfg3 = GameConfig::new(vec![0.6, 0.4], vec![vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let shared = profile(&cfg3, &[1, 1]);
        assert_eq!(utility(&cfg3, &shared, 2), 0.0);
        assert!((utility(&cfg3, &shared, 1) - 0.6).abs() <= EQ_TOL);
    }

    #[test]
    fn welfare_of_inefficient_profile() {
        let cfg = example_three_resources();
        assert!((welfare(&cfg, &profile(&cfg, &[2, 1, 1])) - 1.0).abs() <= EQ_TOL);
        // All players piled on one resource: welfare is that payoff alone.
        assert!((welfare(&cfg, &profile(&cfg, &[1, 1, 1])) - 0.6).abs() <= EQ_TOL);
    }

    #[test]
    fn deviation_gains_match_gap_table() {
        let cfg = table3_game();
        let g = deviation_gain(&cfg, &profile(&cfg, &[1, 1, 1]), 3, 2);
        assert!((g - 0.5181818181818182).abs() < 1e-12);
        assert_eq!(deviation_gain(&cfg, &profile(&cfg, &[1, 1, 1]), 2, 1), 0.0);
        let loss = deviation_gain(&cfg, &profile(&cfg, &[1, 2, 1]), 3, 2);
        assert!((loss + 0.05238095238095238).abs() < 1e-12);
    }

    #[test]
    fn epsilon_pne_thresholds() {
        let cfg = example_three_resources();
        assert!(is_epsilon_pne(&cfg, &profile(&cfg, &[1, 2, 3]), 0.0));
        let t3 = table3_game();
        let near = profile(&t3, &[1, 1, 2]);
        assert!(!is_epsilon_pne(&t3, &near, 0.0));
        assert!(is_epsilon_pne(&t3, &near, 0.03));
        assert!(is_epsilon_pne(&t3, &near, f64::MAX));
    }

    #[test]
    fn enumerates_known_equilibria() {
        let cfg = example_three_resources();
        let pnes = enumerate_pnes(&cfg, DEFAULT_ENUM_CAP).unwrap();
        let expect = vec![profile(&cfg, &[1, 2, 3]), profile(&cfg, &[2, 1, 1])];
        assert_eq!(pnes, expect);

        let cfg2 = GameConfig::with_player_weights(vec![1.0, 0.6], vec![1.0, 1.0]).unwrap();
        let pnes2 = enumerate_pnes(&cfg2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(pnes2, vec![profile(&cfg2, &[1, 2]), profile(&cfg2, &[2, 1])]);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let cfg = example_three_resources();
        match enumerate_pnes(&cfg, 8) {
            Err(Error::EnumerationTooLarge { profiles, cap }) => {
                assert_eq!(profiles, 27);
                assert_eq!(cap, 8);
            }
            other => panic!("expected enumeration error, got {other:?}"),
        }
    }

    #[test]
    fn most_efficient_selects_max_welfare() {
        let cfg = example_three_resources();
        let (best, w) = most_efficient_pnes(&cfg, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(best, vec![profile(&cfg, &[1, 2, 3])]);
        assert!((w.unwrap() - 1.2).abs() <= EQ_TOL);

        let cfg2 = GameConfig::with_player_weights(vec![1.0, 0.6], vec![1.0, 1.0]).unwrap();
        let (best2, w2) = most_efficient_pnes(&cfg2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(best2.len(), 2);
        assert!((w2.unwrap() - 1.6).abs() <= EQ_TOL);
    }

    #[test]
    fn gap_quantities_match_hand_enumeration() {
        let t3 = compute_gaps(&table3_game(), DEFAULT_ENUM_CAP).unwrap();
        assert!(t3.has_pne);
        assert!((t3.delta_ne.unwrap() - 0.05238095238095238).abs() < 1e-12);
        assert!((t3.delta_none.unwrap() - 0.022222222222222143).abs() < 1e-9);
        assert!((t3.delta.unwrap() - t3.delta_none.unwrap()).abs() <= EQ_TOL);

        let t4 = compute_gaps(&table4_game(), DEFAULT_ENUM_CAP).unwrap();
        assert!((t4.delta_ne.unwrap() - 0.04).abs() < 1e-9);
        assert!((t4.delta_none.unwrap() - 0.06769230769230769).abs() < 1e-9);
        assert!((t4.delta.unwrap() - t4.delta_ne.unwrap()).abs() <= EQ_TOL);

        // 2x2 all-ones game, derived exhaustively by hand: both gaps are 0.1.
        let cfg = GameConfig::with_player_weights(vec![1.0, 0.6], vec![1.0, 1.0]).unwrap();
        let g = compute_gaps(&cfg, DEFAULT_ENUM_CAP).unwrap();
        assert!((g.delta_ne.unwrap() - 0.1).abs() < 1e-12);
        assert!((g.delta_none.unwrap() - 0.1).abs() < 1e-12);
        assert!((g.delta.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn improvement_step_rule_is_deterministic() {
        let cfg = table3_game();
        assert!(best_improvement_step(&cfg, &profile(&cfg, &[1, 2, 1])).is_none());

        // From (2,2,2) player 1's best deviation is resource 1 (gain 1 - 0.318..).
        let step = best_improvement_step(&cfg, &profile(&cfg, &[2, 2, 2])).unwrap();
        assert_eq!((step.player, step.resource), (1, 1));
        assert!((step.gain - (1.0 - 0.7 / 2.2)).abs() < 1e-12);

        // From (1,1,1) player 1 moves to resource 2 (alone: 0.7 beats 1/2.2).
        let step = best_improvement_step(&cfg, &profile(&cfg, &[1, 1, 1])).unwrap();
        assert_eq!((step.player, step.resource), (1, 2));
        assert!((step.gain - (0.7 - 1.0 / 2.2)).abs() < 1e-12);
    }

    #[test]
    fn improvement_path_converges_on_small_games() {
        let cfg = example_three_resources();
        let at_pne = improvement_path(&cfg, &profile(&cfg, &[1, 2, 3]), 100);
        assert_eq!(at_pne.outcome, PathOutcome::Converged);
        assert_eq!(at_pne.steps_taken, 0);

        let from_pile = improvement_path(&cfg, &profile(&cfg, &[1, 1, 1]), 100);
        assert_eq!(from_pile.outcome, PathOutcome::Converged);
        assert!(is_epsilon_pne(&cfg, &from_pile.final_profile, 0.0));
        assert!(from_pile.steps_taken <= 27);
    }

    #[test]
    fn improvement_path_respects_step_cap() {
        let cfg = table3_game();
        let r = improvement_path(&cfg, &profile(&cfg, &[2, 2, 2]), 1);
        assert!(matches!(r.outcome, PathOutcome::StepCapReached | PathOutcome::Converged));
        if r.outcome == PathOutcome::StepCapReached {
            assert_eq!(r.steps_taken, 1);
        }
    }

    #[test]
    fn scenario_flags_follow_definitions() {
        let cfg = GameConfig::with_player_weights(vec![1.0, 0.4], vec![1.0, 1.0]).unwrap();
        let flags = classify_scenario(&cfg);
        assert_eq!(flags.n0, 2);
        assert!((flags.eps0 - 1.0).abs() <= EQ_TOL);
        assert!(flags.longtail, "ratio 2.5 exceeds threshold 2");
        assert!(flags.partially_heterogeneous);
        assert!(flags.homogeneous_players);
        assert!(!flags.homogeneous_resources);

        let near = GameConfig::with_player_weights(vec![1.0, 0.9], vec![1.0, 1.0]).unwrap();
        assert!(!classify_scenario(&near).longtail);

        let example = example_three_resources();
        let f = classify_scenario(&example);
        assert!(f.partially_heterogeneous);
        assert!(!f.homogeneous_players);
        assert!((f.eps0 - 0.25).abs() <= EQ_TOL);

        let cols = GameConfig::with_resource_weights(vec![0.5, 0.5], vec![0.9, 0.3], 3).unwrap();
        let fc = classify_scenario(&cols);
        assert!(fc.homogeneous_players);
        assert!(fc.homogeneous_resources);
        assert!(!fc.partially_heterogeneous);
    }

    #[test]
    fn max_normalization_is_reported_not_enforced() {
        assert!(table3_game().is_max_normalized());
        let cfg = GameConfig::new(vec![0.5, 0.5], vec![vec![0.7, 0.2], vec![0.3, 0.6]]).unwrap();
        assert!(!cfg.is_max_normalized());
    }
}
