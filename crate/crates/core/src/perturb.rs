//! Perturbed games: per-player payoff estimates plus small random offsets.
//!
//! Learners cannot observe true payoffs, only estimates, and a game may have
//! several equally efficient equilibria. Building the game from per-player
//! estimates `mu_hat[j][k]` and adding an independent uniform perturbation
//! `gamma[j][k]` to each player's chosen-resource utility makes the
//! welfare-maximal equilibrium unique with probability one while preserving
//! the equilibrium set, provided the estimate error and the perturbation
//! range are small relative to the game's gap margin. The certificate below
//! checks exactly those preconditions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    for_each_profile, resource_loads, share, GameConfig, GapReport, StrategyProfile, EQ_TOL,
};

/// A game built from per-player payoff estimates and frozen perturbations.
///
/// The true game is kept alongside for oracle-style cross-checks; the
/// perturbed utilities never read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedGame {
    base: GameConfig,
    mu_hat: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    gamma_range: f64,
}

/// Validity check for the unique-efficient-equilibrium guarantee: estimate
/// error `Delta` below `delta / 4K` and perturbation range at most
/// `delta / 4N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCertificate {
    /// Largest discrepancy between estimated and true payoffs.
    pub delta_estimate_error: f64,
    /// The game's gap margin the conditions are measured against.
    pub delta: f64,
    pub cond_delta_ok: bool,
    pub cond_gamma_ok: bool,
}

impl PerturbationCertificate {
    pub fn certified(&self) -> bool {
        self.cond_delta_ok && self.cond_gamma_ok
    }
}

/// Sample an `n x k` matrix of i.i.d. perturbations uniform on `[0, Gamma]`.
pub fn sample_gamma(
    num_players: usize,
    num_resources: usize,
    gamma_range: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    if !gamma_range.is_finite() || gamma_range < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "perturbation range must be non-negative, got {gamma_range}"
        )));
    }
    Ok((0..num_players)
        .map(|_| (0..num_resources).map(|_| rng.random::<f64>() * gamma_range).collect())
        .collect())
}

impl PerturbedGame {
    pub fn new(
        base: GameConfig,
        mu_hat: Vec<Vec<f64>>,
        gamma: Vec<Vec<f64>>,
        gamma_range: f64,
    ) -> Result<Self> {
        let n = base.num_players();
        let k = base.num_resources();
        let check_shape = |m: &Vec<Vec<f64>>, name: &str| -> Result<()> {
            if m.len() != n || m.iter().any(|row| row.len() != k) {
                return Err(Error::InvalidArgument(format!("{name} matrix must be {n}x{k}")));
            }
            Ok(())
        };
        check_shape(&mu_hat, "estimate")?;
        check_shape(&gamma, "perturbation")?;
        if mu_hat.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("estimates must be finite".into()));
        }
        if gamma.iter().flatten().any(|&g| !g.is_finite() || g < 0.0 || g > gamma_range) {
            return Err(Error::InvalidArgument(format!(
                "perturbations must lie in [0, {gamma_range}]"
            )));
        }
        Ok(PerturbedGame { base, mu_hat, gamma, gamma_range })
    }

    /// Perturbed game with exact estimates and zero perturbation; its
    /// utilities coincide with the base game's.
    pub fn exact(base: GameConfig) -> Self {
        let n = base.num_players();
        let k = base.num_resources();
        let mu_hat = (0..n).map(|_| base.payoffs().to_vec()).collect();
        let gamma = vec![vec![0.0; k]; n];
        PerturbedGame { base, mu_hat, gamma, gamma_range: 0.0 }
    }

    /// Perturbed game with freshly sampled perturbations on `[0, Gamma]`.
    pub fn with_sampled_gamma(
        base: GameConfig,
        mu_hat: Vec<Vec<f64>>,
        gamma_range: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let gamma = sample_gamma(base.num_players(), base.num_resources(), gamma_range, rng)?;
        Self::new(base, mu_hat, gamma, gamma_range)
    }

    pub fn base(&self) -> &GameConfig {
        &self.base
    }

    pub fn gamma_range(&self) -> f64 {
        self.gamma_range
    }

    /// Player `player`'s perturbed utility: the proportional share computed
    /// with their own payoff estimate, plus their perturbation for the chosen
    /// resource. The share follows the same zero-denominator rule as the true
    /// game; the perturbation is added regardless, modeling a fixed
    /// action-preference offset independent of occupancy.
    pub fn perturbed_utility(&self, profile: &StrategyProfile, player: usize) -> f64 {
        assert!(
            player >= 1 && player <= self.base.num_players(),
            "player index {player} outside 1..={}",
            self.base.num_players()
        );
        let choices0 = profile.to_zero_based();
        assert_eq!(choices0.len(), self.base.num_players());
        let loads = resource_loads(&self.base, &choices0);
        self.utility0(&choices0, player - 1, &loads)
    }

    fn utility0(&self, choices0: &[usize], j0: usize, loads: &[f64]) -> f64 {
        let c0 = choices0[j0];
        share(self.mu_hat[j0][c0], self.base.weight(j0 + 1, c0 + 1), loads[c0]) + self.gamma[j0][c0]
    }

    fn gain0(&self, choices0: &[usize], j0: usize, to0: usize, loads: &[f64]) -> f64 {
        let from0 = choices0[j0];
        if to0 == from0 {
            return 0.0;
        }
        let w_to = self.base.weight(j0 + 1, to0 + 1);
        let new_u = share(self.mu_hat[j0][to0], w_to, loads[to0] + w_to) + self.gamma[j0][to0];
        new_u - self.utility0(choices0, j0, loads)
    }

    fn max_gain0(&self, choices0: &[usize], loads: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for j0 in 0..self.base.num_players() {
            for to0 in 0..self.base.num_resources() {
                let g = self.gain0(choices0, j0, to0, loads);
                if g > best {
                    best = g;
                }
            }
        }
        best
    }

    /// Total perturbed welfare of a profile.
    pub fn perturbed_welfare(&self, profile: &StrategyProfile) -> f64 {
        let choices0 = profile.to_zero_based();
        let loads = resource_loads(&self.base, &choices0);
        (0..self.base.num_players()).map(|j0| self.utility0(&choices0, j0, &loads)).sum()
    }

    /// All pure Nash equilibria of the perturbed game, lexicographic.
    pub fn enumerate_pnes(&self, cap: u64) -> Result<Vec<StrategyProfile>> {
        self.base.guard_enumeration(cap)?;
        let mut pnes = Vec::new();
        for_each_profile(self.base.num_players(), self.base.num_resources(), |choices0| {
            let loads = resource_loads(&self.base, choices0);
            if self.max_gain0(choices0, &loads) <= EQ_TOL {
                pnes.push(StrategyProfile::from_zero_based(choices0));
            }
        });
        Ok(pnes)
    }

    /// Welfare-maximal equilibria of the perturbed game (ties within
    /// tolerance all reported) and their common welfare.
    pub fn efficient_pnes(&self, cap: u64) -> Result<(Vec<StrategyProfile>, Option<f64>)> {
        let pnes = self.enumerate_pnes(cap)?;
        if pnes.is_empty() {
            return Ok((Vec::new(), None));
        }
        let welfares: Vec<f64> = pnes.iter().map(|p| self.perturbed_welfare(p)).collect();
        let max_w = welfares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let best = pnes
            .into_iter()
            .zip(&welfares)
            .filter(|(_, &w)| (max_w - w) <= EQ_TOL)
            .map(|(p, _)| p)
            .collect();
        Ok((best, Some(max_w)))
    }

    /// The most efficient equilibrium of the perturbed game, or `None` when
    /// no equilibrium exists. Exact welfare ties (probability-zero events
    /// under continuous perturbations) resolve to the lexicographically
    /// smallest profile.
    pub fn most_efficient_pne(&self, cap: u64) -> Result<Option<StrategyProfile>> {
        let (mut best, _) = self.efficient_pnes(cap)?;
        Ok(if best.is_empty() { None } else { Some(best.remove(0)) })
    }

    /// Check the preconditions of the unique-efficient-equilibrium guarantee
    /// against the true game's gap report. Errors when the true game has no
    /// equilibrium, since the guarantee is then vacuous.
    pub fn certify(&self, gaps: &GapReport) -> Result<PerturbationCertificate> {
        if !gaps.has_pne {
            return Err(Error::NoPne(
                "perturbation certificate requires the true game to have a PNE".into(),
            ));
        }
        let delta = gaps.delta.expect("gap defined when a PNE exists");
        let n = self.base.num_players() as f64;
        let k = self.base.num_resources() as f64;
        let delta_estimate_error = self
            .mu_hat
            .iter()
            .flat_map(|row| row.iter().enumerate())
            .map(|(c0, &m)| (m - self.base.payoff(c0 + 1)).abs())
            .fold(0.0f64, f64::max);
        Ok(PerturbationCertificate {
            delta_estimate_error,
            delta,
            cond_delta_ok: delta_estimate_error < delta / (4.0 * k),
            cond_gamma_ok: self.gamma_range <= delta / (4.0 * n),
        })
    }
}
