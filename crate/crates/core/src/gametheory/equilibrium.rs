use std::collections::BTreeMap;

use super::GameError;
use crate::agent::utility_per_type;
use crate::auction::{clear_auction, Bid};
use crate::sim::{derive_stream, SimTime};

const PROFILE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticPlayer {
    /// Backoff reward per type.
    pub q: Vec<f64>,
    /// Resource demand per type.
    pub omega: Vec<f64>,
    /// Valuation per type.
    pub v: Vec<f64>,
    pub c: f64,
    pub budget: f64,
}

/// One-shot game: each player picks, per service type, whether to submit
/// and at which price level.
#[derive(Debug, Clone)]
pub struct StaticGame {
    pub players: Vec<StaticPlayer>,
    pub capacity: f64,
    pub w: f64,
    /// Auction slots per type.
    pub slots: Vec<u32>,
    /// Price levels available to each player.
    pub price_levels: Vec<Vec<f64>>,
}

/// A player's per-type choice: `None` backs off, `Some(level)` submits at
/// `price_levels[player][level]`.
pub type PlayerAction = Vec<Option<usize>>;
pub type Profile = Vec<PlayerAction>;

impl StaticGame {
    /// Every player may submit at price 0 and slots cover all players, so
    /// all bids are accepted and free.
    pub fn low_contention(players: Vec<StaticPlayer>, capacity: f64, w: f64) -> StaticGame {
        let types = players.first().map_or(0, |p| p.q.len());
        let n = players.len() as u32;
        let price_levels = vec![vec![0.0]; players.len()];
        StaticGame { players, capacity, w, slots: vec![n; types], price_levels }
    }

    pub fn types(&self) -> usize {
        self.slots.len()
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.capacity > 0.0) {
            return Err(GameError::Invalid("capacity must be positive".into()));
        }
        if self.price_levels.len() != self.players.len() {
            return Err(GameError::Invalid("one price grid per player".into()));
        }
        for (i, p) in self.players.iter().enumerate() {
            let k = self.types();
            if p.q.len() != k || p.omega.len() != k || p.v.len() != k {
                return Err(GameError::Invalid(format!("player {i} has wrong type count")));
            }
            if p.v.iter().any(|&v| v > p.budget) {
                return Err(GameError::Invalid(format!("player {i} valuation exceeds budget")));
            }
            if self.price_levels[i].is_empty() {
                return Err(GameError::Invalid(format!("player {i} has an empty price grid")));
            }
        }
        Ok(())
    }

    /// Profile submitting at the first price level wherever `alpha` is 1.
    pub fn profile_from_alpha(&self, alpha: &[Vec<u8>]) -> Profile {
        alpha
            .iter()
            .map(|a| a.iter().map(|&x| (x == 1).then_some(0)).collect())
            .collect()
    }

    fn actions_per_player(&self, i: usize) -> u128 {
        (self.price_levels[i].len() as u128 + 1).pow(self.types() as u32)
    }

    fn decode_action(&self, i: usize, mut index: u128) -> PlayerAction {
        let radix = self.price_levels[i].len() as u128 + 1;
        (0..self.types())
            .map(|_| {
                let digit = (index % radix) as usize;
                index /= radix;
                digit.checked_sub(1)
            })
            .collect()
    }
}

/// Expected utility of player `i` under `profile`: second-price clearing
/// per type with exact win probabilities for ties at the slot boundary, plus
/// the shared utilization term.
pub fn static_utility(game: &StaticGame, profile: &Profile, i: usize) -> f64 {
    let mut bids = Vec::new();
    for (j, action) in profile.iter().enumerate() {
        for (k, choice) in action.iter().enumerate() {
            if let Some(level) = choice {
                bids.push(Bid {
                    request_id: (j * game.types() + k) as u64,
                    bidder: j,
                    service_type: k,
                    price: game.price_levels[j][*level],
                    resource_estimate: game.players[j].omega[k],
                    deadline: SimTime::ZERO,
                    rebid_count: 0,
                    created: SimTime::ZERO,
                });
            }
        }
    }
    let slots: BTreeMap<usize, u32> = game.slots.iter().copied().enumerate().collect();
    // Payments do not depend on the tie draw, so any stream will do.
    let mut rng = derive_stream(0, "static-game");
    let outcome = clear_auction(SimTime::ZERO, &bids, &slots, &mut rng).expect("grid prices are valid");

    let player = &game.players[i];
    let mut total = 0.0;
    for (k, choice) in profile[i].iter().enumerate() {
        let Some(level) = choice else {
            total += player.q[k];
            continue;
        };
        let own = game.price_levels[i][*level];
        let prices = bids.iter().filter(|b| b.service_type == k).map(|b| b.price);
        let higher = prices.clone().filter(|&p| p > own).count() as f64;
        let tied = prices.filter(|&p| p == own).count() as f64;
        let n = game.slots[k] as f64;
        let p_win = ((n - higher) / tied).clamp(0.0, 1.0);
        let pay = outcome.per_type.get(&k).map_or(0.0, |c| c.payment);
        let (v, c, q) = (player.v[k], player.c, player.q[k]);
        total += p_win * utility_per_type(true, v, pay, c, q, true)
            + (1.0 - p_win) * utility_per_type(false, v, pay, c, q, true);
    }
    let load: f64 = profile
        .iter()
        .enumerate()
        .map(|(j, a)| {
            a.iter()
                .enumerate()
                .filter(|(_, c)| c.is_some())
                .map(|(k, _)| game.players[j].omega[k])
                .sum::<f64>()
        })
        .sum();
    total + game.w * (1.0 - load / game.capacity)
}

/// All pure profiles in which no player gains by a unilateral deviation on
/// its grid (gains up to 1e-12 are treated as ties).
pub fn enumerate_pure_ne(game: &StaticGame) -> Result<Vec<Profile>, GameError> {
    game.validate()?;
    let n = game.players.len();
    let sizes: Vec<u128> = (0..n).map(|i| game.actions_per_player(i)).collect();
    let total = sizes.iter().try_fold(1u128, |acc, &s| acc.checked_mul(s)).unwrap_or(u128::MAX);
    if total > PROFILE_LIMIT {
        return Err(GameError::TooLarge(total));
    }
    let total = total as usize;
    let actions: Vec<Vec<PlayerAction>> = (0..n)
        .map(|i| (0..sizes[i]).map(|a| game.decode_action(i, a)).collect())
        .collect();
    // Mixed-radix index: player 0 is the least significant digit.
    let mut stride = vec![1usize; n];
    for i in 1..n {
        stride[i] = stride[i - 1] * sizes[i - 1] as usize;
    }
    let digit = |index: usize, i: usize| (index / stride[i]) % sizes[i] as usize;

    let mut utilities = vec![0.0; total * n];
    for index in 0..total {
        let profile: Profile = (0..n).map(|i| actions[i][digit(index, i)].clone()).collect();
        for i in 0..n {
            utilities[index * n + i] = static_utility(game, &profile, i);
        }
    }

    let mut equilibria = Vec::new();
    'profiles: for index in 0..total {
        for i in 0..n {
            let own = digit(index, i);
            let base = index - own * stride[i];
            let current = utilities[index * n + i];
            for alt in 0..sizes[i] as usize {
                if utilities[(base + alt * stride[i]) * n + i] > current + 1e-12 {
                    continue 'profiles;
                }
            }
        }
        equilibria.push((0..n).map(|i| actions[i][digit(index, i)].clone()).collect());
    }
    Ok(equilibria)
}
