use super::StaticGame;

/// `Σ_{j,k} q − Σ_{j,k} α q + W (1 − Σ_j α_j·ω_j / C)` for binary `α`
/// (`alpha[j][k]`, 1 = submit).
pub fn potential_value(game: &StaticGame, alpha: &[Vec<u8>]) -> f64 {
    let mut q_total = 0.0;
    let mut q_submitted = 0.0;
    let mut load = 0.0;
    for (p, a) in game.players.iter().zip(alpha) {
        for k in 0..p.q.len() {
            q_total += p.q[k];
            if a[k] == 1 {
                q_submitted += p.q[k];
                load += p.omega[k];
            }
        }
    }
    q_total - q_submitted + game.w * (1.0 - load / game.capacity)
}

/// Player `i`'s utility in the low-contention reduction:
/// `Σ_k q_ik − Σ_k α_ik q_ik + W (1 − Σ_j α_j·ω_j / C)`.
pub fn low_contention_utility(game: &StaticGame, alpha: &[Vec<u8>], i: usize) -> f64 {
    let p = &game.players[i];
    let own: f64 = (0..p.q.len())
        .map(|k| if alpha[i][k] == 1 { 0.0 } else { p.q[k] })
        .sum();
    let load: f64 = game
        .players
        .iter()
        .zip(alpha)
        .map(|(pl, a)| (0..pl.omega.len()).filter(|&k| a[k] == 1).map(|k| pl.omega[k]).sum::<f64>())
        .sum();
    own + game.w * (1.0 - load / game.capacity)
}

/// True when the deviator's utility change, computed from the full
/// auction-based static utility, equals the potential change to 1e-9.
/// Returns the residual alongside.
pub fn check_potential_identity(
    game: &StaticGame,
    alpha: &[Vec<u8>],
    deviator: usize,
    new_alpha: &[u8],
) -> (bool, f64) {
    let mut deviated = alpha.to_vec();
    deviated[deviator] = new_alpha.to_vec();
    let du = super::static_utility(game, &game.profile_from_alpha(alpha), deviator)
        - super::static_utility(game, &game.profile_from_alpha(&deviated), deviator);
    let dphi = potential_value(game, alpha) - potential_value(game, &deviated);
    let residual = (du - dphi).abs();
    (residual <= 1e-9, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gametheory::StaticPlayer;

    fn game() -> StaticGame {
        let player = StaticPlayer {
            q: vec![1.0],
            omega: vec![2.0],
            v: vec![5.0],
            c: 1.0,
            budget: 10.0,
        };
        StaticGame::low_contention(vec![player.clone(), player], 10.0, 1.0)
    }

    #[test]
    fn potential_examples() {
        let g = game();
        assert!((potential_value(&g, &[vec![0], vec![0]]) - 3.0).abs() < 1e-12);
        assert!((potential_value(&g, &[vec![1], vec![1]]) - 0.6).abs() < 1e-12);
        assert!((potential_value(&g, &[vec![0], vec![1]]) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn identity_examples() {
        let g = game();
        let from = [vec![1], vec![1]];
        let du = low_contention_utility(&g, &from, 0) - low_contention_utility(&g, &[vec![0], vec![1]], 0);
        assert!((du + 1.2).abs() < 1e-12);
        assert!(check_potential_identity(&g, &from, 0, &[0]).0);
        assert_eq!(check_potential_identity(&g, &from, 0, &[1]), (true, 0.0));
    }
}
