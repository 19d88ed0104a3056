use super::*;
use crate::data::{generate_synthetic, SocialGraph};
use crate::inference::{AbilityGranularity, InferenceConfig, InferredParams};
use crate::values::{PeerFamily, PeerLeadershipModel, ValueModel, ValueModelConfig};

fn linear_peer() -> PeerLeadershipModel<f64> {
    PeerLeadershipModel::new(PeerFamily::Linear, vec![1.0, 0.0]).unwrap()
}

fn synthetic(n: usize, m: usize, seed: u64) -> Game<f64> {
    let d = generate_synthetic(n, m, 2.0, 0.6, seed).unwrap();
    let model = ValueModel::fit(&d, &ValueModelConfig::default()).unwrap();
    let cfg = InferenceConfig {
        granularity: AbilityGranularity::Category,
        seed,
        ..Default::default()
    };
    let params = InferredParams::infer(&d, &cfg).unwrap();
    Game::new(&model, &params)
}

#[test]
fn single_user_matches_standalone_knapsack() {
    let fixed = vec![0.5, 0.4, 0.3, 0.05];
    let ability = vec![0.4, 0.3, 0.2, 0.1];
    let thetas = vec![0.1, 0.1, 0.02, 0.01];
    let g = Game::from_parts(
        SocialGraph::from_edges(1, []),
        linear_peer(),
        0.5,
        fixed.clone(),
        ability.clone(),
        vec![0.6],
        thetas.clone(),
    );
    let r = g.run_dynamics(&DynamicsConfig::default());
    assert!(r.converged);
    assert!(r.rounds <= 2);
    assert_eq!(
        r.profile[0],
        best_response(&fixed, &ability, 0.6, &thetas, 1e-3)
    );
    assert!(!r.profile[0].is_zero());
}

#[test]
fn friend_adoption_spreads() {
    let graph = SocialGraph::from_edges(2, [(0, 1)]);
    let g = Game::from_parts(
        graph,
        linear_peer(),
        1.0,
        vec![0.5, 0.1],
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![0.3],
    );
    for seed in 0..6 {
        let r = g.run_dynamics(&DynamicsConfig {
            seed,
            ..Default::default()
        });
        assert!(r.converged);
        assert!(r.rounds <= 3);
        assert_eq!(r.profile[0].effort(0), 0.3);
        assert_eq!(r.profile[1].effort(0), 0.3);
    }
}

#[test]
fn nothing_worth_it() {
    let graph = SocialGraph::from_edges(3, [(0, 1), (1, 2)]);
    let g = Game::from_parts(
        graph,
        linear_peer(),
        0.0,
        vec![0.1; 6],
        vec![0.5; 6],
        vec![1.0; 3],
        vec![0.2, 0.3],
    );
    let r = g.run_dynamics(&DynamicsConfig::default());
    assert!(r.converged);
    assert_eq!(r.rounds, 1);
    assert!(r.profile.iter().all(Strategy::is_zero));
}

#[test]
fn free_badges_are_held_without_effort() {
    let g = Game::from_parts(
        SocialGraph::from_edges(2, [(0, 1)]),
        linear_peer(),
        0.5,
        vec![0.2; 2],
        vec![0.5; 2],
        vec![1.0; 2],
        vec![0.0],
    );
    let r = g.run_dynamics(&DynamicsConfig::default());
    assert!(r.profile.iter().all(Strategy::is_zero));
    assert_eq!(g.indicators(&r.profile), vec![true, true]);
}

#[test]
fn synthetic_run_is_an_equilibrium() {
    let g = synthetic(50, 20, 3);
    let cfg = DynamicsConfig {
        seed: 11,
        ..Default::default()
    };
    let r = g.run_dynamics(&cfg);
    assert!(r.converged);
    for (u, s) in r.profile.iter().enumerate() {
        assert!(s.total() <= g.budget(u));
        for (b, _) in s.iter() {
            assert!(g.holds(u, b, s));
        }
    }
    let report = g.epsilon_nash_check(&r, 1e-3 * 20.0);
    assert!(report.passes, "{report:?}");
    assert_eq!(report.max_improvement, 0.0);
    assert_eq!(g.run_dynamics(&cfg), r);
}

#[test]
fn per_round_refresh_converges() {
    let g = synthetic(50, 20, 4);
    let r = g.run_dynamics(&DynamicsConfig {
        refresh: RefreshMode::PerRound,
        ..Default::default()
    });
    assert!(r.converged);
    assert!(g.epsilon_nash_check(&r, 0.02).passes);
}

#[test]
fn perturbed_profile_is_caught() {
    let fixed = vec![0.5, 0.4];
    let g = Game::from_parts(
        SocialGraph::from_edges(1, []),
        linear_peer(),
        0.0,
        fixed,
        vec![0.5, 0.5],
        vec![1.0],
        vec![0.1, 0.1],
    );
    let mut r = g.run_dynamics(&DynamicsConfig::default());
    assert_eq!(g.epsilon_nash_check(&r, 0.0).max_improvement, 0.0);
    r.profile[0] = Strategy::zero();
    let report = g.epsilon_nash_check(&r, 0.0);
    assert!(!report.passes);
    assert!((report.max_improvement - 0.5).abs() < 1e-12);
}

#[test]
fn domination_classes() {
    assert_eq!(
        classify_domination(&[2.0, 3.0], &[1.0, 2.0]),
        Domination::Strict
    );
    assert_eq!(
        classify_domination(&[2.0, 3.0], &[2.0, 2.0]),
        Domination::Weak
    );
    assert_eq!(
        classify_domination(&[2.0, 3.0], &[2.0, 3.0]),
        Domination::VeryWeak
    );
    assert_eq!(
        classify_domination(&[2.0, 1.0], &[1.0, 2.0]),
        Domination::None
    );

    let graph = SocialGraph::from_edges(2, [(0, 1)]);
    let g = Game::from_parts(
        graph,
        linear_peer(),
        1.0,
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![0.3],
    );
    let adopt = Strategy::from_efforts([(0, 0.3)]);
    let zero = Strategy::zero();
    let friend_in = vec![zero.clone(), adopt.clone()];
    let friend_out = vec![zero.clone(), zero.clone()];
    assert_eq!(
        g.compare_strategies(0, &adopt, &zero, std::slice::from_ref(&friend_in)),
        Domination::Strict
    );
    assert_eq!(
        g.compare_strategies(0, &adopt, &zero, &[friend_in, friend_out]),
        Domination::None
    );
}
