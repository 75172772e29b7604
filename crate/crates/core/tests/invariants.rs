//! Property tests over random scenarios and LPs.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force_schedule, random_lp, vertex_enumeration};
use v2vsched_core::{
    build_scenario, build_scheduling, decode, evaluate, run_cutting_plane, solve_lp, solve_milp, AcirProfile,
    CutplaneBudget, CutplaneStatus, EvalOptions, FixedPowers, FormulationOptions, RadioParams, Scenario, SolveStatus,
    SolverOptions, VariantFlags,
};

fn scenario(n: usize, f: usize, t: usize, seed: u64) -> Scenario {
    build_scenario(n, f, t, &RadioParams::table_ii(), &AcirProfile::three_gpp(), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_optimum_matches_vertex_enumeration(seed in any::<u64>()) {
        let m = random_lp(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let sol = solve_lp(&m, &SolverOptions::default()).unwrap();
        match vertex_enumeration(&m) {
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!((sol.objective - v).abs() <= 1e-7 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn scenario_json_round_trip_is_exact(n in 2usize..8, f in 1usize..4, t in 1usize..3, seed in any::<u64>()) {
        let s = scenario(n, f, t, seed);
        let text = s.to_json().unwrap();
        prop_assert_eq!(Scenario::from_json(&text).unwrap().to_json().unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scheduling_milp_matches_enumeration(n in 3usize..5, f in 2usize..4, t in 1usize..3, seed in any::<u64>()) {
        let s = scenario(n, f, t, seed);
        let p = FixedPowers::max_power(&s);
        let oracle = brute_force_schedule(&s, &p, EvalOptions::default());
        let form = build_scheduling(&s, &VariantFlags::scheduling(p), &FormulationOptions::robust_exact_threshold()).unwrap();
        let opts = SolverOptions { objective_step: form.objective_step(), ..SolverOptions::default() };
        let sol = solve_milp(&form.model, &opts).unwrap();
        let dec = decode(&form, &s, &sol.values).unwrap();
        let physical = evaluate(&s, &dec.schedule, &dec.powers).unwrap().objective;
        prop_assert_eq!(physical, oracle);
    }

    #[test]
    fn converged_cutting_plane_has_no_false_claims(n in 3usize..5, f in 2usize..4, seed in any::<u64>()) {
        let s = scenario(n, f, 1, seed);
        let p = FixedPowers::max_power(&s);
        let r = run_cutting_plane(&s, &p, &VariantFlags::default(), &CutplaneBudget::default()).unwrap();
        prop_assert_eq!(r.status, CutplaneStatus::Converged);
        prop_assert_eq!(r.trace.last().unwrap().false_claims, 0);
        prop_assert_eq!(r.outcome.objective, brute_force_schedule(&s, &p, EvalOptions::default()));
    }
}
