use gauss_occ::supervision::{assignment_cost, brute_force_assignment, focal_loss, hungarian};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
        proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, m), n)
    })
}

proptest! {
    #[test]
    fn optimal_against_exhaustive_search(cost in matrix()) {
        let pairs = hungarian(&cost).unwrap();
        let (best, _) = brute_force_assignment(&cost);
        prop_assert_eq!(pairs.len(), cost.len().min(cost[0].len()));
        prop_assert!((assignment_cost(&cost, &pairs) - best).abs() <= 1e-9 * (1.0 + best.abs()));
    }

    #[test]
    fn row_shift_keeps_the_optimum(cost in matrix(), shift in -100.0f64..100.0, row in 0usize..6) {
        // adding a constant to one row changes every full assignment by the
        // same amount when each row is assigned (rows <= cols)
        prop_assume!(cost.len() <= cost[0].len());
        let row = row % cost.len();
        let mut shifted = cost.clone();
        for c in &mut shifted[row] {
            *c += shift;
        }
        let a = assignment_cost(&cost, &hungarian(&cost).unwrap());
        let b = assignment_cost(&shifted, &hungarian(&shifted).unwrap());
        prop_assert!((b - (a + shift)).abs() <= 1e-9 * (1.0 + a.abs() + shift.abs()));
    }

    #[test]
    fn pairs_form_an_injection(cost in matrix()) {
        let pairs = hungarian(&cost).unwrap();
        let mut rows: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<_> = pairs.iter().map(|p| p.1).collect();
        prop_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        cols.sort_unstable();
        cols.dedup();
        rows.dedup();
        prop_assert_eq!(cols.len(), rows.len());
    }

    #[test]
    fn focal_loss_is_finite_and_nonnegative(z in -200.0f64..200.0, target: bool, alpha in 0.01f64..0.99, gamma in 0.0f64..5.0) {
        let (l, g) = focal_loss(z, target, alpha, gamma);
        prop_assert!(l.is_finite() && l >= 0.0);
        prop_assert!(g.is_finite());
        // pushing the logit toward the target never increases the loss
        if target { prop_assert!(g <= 0.0) } else { prop_assert!(g >= 0.0) }
    }
}
