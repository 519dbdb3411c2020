//! Property tests for the structural invariants: oracle consistency,
//! maximal-function laws, decomposition postconditions, and tail
//! monotonicity.

use proptest::prelude::*;
use weightlab::geometry::{
    cz_decompose, is_exact_disjoint_cover, whitney_decompose, Cube, DyadicCube, GridSet,
};
use weightlab::maximal::{hl_maximal, GridFunction};
use weightlab::tails::discrete_tail;
use weightlab::weights::{GridWeight, Weight};

fn grid_weight_1d(values: Vec<f64>) -> Weight {
    let boxc = Cube::interval(0.0, 1.0).unwrap();
    Weight::grid(GridWeight::new(boxc, values.len(), values).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn avg_linearity_and_consistency(
        mut values in prop::collection::vec(0.0..8.0f64, 16),
        c in 1u32..16,
        lo in 0.0..0.4f64,
        len in 0.1..0.5f64,
    ) {
        values[0] += 0.125; // not identically zero
        let w = grid_weight_1d(values);
        let q = Cube::interval(lo, lo + len).unwrap();
        // integral = avg · volume
        prop_assert!((w.integral(&q) - w.avg(&q) * q.volume()).abs() <= 1e-12 * (1.0 + w.integral(&q)));
        // avg(c·w) = c·avg(w) for scalar weights (exact for powers of two)
        let wc = w.scaled(c as f64);
        prop_assert!((wc.avg(&q) - c as f64 * w.avg(&q)).abs() <= 1e-12 * (1.0 + wc.avg(&q)));
    }

    #[test]
    fn grid_avg_is_mean_of_children(mut values in prop::collection::vec(0.0..8.0f64, 32)) {
        values[3] += 0.5;
        let w = grid_weight_1d(values);
        let parent = Cube::interval(0.25, 0.75).unwrap();
        let left = Cube::interval(0.25, 0.5).unwrap();
        let right = Cube::interval(0.5, 0.75).unwrap();
        let mean = 0.5 * (w.avg(&left) + w.avg(&right));
        prop_assert!((w.avg(&parent) - mean).abs() <= 1e-12 * (1.0 + mean));
    }

    #[test]
    fn maximal_dominates_and_is_sublinear(
        f in prop::collection::vec(0.0..4.0f64, 64),
        g in prop::collection::vec(0.0..4.0f64, 64),
    ) {
        let boxc = Cube::interval(0.0, 1.0).unwrap();
        let ff = GridFunction::new(boxc, 64, f.clone()).unwrap();
        let gg = GridFunction::new(boxc, 64, g.clone()).unwrap();
        let sum = GridFunction::new(boxc, 64, f.iter().zip(&g).map(|(a, b)| a + b).collect()).unwrap();
        let mf = hl_maximal(&ff);
        let mg = hl_maximal(&gg);
        let ms = hl_maximal(&sum);
        for i in 0..64 {
            prop_assert!(mf.values()[i] >= f[i]);
            prop_assert!(ms.values()[i] <= mf.values()[i] + mg.values()[i] + 1e-12);
        }
    }

    #[test]
    fn whitney_postconditions_on_random_masks(
        seed_mask in prop::collection::vec(prop::bool::ANY, 32),
    ) {
        let boxc = Cube::interval(0.0, 1.0).unwrap();
        let omega = GridSet::new(boxc, 32, seed_mask).unwrap();
        let cubes = whitney_decompose(&omega, 1.0, None).unwrap();
        prop_assert!(is_exact_disjoint_cover(&cubes, &omega));
        for w in &cubes {
            prop_assert!(w.ratio >= 5.0 - 1e-12 && w.ratio <= 15.0 + 1e-12);
        }
    }

    #[test]
    fn cz_sandwich_on_dyadic_weights(
        raw in prop::collection::vec(0u32..(1 << 12), 32),
        lambda_num in 1u32..20,
    ) {
        // dyadic-rational values make all grid sums exact in f64
        let quantum = 2f64.powi(-10);
        let mut values: Vec<f64> = raw.iter().map(|&k| k as f64 * quantum).collect();
        values[7] += 1.0;
        let boxc = Cube::interval(0.0, 1.0).unwrap();
        let w = Weight::grid(GridWeight::new(boxc, 32, values).unwrap());
        let root_avg = w.avg(&boxc);
        let lambda = root_avg * (1.0 + lambda_num as f64 / 4.0);
        let cubes = cz_decompose(&|q: &Cube| w.avg(q), &boxc, lambda, 5).unwrap();
        let mut omega_measure = 0.0f64;
        let mut omega_mass = 0.0f64;
        for d in &cubes {
            let q = d.realize(&boxc);
            let avg = w.avg(&q);
            // strict sandwich per cube with zero tolerance
            prop_assert!(avg > lambda, "selected cube must exceed lambda");
            prop_assert!(avg <= 4.0 * lambda, "selected cube average caps at 2^n lambda");
            // maximality: the parent does not exceed lambda
            let parent = d.parent().unwrap().realize(&boxc);
            prop_assert!(w.avg(&parent) <= lambda);
            omega_measure += q.volume();
            omega_mass += w.integral(&q);
        }
        // summed sandwich, still exact
        prop_assert!(lambda * omega_measure <= omega_mass);
        prop_assert!(omega_mass <= 2.0 * lambda * omega_measure);
    }

    #[test]
    fn dyadic_cubes_disjoint_or_nested(
        l1 in 0u32..6, i1 in 0u64..64, l2 in 0u32..6, i2 in 0u64..64,
    ) {
        let a = DyadicCube { level: l1, index: [i1 % (1 << l1), 0], dim: 1 };
        let b = DyadicCube { level: l2, index: [i2 % (1 << l2), 0], dim: 1 };
        let root = Cube::interval(0.0, 1.0).unwrap();
        let ca = a.realize(&root);
        let cb = b.realize(&root);
        let overlap = ca.low(0) < cb.high(0) - 1e-12 && cb.low(0) < ca.high(0) - 1e-12;
        let nested = a.is_descendant_of(&b) || b.is_descendant_of(&a);
        prop_assert_eq!(overlap, nested);
    }

    #[test]
    fn discrete_tail_termwise_monotone_in_p(
        raw in prop::collection::vec(0u32..(1 << 10), 16),
    ) {
        let quantum = 2f64.powi(-8);
        let mut values: Vec<f64> = raw.iter().map(|&k| k as f64 * quantum).collect();
        values[0] += 1.0;
        let boxc = Cube::interval(-1.0, 1.0).unwrap();
        let w = Weight::grid(GridWeight::new(boxc, 16, values).unwrap());
        let q = Cube::interval(-0.5, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for p in [1.5, 2.0, 3.0] {
            let t = discrete_tail(&w, &q, p, 1e-9).unwrap();
            prop_assert!(t.value <= prev + 1e-12);
            prev = t.value;
        }
    }
}
