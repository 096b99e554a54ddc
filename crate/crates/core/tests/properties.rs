mod common;

use std::sync::OnceLock;

use bistable_net::hillsolve::{reduced_jacobian, reduced_residual};
use bistable_net::network::{build_topology, sherman_morrison_inverse, shifted_laplacian, sync_error, TopologyKind};
use bistable_net::pwa::{affine_restriction, saturated_equilibrium_candidate, DomainCode};
use bistable_net::regulatory::RegulatoryFunction;
use common::{fd_jacobian, hill3, max_abs_diff, network, unit_pwa, GridInverse};
use proptest::prelude::*;

fn pwa_oracle() -> &'static (RegulatoryFunction, GridInverse) {
    static CELL: OnceLock<(RegulatoryFunction, GridInverse)> = OnceLock::new();
    CELL.get_or_init(|| {
        let f = RegulatoryFunction::pwa(0.45, 0.1).unwrap();
        let g = GridInverse::new(&f, 0.0, 1.0, 1e-6);
        (f, g)
    })
}

fn hill_oracle() -> &'static (RegulatoryFunction, GridInverse) {
    static CELL: OnceLock<(RegulatoryFunction, GridInverse)> = OnceLock::new();
    CELL.get_or_init(|| {
        let f = RegulatoryFunction::hill(1.5, 3.0).unwrap();
        let g = GridInverse::new(&f, 0.0, 4.0, 1e-6);
        (f, g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn activators_are_monotone_and_lipschitz(
        theta in 0.05f64..2.0,
        delta in 0.01f64..1.0,
        hill_n in 1.0f64..6.0,
    ) {
        for f in [
            RegulatoryFunction::pwa(theta, delta).unwrap(),
            RegulatoryFunction::hill(theta, hill_n).unwrap(),
        ] {
            let l = f.lipschitz_constant();
            let xs: Vec<f64> = (0..=1000).map(|i| i as f64 * 3.0 * theta / 1000.0).collect();
            for w in xs.windows(2) {
                let (a, b) = (f.eval(w[0]).unwrap(), f.eval(w[1]).unwrap());
                prop_assert!(b >= a);
                prop_assert!(b - a <= l * (w[1] - w[0]) * (1.0 + 1e-9) + 1e-15);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }

    #[test]
    fn repressor_mirrors_activator(theta in 0.05f64..2.0, hill_n in 1.0f64..6.0, x in 0.0f64..5.0) {
        let f = RegulatoryFunction::hill(theta, hill_n).unwrap();
        let r = RegulatoryFunction::repressor(f.clone()).unwrap();
        prop_assert!((r.eval(x).unwrap() + f.eval(x).unwrap() - 1.0).abs() < 1e-15);
        prop_assert_eq!(r.lipschitz_constant(), f.lipschitz_constant());
    }

    #[test]
    fn pwa_inverse_matches_grid(y in 0.0f64..1.0) {
        let (f, oracle) = pwa_oracle();
        let x = f.generalized_inverse(0.0, 1.0, y).unwrap();
        let o = oracle.inverse(y);
        prop_assert!(x <= o + 1e-12 && x >= o - oracle.step() - 1e-12, "y={y} x={x} oracle={o}");
    }

    #[test]
    fn hill_inverse_matches_grid(y in 0.0f64..0.9) {
        let (f, oracle) = hill_oracle();
        let x = f.generalized_inverse(0.0, 4.0, y).unwrap();
        let o = oracle.inverse(y);
        prop_assert!(x <= o + 1e-12 && x >= o - oracle.step() - 1e-12, "y={y} x={x} oracle={o}");
    }

    #[test]
    fn inverse_is_non_decreasing(y1 in 0.0f64..1.0, y2 in 0.0f64..1.0) {
        let (f, _) = pwa_oracle();
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        prop_assert!(f.generalized_inverse(0.0, 1.0, lo).unwrap() <= f.generalized_inverse(0.0, 1.0, hi).unwrap());
    }

    #[test]
    fn inverse_of_image_is_not_below(x in 0.0f64..0.55) {
        let (f, _) = pwa_oracle();
        let y = f.eval(x).unwrap();
        prop_assert!(f.generalized_inverse(0.0, 1.0, y).unwrap() >= x - 1e-12);
    }

    #[test]
    fn inverse_separates_levels(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        for (f, b) in [(&pwa_oracle().0, 1.0), (&hill_oracle().0, 4.0)] {
            let x = x * b;
            let Ok(inv) = f.generalized_inverse(0.0, b, y) else { continue };
            let fx = f.eval(x).unwrap();
            if fx > y {
                prop_assert!(x >= inv - 1e-12);
            } else if fx < y {
                prop_assert!(x <= inv + 1e-12);
            }
        }
    }

    #[test]
    fn sherman_morrison_matches_dense_inverse(k in 0.0f64..5.0, gamma1 in 0.1f64..3.0, n in 1usize..9) {
        let g = build_topology(TopologyKind::AllToAll, n, k, None).unwrap();
        let dense = shifted_laplacian(&g.laplacian(), gamma1).try_inverse().unwrap();
        let closed = sherman_morrison_inverse(k, gamma1, n);
        prop_assert!((dense - closed).amax() < 1e-10);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(k in 0.0f64..3.0, n in 2usize..9, kind_idx in 0usize..4) {
        let kind = [TopologyKind::AllToAll, TopologyKind::Star, TopologyKind::Loop, TopologyKind::Line][kind_idx];
        let l = build_topology(kind, n, k, None).unwrap().laplacian();
        for r in 0..n {
            prop_assert!(l.matrix().row(r).sum().abs() < 1e-12);
        }
        prop_assert!((l.matrix() - l.matrix().transpose()).amax() == 0.0);
        let eig = l.eigenvalues();
        prop_assert!(eig.iter().all(|&e| e > -1e-10));
        if k > 1e-6 {
            prop_assert!(l.algebraic_connectivity() > 1e-10);
        }
    }

    #[test]
    fn sync_error_vanishes_on_consensus(c in -5.0f64..5.0, n in 1usize..9, bump in 1e-6f64..1.0, at in 0usize..8) {
        let mut v = vec![c; n];
        prop_assert!(sync_error(&v) < 1e-12);
        if n > 1 {
            v[at % n] += bump;
            prop_assert!(sync_error(&v) > 0.0);
        }
    }

    #[test]
    fn saturated_candidates_solve_their_restriction(k in 0.0f64..2.5, code in 0usize..32) {
        let net = network(unit_pwa(0.1), TopologyKind::AllToAll, 5, k);
        let digits: Vec<i8> = (0..5).map(|i| if code >> i & 1 == 1 { 1 } else { -1 }).collect();
        let alpha = DomainCode::new(digits).unwrap();
        let cand = saturated_equilibrium_candidate(&alpha, &net).unwrap();
        let r = affine_restriction(&alpha, &net).unwrap();
        let generic = r.m.clone().lu().solve(&(-&r.b)).unwrap();
        prop_assert!(max_abs_diff(&cand.state, generic.as_slice()) < 1e-10);
    }

    #[test]
    fn hill_jacobians_match_finite_differences(
        x in proptest::collection::vec(0.05f64..6.0, 3),
        y in proptest::collection::vec(0.05f64..9.0, 3),
        k in 0.0f64..2.0,
    ) {
        let net = network(hill3(), TopologyKind::AllToAll, 3, k);
        let reduced = reduced_jacobian(&x, &net).unwrap();
        let fd = fd_jacobian(|v| reduced_residual(v, &net).unwrap(), &x, 1e-6);
        prop_assert!((reduced - fd).amax() < 1e-5);

        let mut full_state = x.clone();
        full_state.extend(&y);
        let full = net.jacobian(&full_state);
        let fd = fd_jacobian(|v| net.vector_field(v).unwrap(), &full_state, 1e-6);
        prop_assert!((full - fd).amax() < 1e-5);
    }
}
