use std::sync::OnceLock;

use furry_core::decoupling::{
    remainder_weighted_norm, resolvent_distance, DecouplingBundle, ProjectionMethod,
};
use furry_core::dirac::{build_channel_grid, ChannelOperators};
use furry_core::linalg::{self, c};

struct Setup {
    ops: ChannelOperators,
    bundle: DecouplingBundle,
}

fn setup() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(|| {
        let ops = ChannelOperators::new(&build_channel_grid(-1, 200, 1.0).unwrap());
        let bundle = DecouplingBundle::build(&ops, ProjectionMethod::Residue, 12).unwrap();
        Setup { ops, bundle }
    })
}

#[test]
fn projection_series_at_order_eight() {
    let s = setup();
    let sys = s.ops.assemble(0.2).unwrap();
    let err = linalg::spectral_norm(&(s.bundle.p_series.partial_sum(0.2, 8) - &sys.p_plus_gamma));
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn unitary_series_intertwines_better_at_higher_order() {
    let s = setup();
    let sys = s.ops.assemble(0.2).unwrap();
    let residual = |k: usize| {
        let u = s.bundle.u_series.partial_sum(0.2, k);
        linalg::spectral_norm(
            &(linalg::matmul(&u, &sys.p_plus_gamma) - linalg::matmul(&sys.p_plus_0, &u)),
        )
    };
    let (r4, r8) = (residual(4), residual(8));
    assert!(r8 < r4, "{r4:e} -> {r8:e}");
    let err = linalg::spectral_norm(&(s.bundle.u_series.partial_sum(0.2, 8) - &sys.u_gamma));
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn block_diagonal_series_structure() {
    let s = setup();
    let n = s.ops.grid.n();
    let energies = s.ops.grid.free_energies();
    let h0 = s.bundle.h_diag_series.coeff(0);
    let scale = h0.camax();
    for i in 0..2 * n {
        for j in 0..2 * n {
            let expected = if i == j && i < n { energies[i] } else { 0.0 };
            assert!(
                (h0[(i, j)] - c(expected)).norm() < 1e-13 * scale,
                "({i},{j})"
            );
        }
    }
    let res = s.bundle.invariant_residuals(&s.ops.p_plus_0);
    assert!(
        res.h_hermiticity < 1e-9 && res.h_off_block < 1e-9,
        "{res:?}"
    );
}

#[test]
fn block_diagonal_series_matches_exact_operator() {
    let s = setup();
    let sys = s.ops.assemble(0.2).unwrap();
    let err =
        linalg::spectral_norm(&(s.bundle.h_diag_series.partial_sum(0.2, 10) - sys.h_diag_exact()));
    assert!(err <= 1e-5, "{err:e}");
}

#[test]
fn foldy_wouthuysen_commutes_with_kinetic_weight() {
    let s = setup();
    let comm = linalg::commutator(&s.ops.u_fw, &s.ops.abs_d0);
    assert!(comm.camax() < 1e-12);
}

#[test]
fn remainders_vanish_without_coupling_and_grow_with_it() {
    let s = setup();
    let free = s.ops.assemble(0.0).unwrap().h_diag_exact();
    for k in [0, 3, 12] {
        let r = remainder_weighted_norm(
            &free,
            &s.bundle.h_diag_series,
            k,
            0.0,
            &s.bundle.weight_neg_half,
        );
        assert!(r < 1e-12, "k={k}: {r:e}");
    }
    let distances = |gamma: f64| {
        let exact = s.ops.assemble(gamma).unwrap().h_diag_exact();
        (0..=10)
            .map(|k| resolvent_distance(&exact, &s.bundle.h_diag_series.partial_sum(gamma, k)))
            .collect::<Vec<f64>>()
    };
    let (weak, strong) = (distances(0.1), distances(0.3));
    for (k, (a, b)) in weak.iter().zip(&strong).enumerate() {
        assert!(*a <= b + 1e-13, "k={k}: {a:e} vs {b:e}");
    }
}

#[test]
fn weighted_unitary_stays_bounded_under_refinement() {
    for n in [100, 200, 400] {
        let ops = ChannelOperators::new(&build_channel_grid(-1, n, 1.0).unwrap());
        let weighted = |gamma: f64| {
            let u = ops.assemble(gamma).unwrap().u_gamma;
            linalg::spectral_norm(&linalg::matmul3(&ops.abs_d0_half, &u, &ops.abs_d0_neg_half))
        };
        assert!((weighted(0.0) - 1.0).abs() < 1e-12);
        let w = weighted(0.3);
        println!("n={n}: ||D0^(1/2) U D0^(-1/2)|| at 0.3 = {w:.6}");
        assert!(w.is_finite());
    }
}
