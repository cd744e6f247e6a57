use cavity_trps::grid::UniformGrid;
use cavity_trps::Error;
use cavity_trps::model::{
    build_liouvillian, propagate, trajectory, FanoOrdering, ModelOptions, QuantumState, SystemParams, Truncation,
};
use proptest::prelude::*;

fn fig3() -> SystemParams {
    SystemParams {
        g_mag: 1.0,
        kappa: 50.0,
        gamma: 0.05,
        gamma_ph: 30.0,
        eta: 1.0,
        theta: std::f64::consts::FRAC_PI_2,
        omega_21: -70.0,
        ..Default::default()
    }
}

#[test]
fn second_photon_level_changes_nothing() {
    let fig1 = SystemParams {
        g_mag: 100.0,
        kappa: 50.0,
        gamma: 0.05,
        ..Default::default()
    };
    let grid = UniformGrid::new(0.0, 1e-3, 400).unwrap();
    for p in [fig1, fig3()] {
        let run = |truncation| {
            let lv = build_liouvillian(&p, ModelOptions { truncation, ..Default::default() }).unwrap();
            trajectory(&lv, &QuantumState::excited(truncation), &grid, 1).unwrap()
        };
        let (a, b) = (run(Truncation::OnePhoton), run(Truncation::TwoPhoton));
        for k in 0..grid.len() {
            assert!((a.n_cav[k] - b.n_cav[k]).abs() < 1e-8);
            assert!((a.n_tls[k] - b.n_tls[k]).abs() < 1e-8);
            assert!((a.coh[k] - b.coh[k]).norm() < 1e-8);
        }
    }
}

// The literal cross-dissipator ordering is not completely positive: the
// Fano preset loses positivity within the first step.
#[test]
fn literal_ordering_breaks_positivity() {
    let opts = ModelOptions {
        truncation: Truncation::TwoPhoton,
        fano_ordering: FanoOrdering::AsWritten,
    };
    let lv = build_liouvillian(&fig3(), opts).unwrap();
    let grid = UniformGrid::new(0.0, 1e-3, 200).unwrap();
    let err = propagate(&lv, &QuantumState::excited(Truncation::TwoPhoton), &grid).unwrap_err();
    assert!(matches!(err, Error::StateInvariant { .. }), "{err}");
}

fn arb_params() -> impl Strategy<Value = SystemParams> {
    (0.0..200.0f64, 0.0..100.0f64, 0.0..100.0f64, 0.0..50.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(
        |(g, k, ga, ph, w21, wc)| SystemParams {
            g_mag: g,
            kappa: k,
            gamma: ga,
            gamma_ph: ph,
            omega_21: w21,
            omega_c: wc,
            ..Default::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn states_stay_physical_and_excitation_only_drains(p in arb_params()) {
        let lv = build_liouvillian(&p, ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, 5e-4, 200).unwrap();
        // `trajectory` validates trace, Hermiticity and positivity at every step.
        let traj = trajectory(&lv, &QuantumState::excited(Truncation::OnePhoton), &grid, 1).unwrap();
        let n = traj.total_excitation();
        prop_assert!(n.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn fano_coupling_keeps_states_physical(p in arb_params(), eta in 0.0..=1.0f64, theta in -3.2..3.2f64) {
        let p = SystemParams { eta, theta, ..p };
        let lv = build_liouvillian(&p, ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, 5e-4, 200).unwrap();
        prop_assert!(trajectory(&lv, &QuantumState::excited(Truncation::OnePhoton), &grid, 1).is_ok());
    }
}
