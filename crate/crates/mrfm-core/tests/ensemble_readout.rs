//! Column-averaged readout over a statistical ensemble against the
//! single-chain expectation computed analytically.

use mrfm_core::chain::{ChainState, PulseMode};
use mrfm_core::compiler::{compile, CompileMode, Circuit, Gate};
use mrfm_core::executor::execute_schedule;
use mrfm_core::protocol::{ensemble_column_readout, Device};
use mrfm_core::spectroscopy::{magic_tilt_rad, IsingChainSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rotated_mixture_matches_the_single_chain_expectation() {
    let mut device = Device::reference();
    device.geometry.chain_length = 3;
    let spec = IsingChainSpec::new(
        vec![4.0e8, 4.3e8, 1.7e8],
        vec![100.0, 150.0],
        magic_tilt_rad(),
    )
    .expect("couplings match");

    let angle = 1.2f64;
    let circuit = Circuit::new(
        3,
        vec![Gate::RotX {
            site: 0,
            angle_rad: angle,
        }],
    )
    .expect("valid circuit");
    let schedule =
        compile(&circuit, CompileMode::IsingArray, &device, Some(&spec)).expect("compiles");

    // 1000 chains drawn from a product mixture with 30% excitation on the
    // rotated column
    let excitation = 0.3;
    let chains = 1000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xe15);
    let mut evolved = Vec::with_capacity(chains);
    let mut drawn_excited = 0usize;
    for _ in 0..chains {
        let bits = [
            rng.random::<f64>() < excitation,
            rng.random::<f64>() < excitation,
            rng.random::<f64>() < excitation,
        ];
        drawn_excited += bits[0] as usize;
        let mut state = ChainState::from_basis(&bits).expect("three qubits");
        execute_schedule(&device, &schedule, Some(&spec), &mut state, PulseMode::Ideal, None)
            .expect("schedule executes");
        evolved.push(state);
    }

    let readout = ensemble_column_readout(&evolved, 0).expect("nonempty ensemble");
    assert_eq!(readout.chain_count, chains);

    // single-chain oracle: a chain starting |0> contributes +cos(angle), a
    // chain starting |1> contributes -cos(angle)
    let expectation = (1.0 - 2.0 * excitation) * angle.cos();
    let variance = angle.cos().powi(2) * (1.0 - (1.0 - 2.0 * excitation).powi(2));
    let three_sigma = 3.0 * (variance / chains as f64).sqrt();
    assert!(
        (readout.average_z_polarization - expectation).abs() < three_sigma,
        "readout {} vs expectation {expectation} (3 sigma {three_sigma})",
        readout.average_z_polarization
    );

    // exact check against the drawn mixture itself
    let drawn_expectation =
        (1.0 - 2.0 * drawn_excited as f64 / chains as f64) * angle.cos();
    assert!(
        (readout.average_z_polarization - drawn_expectation).abs() < 1e-9,
        "readout {} vs drawn mixture {drawn_expectation}",
        readout.average_z_polarization
    );

    // a column the schedule never touched keeps its drawn polarization scale
    let untouched = ensemble_column_readout(&evolved, 2).expect("nonempty ensemble");
    assert!((untouched.average_z_polarization - 0.4).abs() < 0.1);
}
