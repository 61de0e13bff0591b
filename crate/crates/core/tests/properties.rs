use dipole_core::cook::cook_integrand;
use dipole_core::fields::{LaserEnvelope, ScaledField};
use dipole_core::gauge::{length_to_velocity, phase_fidelity, velocity_to_length};
use dipole_core::hamiltonians::{Generator, HamiltonianSpec, PotentialModel};
use dipole_core::probes::gaussian_probes;
use dipole_core::propagate::step_split;
use dipole_core::spatial::{make_grid, WaveFunction};
use dipole_core::Complex64;
use proptest::prelude::*;

fn cw(amplitude: f64, lambda: f64, omega: f64) -> ScaledField {
    ScaledField::new(LaserEnvelope::plane_wave(amplitude, vec![1.0], vec![1.0]).unwrap(), lambda, omega).unwrap()
}

fn random_state(seed: u64, dim: usize) -> WaveFunction {
    let grid = make_grid(dim, &[if dim == 1 { 128 } else { 16 }], &[20.0]).unwrap();
    gaussian_probes(&grid, 1, seed).remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in any::<u64>(), dim in 1usize..=2) {
        let psi = random_state(seed, dim);
        let hat = psi.to_momentum();
        prop_assert!((hat.norm() - psi.norm()).abs() < 1e-12);
        let back = WaveFunction::from_momentum(&hat);
        prop_assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn gauge_map_is_an_isometric_involution(
        seed in any::<u64>(),
        t in -20.0f64..20.0,
        amplitude in 0.0f64..3.0,
        omega in 0.2f64..4.0,
    ) {
        let psi = random_state(seed, 1);
        let field = cw(amplitude, 40.0, omega);
        let l = velocity_to_length(&field, &psi, t).unwrap();
        prop_assert!((l.norm() - psi.norm()).abs() < 1e-12);
        let v = length_to_velocity(&field, &l, t).unwrap();
        prop_assert!(v.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_is_bounded_symmetric_and_phase_blind(a in any::<u64>(), b in any::<u64>(), phase in 0.0f64..6.3) {
        let (p, q) = (random_state(a, 1), random_state(b, 1));
        let f = phase_fidelity(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - phase_fidelity(&q, &p).unwrap()).abs() < 1e-14);
        let mut r = q.clone();
        r.scale(Complex64::from_polar(1.0, phase));
        prop_assert!((f - phase_fidelity(&p, &r).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn split_step_preserves_norm(seed in any::<u64>(), t in 0.0f64..10.0, dt in 1e-3f64..0.2, amplitude in 0.0f64..2.0) {
        let psi = random_state(seed, 1);
        let pot = PotentialModel::SoftCoreCoulomb { z: 1.0, eps: 1.0 }.sample(psi.grid()).unwrap();
        let field = cw(amplitude, 20.0, 1.0);
        for generator in [Generator::DipoleVelocity(field.clone()), Generator::DipoleLength(field)] {
            let spec = HamiltonianSpec::new(generator, pot.clone()).unwrap();
            let out = step_split(&spec, &psi, t, dt).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn certificate_integrand_is_nonnegative(seed in any::<u64>(), s in 0.0f64..10.0, m in 1u32..8) {
        let psi = random_state(seed, 1);
        let g = cook_integrand(&cw(1.0, 20.0 / m as f64, 1.0), s, &psi).unwrap();
        prop_assert!(g >= 0.0 && g.is_finite());
    }

    #[test]
    fn snapshot_round_trip_is_exact(seed in any::<u64>(), dim in 1usize..=2) {
        let psi = random_state(seed, dim);
        let mut buf = Vec::new();
        psi.write_snapshot(&mut buf).unwrap();
        let back = WaveFunction::read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), psi.values());
        prop_assert_eq!(back.grid(), psi.grid());
    }
}
