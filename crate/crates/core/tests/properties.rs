use pflow_core::model::Preset;
use pflow_core::particles::{energy_dissipation, functionals, k_variation, modified_energy_dissipation, rhs};
use pflow_core::{FluidModel, ParticleState};
use proptest::prelude::*;

fn models() -> [FluidModel; 3] {
    [
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap(),
        FluidModel::preset(Preset::IdealGasEntropy { c: 1.0, gamma: 1.4, a: 1.0 }, 2.0, 1.5).unwrap(),
        FluidModel::preset(Preset::IsentropicGas { c: 2.0, gamma: 1.67, mu0: 0.5, eta: 0.3 }, 0.7, 1.0).unwrap(),
    ]
}

/// Random admissible configuration built from positive cell weights.
fn state(length: f64) -> impl Strategy<Value = ParticleState> {
    (2usize..40).prop_flat_map(move |n| {
        (prop::collection::vec(0.4f64..1.6, n), prop::collection::vec(-1.0f64..1.0, n - 1)).prop_map(move |(w, v)| {
            let total: f64 = w.iter().sum();
            let mut pos = length;
            let x = w[..n - 1]
                .iter()
                .map(|wi| {
                    pos -= wi / total * length;
                    pos
                })
                .collect();
            ParticleState::new(n, 0.0, x, v).unwrap()
        })
    })
}

fn shifted(s: &ParticleState, dir: &[f64], h: f64) -> ParticleState {
    let y: Vec<f64> = s.to_vector().iter().zip(dir).map(|(a, b)| a + h * b).collect();
    ParticleState::from_vector(s.n, s.t, &y)
}

/// Richardson-extrapolated central difference of a functional along the flow direction.
fn flow_derivative(model: &FluidModel, s: &ParticleState, pick: fn(&pflow_core::DiscreteFunctionals) -> f64) -> f64 {
    let f = rhs(model, s).unwrap();
    let dir: Vec<f64> = f.dx.iter().chain(&f.dv).copied().collect();
    let scale = dir.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let central = |h: f64| {
        let plus = pick(&functionals(model, &shifted(s, &dir, h)).unwrap());
        let minus = pick(&functionals(model, &shifted(s, &dir, -h)).unwrap());
        (plus - minus) / (2.0 * h)
    };
    let h = 1e-2 / (s.n as f64 * scale);
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

/// A model index paired with a configuration on that model's domain.
fn case() -> impl Strategy<Value = (usize, ParticleState)> {
    (0usize..3).prop_flat_map(|idx| state(models()[idx].length()).prop_map(move |s| (idx, s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_variation_bounded_by_energies((idx, s) in case()) {
        let model = &models()[idx];
        let f = functionals(model, &s).unwrap();
        let bound = 2.0 / model.mass() * (f.w_n.sqrt() + f.e_n.sqrt()).powi(2);
        prop_assert!(k_variation(model, &s).unwrap() <= bound * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn energy_rates_match_finite_differences((idx, s) in case()) {
        let model = &models()[idx];
        let de = energy_dissipation(model, &s).unwrap();
        let dw = modified_energy_dissipation(model, &s).unwrap();
        prop_assert!(de <= 0.0);
        prop_assert!(dw <= 0.0);
        let fd_e = flow_derivative(model, &s, |f| f.e_n);
        let fd_w = flow_derivative(model, &s, |f| f.w_n);
        prop_assert!((fd_e - de).abs() <= 1e-6 * de.abs().max(1e-3), "E: {} vs {}", fd_e, de);
        prop_assert!((fd_w - dw).abs() <= 1e-6 * dw.abs().max(1e-3), "W: {} vs {}", fd_w, dw);
    }

    #[test]
    fn spacings_partition_the_domain((idx, s) in case()) {
        let length = models()[idx].length();
        let d = s.spacings(length);
        prop_assert_eq!(d.len(), s.n);
        prop_assert!(d.iter().all(|&di| di > 0.0));
        prop_assert!((d.iter().sum::<f64>() - length).abs() <= 1e-12 * length);
        let back = ParticleState::from_vector(s.n, s.t, &s.to_vector());
        prop_assert_eq!(back, s);
    }
}
