use std::f64::consts::PI;
use std::sync::Arc;

use gradflow::correctors::cutoff;
use gradflow::etdrk::phi;
use gradflow::models::{
    discrete_variational_derivative, energy, fd_gradient_energy, projected_map_energy, EnergyForm,
    FlowSpec, Mobility, PotentialModel,
};
use gradflow::spectral::{Field, Grid, Spectral};
use proptest::prelude::*;

fn grid(dim: usize, m: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform(dim, m, 0.0, 2.0 * PI).unwrap())
}

fn values(n: usize, amp: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-amp..amp, n)
}

fn dw_flow(g: Arc<Grid>) -> FlowSpec {
    FlowSpec::new(
        Mobility::Identity,
        PotentialModel::double_well(0.3, 1.0, 0.0).unwrap(),
        g,
    )
}

fn fh_model() -> PotentialModel {
    PotentialModel::flory_huggins(0.1, 1.0, 3.0, 0.01, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(v in values(64, 3.0)) {
        let g = grid(2, 8);
        let sp = Spectral::new(g.clone());
        let f = Field::new(g, v).unwrap();
        let back = sp.inverse(sp.forward(&f).unwrap()).unwrap();
        let scale = f.max_abs().max(1e-300);
        prop_assert!(back.max_abs_difference(&f).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn transform_is_linear(u in values(32, 2.0), w in values(32, 2.0), a in -3.0f64..3.0) {
        let g = grid(1, 32);
        let sp = Spectral::new(g.clone());
        let fu = Field::new(g.clone(), u).unwrap();
        let fw = Field::new(g, w).unwrap();
        let comb = fu.zip_map(&fw, |x, y| a * x + y).unwrap();
        let (cu, cw, cc) = (sp.forward(&fu).unwrap(), sp.forward(&fw).unwrap(), sp.forward(&comb).unwrap());
        for i in 0..cc.len() {
            prop_assert!((cc[i] - (cu[i] * a + cw[i])).norm() <= 1e-13);
        }
    }

    #[test]
    fn spectrum_of_real_data_is_hermitian(v in values(64, 1.0)) {
        let g = grid(2, 8);
        let sp = Spectral::new(g.clone());
        let c = sp.forward(&Field::new(g.clone(), v).unwrap()).unwrap();
        for flat in 0..c.len() {
            let idx = g.unflatten(flat);
            let mirror = g.flatten(&[(8 - idx[0]) % 8, (8 - idx[1]) % 8]);
            prop_assert!((c[flat] - c[mirror].conj()).norm() <= 1e-14);
        }
    }

    #[test]
    fn mass_preserving_multipliers_keep_the_mean(v in values(64, 1.0), eta in 0.0f64..10.0) {
        let g = grid(2, 8);
        let sp = Spectral::new(g.clone());
        let f = Field::new(g, v).unwrap();
        let out = sp.apply(&sp.resolvent(eta).unwrap(), &f).unwrap();
        prop_assert!((out.mean() - f.mean()).abs() <= 1e-14);
    }

    #[test]
    fn resolvent_does_not_expand_l2(v in values(64, 1.0), eta in 0.0f64..10.0) {
        let g = grid(2, 8);
        let sp = Spectral::new(g.clone());
        let f = Field::new(g, v).unwrap();
        let out = sp.apply(&sp.resolvent(eta).unwrap(), &f).unwrap();
        prop_assert!(out.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn cutoff_does_not_expand_l2_distance(u in values(64, 2.0), w in values(64, 2.0)) {
        let g = grid(2, 8);
        let fu = Field::new(g.clone(), u).unwrap();
        let fw = Field::new(g, w).unwrap();
        let cu = fu.map(|z| cutoff(z, 1.0));
        let cw = fw.map(|z| cutoff(z, 1.0));
        prop_assert!(cu.l2_distance(&cw).unwrap() <= fu.l2_distance(&fw).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn energy_is_translation_invariant(v in values(64, 1.2), sx in 0usize..8, sy in 0usize..8) {
        let g = grid(2, 8);
        let flow = dw_flow(g.clone());
        let f = Field::new(g.clone(), v.clone()).unwrap();
        let shifted: Vec<f64> = (0..64)
            .map(|i| {
                let idx = g.unflatten(i);
                v[g.flatten(&[(idx[0] + sx) % 8, (idx[1] + sy) % 8])]
            })
            .collect();
        let s = Field::new(g, shifted).unwrap();
        for form in [EnergyForm::InterpolationSpectral, EnergyForm::FiniteDifference] {
            let (a, b) = (energy(form, &flow, &f).unwrap(), energy(form, &flow, &s).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn phi_recurrence_holds(z in -1e4f64..-1.0, k in 0usize..4) {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        let lhs = phi(k + 1, z);
        let rhs = (phi(k, z) - 1.0 / fact) / z;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn phi_decays_along_the_negative_axis(a in -1e5f64..0.0, b in -1e5f64..0.0, k in 0usize..5) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(phi(k, lo) <= phi(k, hi));
    }

    #[test]
    fn cutoff_is_idempotent_and_nonexpansive(a in -5.0f64..5.0, c in -5.0f64..5.0, b in 0.1f64..2.0) {
        prop_assert_eq!(cutoff(cutoff(a, b), b), cutoff(a, b));
        prop_assert!((cutoff(a, b) - cutoff(c, b)).abs() <= (a - c).abs());
    }

    #[test]
    fn cutoff_lowers_bulk_density(z in -2.0f64..2.0) {
        let dw = PotentialModel::double_well(0.1, 1.0, 0.0).unwrap();
        prop_assert!(dw.density(cutoff(z, 1.0)) <= dw.density(z));
        let fh = fh_model();
        let b = fh.effective_bound();
        prop_assert!(fh.density(cutoff(z, b)) <= fh.density(z));
    }

    #[test]
    fn cutoff_lowers_fd_energy(v in values(256, 1.6)) {
        let g = grid(2, 16);
        let flow = dw_flow(g.clone());
        let f = Field::new(g, v).unwrap();
        let c = f.map(|z| cutoff(z, 1.0));
        let (e0, e1) = (
            energy(EnergyForm::FiniteDifference, &flow, &f).unwrap(),
            energy(EnergyForm::FiniteDifference, &flow, &c).unwrap(),
        );
        prop_assert!(e1 <= e0 + 1e-12 * e0.abs().max(1.0));
        prop_assert!(fd_gradient_energy(&c).unwrap() <= fd_gradient_energy(&f).unwrap() * (1.0 + 1e-14));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn projected_cutoff_lowers_projection_energy(
        modes in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
        shift in -0.5f64..0.5,
    ) {
        // Smooth field built from a few low modes, so the fine-grid sampling
        // of the cutoff resolves it well.
        let g = grid(2, 16);
        let flow = dw_flow(g.clone());
        let f = Field::from_fn(g, |x| {
            shift + modes.iter().enumerate().map(|(j, &(a, b))| {
                let k = (j / 2 + 1) as f64;
                if j % 2 == 0 { a * (k * x[0]).cos() + b * (k * x[1]).sin() } else { a * (k * (x[0] + x[1])).sin() + b }
            }).sum::<f64>() * 0.5
        });
        let e0 = energy(EnergyForm::ProjectionSpectral, &flow, &f).unwrap();
        let e1 = projected_map_energy(&flow, &f, |z| cutoff(z, 1.0), 8).unwrap();
        prop_assert!(e1 <= e0 + 1e-12 * e0.abs().max(1.0), "{} > {}", e1, e0);
    }
}

/// Central difference of the energy against `⟨μ_h, v⟩_h`, for two step sizes.
fn gradient_errors(form: EnergyForm, flow: &FlowSpec, u: &Field, v: &Field) -> (f64, f64) {
    let mu = discrete_variational_derivative(form, flow, u).unwrap();
    let exact = mu.inner(v).unwrap();
    let fd = |h: f64| {
        let up = u.zip_map(v, |a, b| a + h * b).unwrap();
        let dn = u.zip_map(v, |a, b| a - h * b).unwrap();
        (energy(form, flow, &up).unwrap() - energy(form, flow, &dn).unwrap()) / (2.0 * h)
    };
    ((fd(1e-3) - exact).abs(), (fd(5e-4) - exact).abs())
}

#[test]
fn energy_gradient_is_consistent_with_mu() {
    let g = grid(2, 8);
    let flows = [
        dw_flow(g.clone()),
        FlowSpec::new(Mobility::Identity, fh_model(), g.clone()),
    ];
    let mut seed = 11u64;
    let mut next = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for flow in &flows {
        for form in [EnergyForm::InterpolationSpectral, EnergyForm::FiniteDifference] {
            for _ in 0..20 {
                let u = Field::new(g.clone(), (0..64).map(|_| 0.9 * next()).collect()).unwrap();
                let v = Field::new(g.clone(), (0..64).map(|_| next()).collect()).unwrap();
                let (e1, e2) = gradient_errors(form, flow, &u, &v);
                let scale = energy(form, flow, &u).unwrap().abs().max(1.0);
                // Second order: halving h divides the error by about 4,
                // unless both are already at round-off.
                assert!(e2 <= 0.3 * e1 || e2 <= 1e-9 * scale, "{form}: {e1:e} -> {e2:e}");
            }
        }
    }
}
