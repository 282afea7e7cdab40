use approx::assert_relative_eq;
use ftj_core::domains::{sample_anisotropy, Anisotropy, GridSpec, VariationSpec};
use ftj_core::electrostatics::{
    build_coupling, dielectric_voltages, ferroelectric_voltages, ClosureKernel, CouplingMethod, LaplaceMesh,
    VoltagePartition,
};
use ftj_core::exec::Execution;
use ftj_core::protocol::{vset_grid, Waveform};
use ftj_core::stack::{presets, StackSpec};
use ftj_core::tunneling::{band_profile, domain_current, wkb_transmission, TransportConfig};
use proptest::prelude::*;

fn stack_with(t_d_nm: f64, sio2: bool) -> StackSpec {
    let base = StackSpec::baseline();
    let dielectric = if sio2 { presets::sio2() } else { presets::al2o3() };
    base.with_dielectric(dielectric, t_d_nm * 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transmission_is_a_probability(
        t_d in 0.5f64..3.0,
        sio2 in any::<bool>(),
        v_d in -3.0f64..3.0,
        v_r in -2.0f64..2.0,
        e in -3.0f64..5.0,
    ) {
        let stack = stack_with(t_d, sio2);
        let p = band_profile(&stack, v_d, v_r - v_d, v_r).unwrap();
        let t = wkb_transmission(&p, e);
        prop_assert!(t > 0.0 || e < p.max_barrier() - 1.0, "T = {t} at E = {e}");
        prop_assert!(t <= 1.0);
    }

    #[test]
    fn transmission_is_shift_invariant(
        v_d in -3.0f64..3.0,
        v_r in -2.0f64..2.0,
        e in -2.0f64..3.0,
        de in -5.0f64..5.0,
    ) {
        let p = band_profile(&StackSpec::baseline(), v_d, v_r - v_d, v_r).unwrap();
        let a = wkb_transmission(&p, e);
        let b = wkb_transmission(&p.shifted(de), e + de);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn transmission_grows_with_energy(
        v_d in -3.0f64..3.0,
        v_r in -2.0f64..2.0,
        e in -3.0f64..4.0,
        step in 1e-3f64..0.5,
    ) {
        let p = band_profile(&StackSpec::baseline(), v_d, v_r - v_d, v_r).unwrap();
        let lo = wkb_transmission(&p, e);
        let hi = wkb_transmission(&p, e + step);
        prop_assert!(hi >= lo * (1.0 - 1e-12), "T({}) = {lo} > T({}) = {hi}", e, e + step);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn current_follows_read_bias_sign(v_d in 0.0f64..3.0, v_r in -1.5f64..1.5) {
        prop_assume!(v_r.abs() > 1e-3);
        let p = band_profile(&StackSpec::baseline(), v_d, v_r - v_d, v_r).unwrap();
        let i = domain_current(&p, &TransportConfig::default()).unwrap();
        prop_assert!(i * v_r > 0.0, "I = {i} at V_R = {v_r}");
    }

    #[test]
    fn closure_coupling_obeys_sum_rule(n in 1usize..9, t_d in 0.5f64..3.0, sio2 in any::<bool>()) {
        let stack = stack_with(t_d, sio2);
        let grid = GridSpec::square(n);
        let (m, _) = build_coupling(
            CouplingMethod::Closure,
            &grid,
            &stack,
            &ClosureKernel::default(),
            &LaplaceMesh::default(),
            Execution::Sequential,
        )
        .unwrap();
        let c_0 = stack.derive_capacitances().unwrap().c_0;
        prop_assert!(m.sum_rule_residual(c_0) < 1e-12);
        prop_assert!(m.asymmetry() < 1e-14);
    }

    #[test]
    fn fft_product_matches_dense(
        nx in 1usize..7,
        ny in 1usize..7,
        seed in prop::collection::vec(-0.3f64..0.3, 36),
    ) {
        let grid = GridSpec { nx, ny, ..GridSpec::default() };
        let stack = StackSpec::baseline();
        let (m, _) = build_coupling(
            CouplingMethod::Closure,
            &grid,
            &stack,
            &ClosureKernel::default(),
            &LaplaceMesh::default(),
            Execution::Sequential,
        )
        .unwrap();
        let p = &seed[..nx * ny];
        let mut fast = vec![0.0; nx * ny];
        let mut dense = vec![0.0; nx * ny];
        m.apply(p, &mut fast);
        m.apply_dense(p, &mut dense);
        let scale = dense.iter().fold(1e-3f64, |a, v| a.max(v.abs()));
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn layer_voltages_sum_to_applied_bias(
        p in prop::collection::vec(-0.3f64..0.3, 16),
        v_t in -6.0f64..6.0,
        t_d in 0.5f64..3.0,
    ) {
        let stack = stack_with(t_d, false);
        let grid = GridSpec::square(4);
        let (m, _) = build_coupling(
            CouplingMethod::Closure,
            &grid,
            &stack,
            &ClosureKernel::default(),
            &LaplaceMesh::default(),
            Execution::Sequential,
        )
        .unwrap();
        let part = VoltagePartition::from_stack(&stack).unwrap();
        let v_d = dielectric_voltages(&p, v_t, &m, &part).unwrap();
        let v_f = ferroelectric_voltages(&v_d, v_t, &part);
        for (d, f) in v_d.iter().zip(&v_f) {
            prop_assert!((d + f - v_t - part.v_bi).abs() < 1e-12);
        }
    }

    #[test]
    fn anisotropy_sampling_is_seeded(seed in any::<u64>(), sigma in 0.0f64..0.2) {
        let grid = GridSpec::square(5);
        let v = VariationSpec { sigma_alpha: sigma, sigma_beta: sigma, sigma_gamma: sigma, seed };
        let a = sample_anisotropy(Anisotropy::HZO, &v, &grid).unwrap();
        let b = sample_anisotropy(Anisotropy::HZO, &v, &grid).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.alpha.iter().all(|x| *x < 0.0));
        prop_assert!(a.beta.iter().chain(&a.gamma).all(|x| *x > 0.0));
    }

    #[test]
    fn dilated_waveform_is_time_scaled(
        levels in prop::collection::vec(-6.0f64..6.0, 1..6),
        factor in 0.1f64..10.0,
        frac in 0.0f64..1.0,
    ) {
        let mut b = Waveform::builder(0.0, 0.0);
        for v in &levels {
            b = b.ramp_to(*v, 1e6).hold(1e-6);
        }
        let w = b.build().unwrap();
        let d = w.dilated(factor).unwrap();
        let t = frac * w.end();
        let (lo, hi) = levels.iter().fold((0.0f64, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let v = w.voltage(t);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        prop_assert!((d.voltage(t * factor) - v).abs() < 1e-9);
    }

    #[test]
    fn vset_grid_spans_its_range(lo in 0.5f64..3.0, n in 1usize..30, step in 0.05f64..0.5) {
        let hi = lo + n as f64 * step;
        let g = vset_grid(lo, hi, step).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert_eq!(g[0], lo);
        assert_relative_eq!(*g.last().unwrap(), hi, max_relative = 1e-12);
    }
}
