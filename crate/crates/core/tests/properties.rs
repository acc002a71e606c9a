//! Invariants checked over randomized inputs.

use proptest::prelude::*;

use rdiff::algebra::{eta_inner_bivec, so_bracket, Bivector};
use rdiff::curvature::chart_curvature;
use rdiff::ensemble::{quantile_sorted, wilson_interval, Summary};
use rdiff::manifold::{Chart, ExpansionFactor, Interval, ModelSpec};
use rdiff::sde::{
    psd_factor, sectional_coefficients, xi_coefficients, xi_step, DiffusionKind, DiffusionSpec, FrameState,
    PhaseState,
};

fn bivector(coeffs: &[f64]) -> Bivector {
    let mut acc = Bivector::zeros(4);
    let mut it = coeffs.iter();
    for i in 0..4 {
        for j in i + 1..4 {
            acc = acc.add(&Bivector::basis(4, i, j).scale(*it.next().unwrap())).unwrap();
        }
    }
    acc
}

fn phase(c: f64, t: f64, tdot: f64, dir: [f64; 3]) -> (ModelSpec, PhaseState) {
    let model = ModelSpec::eds(c);
    let st = PhaseState::from_tdot(&model, &[t, 0.2, -0.1, 0.4], tdot, Some(&dir)).unwrap();
    (model, st)
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |d| d.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_invariant(x in prop::collection::vec(-1.0f64..1.0, 6),
                                              y in prop::collection::vec(-1.0f64..1.0, 6),
                                              z in prop::collection::vec(-1.0f64..1.0, 6)) {
        let (x, y, z) = (bivector(&x), bivector(&y), bivector(&z));
        let xy = so_bracket(&x, &y).unwrap();
        let yx = so_bracket(&y, &x).unwrap();
        prop_assert!(xy.add(&yx).unwrap().max_abs() < 1e-14);
        let inv = eta_inner_bivec(&xy, &z).unwrap() + eta_inner_bivec(&y, &so_bracket(&x, &z).unwrap()).unwrap();
        prop_assert!(inv.abs() < 1e-12);
    }

    #[test]
    fn riemann_has_pair_symmetries(c in 0.3f64..1.5, t in 0.2f64..5.0, k in -1i32..=1, r in 0.1f64..0.9, phi in 0.3f64..2.8) {
        let rw = ModelSpec::Rw { k, alpha: ExpansionFactor::Power { c }, chart: Chart::Spherical, interval: Interval::default() };
        let pack = chart_curvature(&rw, &[t, r, phi, 0.5]).unwrap();
        let rr = &pack.riemann;
        let scale = rr.iter().flatten().flatten().flatten().fold(1e-300f64, |m, x| m.max(x.abs()));
        for a in 0..4 { for b in 0..4 { for p in 0..4 { for q in 0..4 {
            prop_assert!((rr[a][b][p][q] + rr[b][a][p][q]).abs() <= 1e-12 * scale);
            prop_assert!((rr[a][b][p][q] - rr[p][q][a][b]).abs() <= 1e-12 * scale);
            prop_assert!((rr[a][b][p][q] + rr[a][p][q][b] + rr[a][q][b][p]).abs() <= 1e-12 * scale);
        }}}}
    }

    #[test]
    fn frame_boosts_stay_orthonormal(c in 0.3f64..1.5, t in 0.5f64..3.0, tdot in 1.0f64..6.0, dir in direction(),
                                     x in prop::collection::vec(-1.0f64..1.0, 6), eps in -1.0f64..1.0) {
        let (model, st) = phase(c, t, tdot, dir);
        let fs = FrameState::from_phase(&model, &st).unwrap();
        let moved = fs.frame.rotated(&bivector(&x), eps).unwrap();
        prop_assert!(moved.orthonormality_error() < 1e-10 * (1.0 + tdot * tdot));
    }

    #[test]
    fn xi_is_nonnegative_where_the_sign_conditions_hold(c in 0.5f64..1.0, t in 0.2f64..5.0, tdot in 1.0f64..8.0,
                                                       dir in direction(), rho in 0.1f64..3.0) {
        let (model, st) = phase(c, t, tdot, dir);
        let fs = FrameState::from_phase(&model, &st).unwrap();
        for kind in [DiffusionKind::Basic, DiffusionKind::R, DiffusionKind::Energy] {
            let co = xi_coefficients(&model, &DiffusionSpec::new(kind, rho), &fs).unwrap();
            prop_assert!(co.xi >= 0.0);
        }
    }

    #[test]
    fn renormalized_steps_stay_on_the_unit_shell(c in 0.5f64..1.0, t in 0.5f64..3.0, tdot in 1.0f64..4.0, dir in direction(),
                                                 noise in prop::array::uniform3(-0.3f64..0.3)) {
        let (model, st) = phase(c, t, tdot, dir);
        let fs = FrameState::from_phase(&model, &st).unwrap();
        let next = xi_step(&model, &DiffusionSpec::new(DiffusionKind::Basic, 1.0), &fs, 0.01, &noise, true).unwrap();
        prop_assert!(next.pnorm_err().abs() < 1e-12);
        prop_assert!(next.frame.orthonormality_error() < 1e-10 * (1.0 + next.velocity()[0].powi(2)));
    }

    #[test]
    fn sectional_covariance_is_psd_and_annihilates_the_velocity(c in 0.3f64..1.0, t in 0.5f64..3.0, tdot in 1.0f64..5.0,
                                                                dir in direction(), rho in 0.1f64..3.0) {
        let (model, st) = phase(c, t, tdot, dir);
        let pack = chart_curvature(&model, &st.point).unwrap();
        let (_, a) = sectional_coefficients(&pack, &st, rho);
        prop_assert!(psd_factor(&a, 4, None).is_ok());
        let scale = a.iter().flatten().fold(1e-300f64, |m, x| m.max(x.abs())) * tdot * tdot;
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| a[i][j] * pack.metric[j][j] * st.velocity[j]).sum();
            prop_assert!(s.abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..2000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn quantiles_are_ordered(mut v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let s = Summary::of(&v);
        prop_assert!(s.q05 <= s.q25 && s.q25 <= s.q50 && s.q50 <= s.q75 && s.q75 <= s.q95);
        v.sort_by(f64::total_cmp);
        prop_assert_eq!(quantile_sorted(&v, 0.0), v[0]);
        prop_assert_eq!(quantile_sorted(&v, 1.0), v[v.len() - 1]);
    }
}

/// The energy diffusion's drift of E including the vertical second-order term
/// (d + 3) ρ²E² + ((d − 1)/2) ρ² E R − 2ρ² g(T̃ξ̇, T̃ξ̇), against a
/// finite-difference generator. This is the corrected counterpart of the
/// acceptance check on the stated form.
#[test]
fn energy_diffusion_drift_of_energy() {
    let report = rdiff::verify::run_verify(rdiff::verify::Suite::Identities, 19).unwrap();
    let row = report.row("energy_drift_energy_diffusion").unwrap();
    assert!(row.pass, "{}", report.render());
}
