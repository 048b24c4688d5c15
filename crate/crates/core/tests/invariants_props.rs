use std::f64::consts::TAU;

use proptest::prelude::*;
use symcocycle::cocycle::{cocycle_by_path, normalize_compact, GridSpec, PathSettings, COLLAR_TOL};
use symcocycle::cover::oscillation_bound;
use symcocycle::dynamics::{FlowMap, HamiltonianSpec, IntegratorSettings, TwistMap};
use symcocycle::invariants::{
    calabi, calabi_from_hamiltonian, find_fixed_points, polterovich, polterovich_along_segment, twist_check,
};
use symcocycle::{ManifoldModel, Point, Primitive, Window};

fn plane() -> ManifoldModel {
    ManifoldModel::plane(Window::square(2.0).unwrap())
}

fn radial(amp: f64, cp: f64, cq: f64) -> FlowMap {
    let src = format!("{amp}*max(0, 1 - ((p - {cp})^2 + (q - {cq})^2)/1.21)^6");
    FlowMap::new(HamiltonianSpec::parse("F", &src).unwrap(), IntegratorSettings::default(), plane()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// The centre of a radial bump is fixed with action equal to the bump's
    /// height, and points outside the support have action zero.
    #[test]
    fn polterovich_of_a_bump_is_its_height(amp in 0.2..1.5f64, cp in -0.4..0.4f64, cq in -0.4..0.4f64) {
        let f = radial(amp, cp, cq);
        let (x, y) = (Point::new(cp, cq), Point::new(-1.9, 1.9));
        for alpha in [Primitive::p_dq(), Primitive::symmetric()] {
            let p = polterovich_along_segment(&f, &alpha, &plane(), x, y, 1e-8).unwrap();
            prop_assert!((p - amp).abs() < 1e-6, "{p} vs {amp}");
        }
    }

    /// Below amplitude 0.6 the centre turns by less than a full revolution,
    /// so the only other fixed points are those outside the support.
    #[test]
    fn fixed_point_search_finds_the_centre(amp in 0.2..0.6f64, cp in -0.4..0.4f64, cq in -0.4..0.4f64) {
        let f = radial(amp, cp, cq);
        let scan = GridSpec::square(Window::square(2.0).unwrap(), 17).unwrap();
        let report = find_fixed_points(&f, &plane(), &scan, Some(&Primitive::p_dq())).unwrap();
        let centre = report.points.iter().find(|p| !p.degenerate).expect("isolated fixed point");
        prop_assert!((centre.location - Point::new(cp, cq)).norm() < 1e-7);
        prop_assert!((centre.action.unwrap() - amp).abs() < 1e-6);
        prop_assert!(report.points.iter().any(|p| p.degenerate), "exterior patch missing");
    }

    /// Profiles `2π((p+1)/2)^k` rise from 0 to 2π, so the jump is `2π − 4π/(k+1)`.
    #[test]
    fn twist_jump_is_two_pi_minus_the_profile_integral(k in 1u32..6, q0 in 0.0..6.0f64) {
        let model = ManifoldModel::cylinder(Window::new(-2.0, 2.0, q0, q0 + TAU).unwrap());
        let tw = TwistMap::parse(&format!("2*pi*((p+1)/2)^{k}"), true).unwrap();
        let r = twist_check(&tw, &Primitive::p_dq(), &model, 1e-6).unwrap();
        let exact = TAU - 2.0 * TAU / (k + 1) as f64;
        prop_assert!((r.boundary_difference - exact).abs() < 1e-6 && (r.expected - exact).abs() < 1e-9);
        prop_assert_eq!(r.compactly_supported, k == 1);
    }
}

#[test]
fn grid_invariants_of_a_bump_flow() {
    let model = plane();
    let f = radial(0.4, 0.1, -0.1);
    let grid = GridSpec::square(model.window, 61).unwrap();
    let alpha = Primitive::p_dq();
    let k = cocycle_by_path(&f, &alpha, &model, None, &grid, PathSettings::default()).unwrap();

    let compact = normalize_compact(&k, None, COLLAR_TOL).unwrap();
    let c = calabi(&compact).unwrap();
    let oracle = calabi_from_hamiltonian(f.spec(), &model.window, 1e-10).unwrap();
    assert!((c - oracle).abs() < 1e-3 * oracle, "{c} vs {oracle}");

    let (x, y) = (Point::new(0.1, -0.1), Point::new(1.9, -1.9));
    let p = polterovich(&f, &k, &model, x, y).unwrap();
    assert!((p - 0.4).abs() < 1e-4, "{p}");
    assert!(p.abs() <= k.oscillation().max(k.interpolate(x).unwrap() - k.min()));

    let bound = oscillation_bound(&k, &f, &alpha).unwrap();
    assert!(bound.holds(), "{bound:?}");
}
