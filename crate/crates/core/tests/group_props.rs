use std::f64::consts::TAU;
use std::sync::Arc;

use proptest::prelude::*;
use symcocycle::cocycle::{GridFunction, GridSpec, Normalization};
use symcocycle::cover::LiftedMap;
use symcocycle::distortion::{word_ball_norm, GeneratorSet, ProbeSet};
use symcocycle::dynamics::{compose, GroupWord, Isotopy, Translation, TwistMap};
use symcocycle::{ManifoldModel, Point, Primitive, Window};

fn translations() -> GeneratorSet {
    let model = ManifoldModel::plane(Window::square(2.0).unwrap());
    let zero = GridFunction::from_fn(GridSpec::square(model.window, 9).unwrap(), Normalization::ModuloConstants, |_| Ok(0.0)).unwrap();
    GeneratorSet::new(
        model,
        Primitive::p_dq(),
        vec![
            ("a".into(), Arc::new(Translation::new(0.1, 0.0)), zero.clone()),
            ("b".into(), Arc::new(Translation::new(0.0, 0.13)), zero),
        ],
    )
    .unwrap()
}

fn word() -> impl Strategy<Value = Vec<(bool, i8)>> {
    prop::collection::vec((any::<bool>(), prop_oneof![Just(1i8), Just(-1i8)]), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Translations generate a copy of ℤ², whose word norm is the ℓ¹ norm
    /// of the exponent sums.
    #[test]
    fn word_norm_of_commuting_translations(letters in word()) {
        let gens = translations();
        let src: Vec<String> = letters.iter().map(|&(is_a, e)| format!("{}^{e}", if is_a { "a" } else { "b" })).collect();
        let w: GroupWord = src.join(" ").parse().unwrap();
        let target = compose(&w, &gens.table()).unwrap();
        let (sa, sb) = letters.iter().fold((0i32, 0i32), |(a, b), &(is_a, e)| if is_a { (a + e as i32, b) } else { (a, b + e as i32) });
        let (probes, secondary) = ProbeSet::default_pair(&gens.model().window, 3);
        let (norm, _) = word_ball_norm(&gens, &target, 6, &probes, &secondary).unwrap();
        prop_assert_eq!(norm, Some((sa.abs() + sb.abs()) as usize));
        prop_assert!(norm.unwrap() <= w.len());
    }

    #[test]
    fn lifts_commute_with_deck_translations(k in 1u32..4, amp in 0.5..3.0f64, seed in 0u64..1000) {
        let model = ManifoldModel::cylinder(Window::new(-2.0, 2.0, 0.0, TAU).unwrap());
        let tw: Arc<dyn Isotopy> = Arc::new(TwistMap::parse(&format!("{amp}*pi*((p+1)/2)^{k}"), true).unwrap());
        let lifted = LiftedMap::new(tw, model).unwrap();
        let pts: Vec<Point> = (0..20)
            .map(|i| {
                let h = (seed * 31 + i) as f64;
                Point::new(-1.9 + 3.8 * (h * 0.618).fract(), -30.0 + 60.0 * (h * 0.414).fract())
            })
            .collect();
        prop_assert!(lifted.deck_residual(&pts).unwrap() < 1e-9);
        prop_assert!(lifted.projection_residual(&pts).unwrap() < 1e-9);
    }
}

#[test]
fn probe_sets_depend_only_on_the_seed() {
    let w = Window::square(1.0).unwrap();
    assert_eq!(ProbeSet::halton(&w, 0, 10, 7), ProbeSet::halton(&w, 0, 10, 7));
    assert_ne!(ProbeSet::halton(&w, 0, 10, 7), ProbeSet::halton(&w, 0, 10, 8));
}
