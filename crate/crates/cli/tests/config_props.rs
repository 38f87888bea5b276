use flock_cli::{ConfigFile, Scenario};
use flock_core::GeneratingKind;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = GeneratingKind> {
    prop_oneof![
        Just(GeneratingKind::Linear),
        (0.01f64..5.0).prop_map(|gamma| GeneratingKind::Power { gamma }),
        Just(GeneratingKind::Exponential),
        Just(GeneratingKind::Logarithmic),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![Just(Scenario::Line), Just(Scenario::Circle), Just(Scenario::Mission)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn toml_round_trip(
        regime in 1u8..=9,
        scenario in scenario(),
        n in 1usize..500,
        dim in 2usize..=3,
        alpha in 0.0f64..5.0,
        r0 in 0.1f64..20.0,
        k_kind in kind(),
        p_kind in kind(),
        seed in any::<u64>(),
        dt in 1e-4f64..0.1,
    ) {
        let mut c = ConfigFile::default();
        c.apply_regime(regime).unwrap();
        c.control.alpha = alpha;
        c.control.r0 = r0;
        c.control.k_kind = k_kind;
        c.control.p_kind = p_kind;
        c.apply_scenario(scenario).unwrap();
        c.model.n_agents = n;
        c.model.dim = dim;
        c.run.seed = seed;
        c.run.dt = dt;
        let text = c.to_toml().unwrap();
        prop_assert_eq!(ConfigFile::parse(&text).unwrap(), c);
    }
}
