// SPDX-License-Identifier: Apache-2.0

mod common;

use cosynth::flow::{check_model, BuildOptions, Design};
use cosynth::gma::{build_tree, emit_netlist, ColifNetlist};
use cosynth::hwsynth::HwDesign;
use cosynth::sim::{compare_traces, simulate, CompareMode, Stimulus, Trace};
use proptest::prelude::*;

fn trace_of(ports: usize, values: &[i32]) -> Trace {
    let mut t = Trace::new((0..ports).map(|p| format!("p{p}")).collect());
    for (i, &v) in values.iter().enumerate() {
        t.push((i / ports) as u64, i % ports, v);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_text_round_trips(ports in 1usize..4, values in prop::collection::vec(any::<i32>(), 0..60)) {
        let t = trace_of(ports, &values).with_meta("level", 3);
        let back = Trace::parse(&t.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), t.to_text());
    }

    #[test]
    fn stimulus_csv_round_trips(seed in any::<u64>(), ticks in 0u64..40) {
        let s = Stimulus::seeded(vec!["a".into(), "b".into()], ticks, seed, 1000);
        prop_assert_eq!(Stimulus::parse_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    fn delayed_copy_matches_modulo_its_delay(values in prop::collection::vec(-50i32..50, 1..40), k in 0u32..6) {
        let a = trace_of(1, &values);
        let mut shifted = vec![7; k as usize];
        shifted.extend(&values);
        let b = trace_of(1, &shifted);
        let c = compare_traces(&a, &b, CompareMode::ModuloLatency(Some(k))).unwrap();
        prop_assert!(c.equal);
        let found = compare_traces(&a, &b, CompareMode::ModuloLatency(None)).unwrap();
        prop_assert!(found.equal && found.latency.unwrap() <= k);
    }

    #[test]
    fn balancing_matches_longest_path_slack(seed in any::<u64>()) {
        let plan = common::pipelined_hw(&mut common::rng(seed), 12);
        let d = Design::from_source(&plan.to_model(), &BuildOptions::default()).unwrap();
        let HwDesign::Pipelined { graph, k } = &d.hw[0].design else { panic!("expected pipelining") };
        prop_assert_eq!((*k, graph.register_count()), plan.slack_oracle());
    }

    #[test]
    fn controller_interval_is_latency_sum(seed in any::<u64>()) {
        let plan = common::controlled_hw(&mut common::rng(seed), 8);
        let d = Design::from_source(&plan.to_model(), &BuildOptions::default()).unwrap();
        prop_assert_eq!(d.hw[0].design.latency(), plan.ii_oracle());
    }

    #[test]
    fn netlist_json_round_trips(seed in any::<u64>()) {
        let plan = common::partitioned(&mut common::rng(seed));
        let (_, tlm, _) = check_model(&plan.to_model(), &BuildOptions::default()).unwrap();
        let n = emit_netlist(&build_tree(&tlm));
        prop_assert_eq!(ColifNetlist::from_json(&n.to_json()).unwrap(), n.clone());
        let counts = (n.modules().len(), n.port_count(), n.nets.len());
        prop_assert_eq!(counts, plan.netlist_counts());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functional_and_actor_levels_agree_exactly(seed in any::<u64>()) {
        let plan = common::partitioned_with(&mut common::rng(seed), &common::NETLIST_SHAPE);
        let d = Design::from_source(&plan.to_model(), &BuildOptions::default()).unwrap();
        let stim = Stimulus::seeded(d.input_ports(), 32, seed, 30);
        let a = simulate(&d, 0, &stim, 32).unwrap();
        let b = simulate(&d, 1, &stim, 32).unwrap();
        prop_assert!(compare_traces(&a.trace, &b.trace, CompareMode::Exact).unwrap().equal);
    }
}
