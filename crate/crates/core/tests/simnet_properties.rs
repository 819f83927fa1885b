use homenet::netmodel::{table_one, DistanceTable, NodeId, Position, Topology};
use homenet::routing::{all_pairs_profile, brute_force_route, find_optimal_path};
use homenet::simnet::{
    run_discovery, run_traffic, run_traffic_with, Emulator, EmulatorConfig, SimConfig,
};
use homenet::wire::MsgType;
use homenet::CountingMode;
use proptest::prelude::*;

fn positions_topology() -> impl Strategy<Value = Topology> {
    prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..25).prop_map(|pts| {
        Topology::from_positions(pts.into_iter().map(|(x, y)| Position::new(x, y)).collect())
            .unwrap()
    })
}

fn matrix_topology() -> impl Strategy<Value = Topology> {
    (1usize..=12).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.5..20.0f64, n), n).prop_map(move |m| {
            let raw: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { m[i][j] }).collect())
                .collect();
            Topology::from_table(DistanceTable::directed(&raw).unwrap())
        })
    })
}

fn traffic_config(seed: u64, mode: CountingMode) -> SimConfig {
    SimConfig {
        radius: 5.0,
        transmissions: 400,
        seed,
        mode,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discovery_recovers_ground_truth(
        topo in prop_oneof![positions_topology(), matrix_topology()],
        root_pick in any::<prop::sample::Index>(),
    ) {
        let root = NodeId(root_pick.index(topo.len()) as u32 + 1);
        let d = run_discovery(&topo, root).unwrap();
        prop_assert_eq!(&d.table, topo.table());
        prop_assert_eq!(d.message_count, topo.len());
    }

    #[test]
    fn traffic_conserves_visits(seed in any::<u64>(), all in any::<bool>(), k in 2u8..=9) {
        let mode = if all { CountingMode::AllPathNodes } else { CountingMode::TransmittersOnly };
        let topo = Topology::from_table(table_one());
        let config = SimConfig { radius: f64::from(k), ..traffic_config(seed, mode) };
        let run = run_traffic_with(&topo, &config, find_optimal_path).unwrap();
        let expected: u64 = run
            .log
            .iter()
            .filter_map(|d| d.route.as_ref())
            .map(|r| match mode {
                CountingMode::AllPathNodes => r.path.len() as u64,
                CountingMode::TransmittersOnly => r.path.len() as u64 - 1,
            })
            .sum();
        prop_assert_eq!(run.stats.total(), expected);
        prop_assert_eq!(run.log.len() as u64, config.transmissions);
    }

    #[test]
    fn oracle_replay_matches_simulation(seed in any::<u64>(), k in 1u8..=9) {
        let topo = Topology::from_table(table_one());
        let config = SimConfig { radius: f64::from(k), ..traffic_config(seed, CountingMode::TransmittersOnly) };
        let fast = run_traffic_with(&topo, &config, find_optimal_path).unwrap();
        let slow = run_traffic_with(&topo, &config, brute_force_route).unwrap();
        prop_assert_eq!(fast, slow);
    }
}

#[test]
fn identical_seed_identical_stats() {
    let topo = Topology::from_table(table_one());
    let config = traffic_config(99, CountingMode::TransmittersOnly);
    assert_eq!(
        run_traffic(&topo, &config).unwrap(),
        run_traffic(&topo, &config).unwrap()
    );
    let other = SimConfig {
        seed: 100,
        ..config
    };
    assert_ne!(
        run_traffic(&topo, &config).unwrap(),
        run_traffic(&topo, &other).unwrap()
    );
}

#[test]
fn profile_agrees_with_traffic_expectation() {
    let table = table_one();
    let profile = all_pairs_profile(&table, 5.0, CountingMode::TransmittersOnly).unwrap();
    let topo = Topology::from_table(table);
    let stats = run_traffic(
        &topo,
        &SimConfig {
            radius: 5.0,
            transmissions: 20_000,
            seed: 5,
            mode: CountingMode::TransmittersOnly,
        },
    )
    .unwrap();
    for (node, (&sim, &exact)) in stats.counts().iter().zip(profile.counts()).enumerate() {
        let p = exact as f64 / 90.0;
        let mean = 20_000.0 * p;
        let sigma = (20_000.0 * p * (1.0 - p)).sqrt();
        assert!(
            (sim as f64 - mean).abs() <= 4.0 * sigma,
            "node {}: {sim} vs {mean:.1}",
            node + 1
        );
    }
}

#[test]
fn every_reading_is_uplinked_once() {
    let topo = Topology::from_table(table_one());
    let mut emu = Emulator::new(
        topo,
        EmulatorConfig {
            radius: 5.0,
            seed: 3,
            sample_period: 7,
        },
    )
    .unwrap();
    emu.run_until(300);
    assert!(emu.drain(100));
    let samples = emu.trace().iter().filter(|e| e.kind == "sample").count();
    let uplinked = emu
        .take_uplink()
        .iter()
        .filter(|d| d.msg_type == MsgType::SensorData)
        .count();
    assert!(samples > 300);
    assert_eq!(samples, uplinked);
    assert_eq!(emu.dropped(), 0);
}

#[test]
fn unreachable_readings_are_dropped_not_duplicated() {
    let topo = Topology::from_table(table_one());
    let mut emu = Emulator::new(
        topo,
        EmulatorConfig {
            radius: 2.0,
            seed: 3,
            sample_period: 10,
        },
    )
    .unwrap();
    emu.run_until(100);
    emu.drain(50);
    let samples = emu.trace().iter().filter(|e| e.kind == "sample").count() as u64;
    let uplinked = emu
        .take_uplink()
        .iter()
        .filter(|d| d.msg_type == MsgType::SensorData)
        .count() as u64;
    assert_eq!(samples, uplinked + emu.dropped());
    assert!(emu.dropped() > 0);
}
