//! Property tests pitting the detector against the independent brute-force
//! oracle, and the path search against the history slice.

use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;
use washtrade::detector::{detect_wash_sales, find_intermediaries, DetectorConfig};
use washtrade::graph::build_graph;
use washtrade::ledger::{TokenHistory, Transaction};
use washtrade::money::Usd;
use washtrade::synth::{generate_annotated, oracle_detect, PlantedCycle, ScenarioSpec};

fn raw_tx(i: usize, offset_secs: i64, from: u8, to: u8, cents: Option<i64>) -> Transaction {
    Transaction {
        tx_hash: format!("0x{i:02x}"),
        seq: i as u64,
        timestamp: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
            + Duration::seconds(offset_secs),
        sender: format!("w{from}"),
        receiver: format!("w{to}"),
        collection: "C".to_owned(),
        token_id: "T".to_owned(),
        pay_amount: None,
        pay_currency: None,
        usd_value: cents.map(Usd::from_cents),
    }
}

/// Arbitrary histories: wallets repeat, chains may break, self-sales and
/// shared timestamps happen.
fn arbitrary_history() -> impl Strategy<Value = TokenHistory> {
    let step = (
        0i64..=3 * 86_400,
        0u8..5,
        0u8..5,
        prop_oneof![
            3 => (1i64..=50_000).prop_map(Some),
            1 => Just(None),
            1 => Just(Some(0)), // zero-value sale classifies as transfer
        ],
    );
    proptest::collection::vec(step, 0..=20).prop_map(|steps| {
        let mut at = 0i64;
        let txs = steps
            .into_iter()
            .enumerate()
            .map(|(i, (gap, from, to, cents))| {
                at += gap;
                raw_tx(i, at, from, to, cents)
            })
            .collect();
        TokenHistory::new("C".to_owned(), "T".to_owned(), txs)
    })
}

/// Chain-consistent histories: the receiver of one transaction is the sender
/// of the next, wallets drawn from a small pool so paths revisit them.
fn chained_history() -> impl Strategy<Value = TokenHistory> {
    let step = (
        1i64..=3 * 86_400,
        0u8..4,
        prop_oneof![4 => (1i64..=50_000).prop_map(Some), 1 => Just(None)],
    );
    proptest::collection::vec(step, 0..=20).prop_map(|steps| {
        let mut at = 0i64;
        let mut holder = 0u8;
        let txs = steps
            .into_iter()
            .enumerate()
            .map(|(i, (gap, to, cents))| {
                at += gap;
                let tx = raw_tx(i, at, holder, to, cents);
                holder = to;
                tx
            })
            .collect();
        TokenHistory::new("C".to_owned(), "T".to_owned(), txs)
    })
}

fn config_strategy() -> impl Strategy<Value = DetectorConfig> {
    (1i64..=45, any::<bool>(), any::<bool>()).prop_map(|(days, windowless, transfers)| {
        DetectorConfig {
            window: Duration::days(days),
            include_transfers_in_matching: transfers,
            windowless,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn detector_agrees_with_oracle(history in arbitrary_history(), config in config_strategy()) {
        let detection = detect_wash_sales(&history, &config);
        let got: Vec<(usize, usize)> = detection
            .cycles
            .iter()
            .map(|c| (c.entry, c.repurchase))
            .collect();
        let expected = oracle_detect(&history, &config).unwrap();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn each_sale_enters_and_closes_at_most_one_cycle(
        history in arbitrary_history(),
        config in config_strategy(),
    ) {
        let detection = detect_wash_sales(&history, &config);
        let mut entries = std::collections::HashSet::new();
        let mut repurchases = std::collections::HashSet::new();
        for c in &detection.cycles {
            prop_assert!(entries.insert(c.entry));
            prop_assert!(repurchases.insert(c.repurchase));
        }
    }

    #[test]
    fn intermediaries_equal_history_slice_on_unbroken_chains(history in chained_history()) {
        let detection = detect_wash_sales(&history, &DetectorConfig::default());
        prop_assert!(detection.warnings.is_empty());
        for cycle in &detection.cycles {
            let expected: Vec<usize> = (cycle.entry + 1..cycle.repurchase).collect();
            prop_assert_eq!(&cycle.intermediaries, &expected);
        }
        // and directly through the graph entry point
        if !history.is_empty() {
            let graph = build_graph(&history).unwrap();
            for cycle in &detection.cycles {
                let path = find_intermediaries(&graph, cycle.entry, cycle.repurchase).unwrap();
                let expected: Vec<usize> = (cycle.entry + 1..cycle.repurchase).collect();
                prop_assert_eq!(path, expected);
            }
        }
    }

    #[test]
    fn widening_the_window_never_drops_cycles_count(
        history in arbitrary_history(),
        days in 1i64..=30,
        extra in 0i64..=30,
    ) {
        let narrow = DetectorConfig { window: Duration::days(days), ..Default::default() };
        let wide = DetectorConfig { window: Duration::days(days + extra), ..Default::default() };
        let n = detect_wash_sales(&history, &narrow).cycles.len();
        let w = detect_wash_sales(&history, &wide).cycles.len();
        prop_assert!(w >= n, "window {} -> {} cycles, window {} -> {}", days, n, days + extra, w);
    }

    #[test]
    fn windowless_dominates_every_window_count(history in arbitrary_history(), days in 1i64..=45) {
        let windowed = DetectorConfig { window: Duration::days(days), ..Default::default() };
        let windowless = DetectorConfig::windowless();
        let n = detect_wash_sales(&history, &windowed).cycles.len();
        let w = detect_wash_sales(&history, &windowless).cycles.len();
        prop_assert!(w >= n);
    }

    #[test]
    fn detection_is_deterministic(history in arbitrary_history(), config in config_strategy()) {
        prop_assert_eq!(
            detect_wash_sales(&history, &config),
            detect_wash_sales(&history, &config)
        );
    }

    #[test]
    fn planted_cycles_recall(
        seed in any::<u64>(),
        plants in proptest::collection::vec((0usize..4, 0usize..3, 1i64..=60), 0..3),
        filler in 0usize..6,
        window_days in 1i64..=60,
    ) {
        let planted: Vec<PlantedCycle> = plants
            .iter()
            .map(|&(suspect, hops, gap_days)| PlantedCycle {
                suspect,
                hops,
                gap: Duration::days(gap_days),
                entry_usd: Usd::from_cents(10_000),
                exit_usd: Usd::from_cents(20_000),
            })
            .collect();
        let tx_count = planted.iter().map(|p| p.hops + 4).sum::<usize>() + filler;
        let spec = ScenarioSpec {
            wallet_count: tx_count + 8,
            tx_count,
            planted,
            seed,
            ..Default::default()
        };
        let (history, refs) = generate_annotated(&spec).unwrap();
        let config = DetectorConfig {
            window: Duration::days(window_days),
            ..Default::default()
        };
        let found: std::collections::HashSet<(usize, usize)> = detect_wash_sales(&history, &config)
            .cycles
            .iter()
            .map(|c| (c.entry, c.repurchase))
            .collect();
        for planted_ref in &refs {
            let pair = (planted_ref.entry, planted_ref.repurchase);
            if planted_ref.gap <= config.window {
                prop_assert!(found.contains(&pair), "missed in-window plant {pair:?}");
            } else {
                prop_assert!(!found.contains(&pair), "flagged out-of-window plant {pair:?}");
            }
        }
        // nothing beyond the in-window plants is ever detected
        let expected: std::collections::HashSet<(usize, usize)> = refs
            .iter()
            .filter(|r| r.gap <= config.window)
            .map(|r| (r.entry, r.repurchase))
            .collect();
        prop_assert_eq!(found, expected);
    }
}
