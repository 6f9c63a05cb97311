//! Synthetic token histories with planted cycles, and the independent
//! brute-force detector used to cross-check the real one.
//!
//! The generator keeps planted cycles exact by construction: filler trades
//! and intermediary hops always hand the token to a wallet that has never
//! held it, so the only sell-then-receive pairs in a generated history are
//! the planted suspects'. Blocks are spaced a year apart so cycles sharing a
//! suspect cannot bleed into each other under any realistic window.
//!
//! Randomness comes from ChaCha8 seeded with the scenario seed, so a spec
//! generates the same history on every platform.

use crate::detector::DetectorConfig;
use crate::ledger::{TokenHistory, Transaction};
use crate::money::Usd;
use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use thiserror::Error;

/// Quadratic-scan guard for the oracle.
pub const ORACLE_MAX_TXS: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("infeasible scenario: {0}")]
    InfeasibleSpec(String),
    #[error("history too large for the quadratic oracle: {len} > {max}")]
    TooLarge { len: usize, max: usize },
}

/// One cycle to plant: the suspect (an index into the wallet pool) sells and
/// buys back after `gap`, with `hops` intermediary holders in between. The
/// suspect acquires at `entry_usd` before the cycle and exits at `exit_usd`
/// after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedCycle {
    pub suspect: usize,
    pub hops: usize,
    pub gap: Duration,
    pub entry_usd: Usd,
    pub exit_usd: Usd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub collection: String,
    pub token_id: String,
    pub wallet_count: usize,
    pub tx_count: usize,
    pub planted: Vec<PlantedCycle>,
    pub base_usd: Usd,
    pub jitter_usd: Usd,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            collection: "synthetic".to_owned(),
            token_id: "1".to_owned(),
            wallet_count: 64,
            tx_count: 12,
            planted: Vec::new(),
            base_usd: Usd::from_cents(5_000),
            jitter_usd: Usd::from_cents(1_000),
            seed: 0,
        }
    }
}

/// Where a planted cycle landed in the generated history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedRef {
    pub entry: usize,
    pub repurchase: usize,
    pub gap: Duration,
}

struct WalletPool {
    suspects: Vec<usize>,
    next: usize,
    count: usize,
}

impl WalletPool {
    fn address(index: usize) -> String {
        format!("0x{index:040x}")
    }

    /// Next pool wallet that is not reserved for a suspect role.
    fn fresh(&mut self) -> Result<String, SynthError> {
        while self.suspects.contains(&self.next) {
            self.next += 1;
        }
        if self.next >= self.count {
            return Err(SynthError::InfeasibleSpec(format!(
                "wallet pool exhausted: need more than {} wallets",
                self.count
            )));
        }
        let addr = Self::address(self.next);
        self.next += 1;
        Ok(addr)
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<TokenHistory, SynthError> {
    generate_annotated(spec).map(|(history, _)| history)
}

/// Like [`generate`] but also reports where each planted cycle landed.
pub fn generate_annotated(
    spec: &ScenarioSpec,
) -> Result<(TokenHistory, Vec<PlantedRef>), SynthError> {
    let block_len: usize = spec.planted.iter().map(|p| p.hops + 4).sum();
    if block_len > spec.tx_count {
        return Err(SynthError::InfeasibleSpec(format!(
            "planted cycles need {block_len} transactions but tx_count is {}",
            spec.tx_count
        )));
    }
    for p in &spec.planted {
        if p.suspect >= spec.wallet_count {
            return Err(SynthError::InfeasibleSpec(format!(
                "suspect index {} out of a pool of {}",
                p.suspect, spec.wallet_count
            )));
        }
        if p.gap < Duration::zero() {
            return Err(SynthError::InfeasibleSpec("negative gap".to_owned()));
        }
        if p.hops > 0 && p.gap.num_seconds() < (p.hops + 1) as i64 {
            return Err(SynthError::InfeasibleSpec(
                "gap too short to fit the intermediary hops".to_owned(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pool = WalletPool {
        suspects: spec.planted.iter().map(|p| p.suspect).collect(),
        next: 0,
        count: spec.wallet_count,
    };

    let filler_total = spec.tx_count - block_len;
    // split fillers around the planted blocks
    let mut fillers = vec![0usize; spec.planted.len() + 1];
    for _ in 0..filler_total {
        let slot = rng.gen_range(0..fillers.len());
        fillers[slot] += 1;
    }

    let mut txs: Vec<Transaction> = Vec::with_capacity(spec.tx_count);
    let mut refs: Vec<PlantedRef> = Vec::with_capacity(spec.planted.len());
    let mut holder = pool.fresh()?;
    let mut at: DateTime<Utc> = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
    let price = |rng: &mut ChaCha8Rng| -> Usd {
        let base = spec.base_usd.as_decimal();
        let jitter = spec.jitter_usd.as_decimal();
        let lo = (base - jitter).max(Decimal::new(1, 2));
        let hi = base + jitter;
        let span_cents = ((hi - lo) * Decimal::from(100))
            .try_into()
            .unwrap_or(0i64)
            .max(0);
        let offset = if span_cents > 0 {
            rng.gen_range(0..=span_cents)
        } else {
            0
        };
        Usd::from_decimal(lo) + Usd::from_cents(offset)
    };

    let push = |txs: &mut Vec<Transaction>,
                from: String,
                to: String,
                when: DateTime<Utc>,
                usd: Option<Usd>| {
        let seq = txs.len() as u64;
        txs.push(Transaction {
            tx_hash: format!("0x{:064x}", seq + 1),
            seq,
            timestamp: when,
            sender: from,
            receiver: to,
            collection: spec.collection.clone(),
            token_id: spec.token_id.clone(),
            pay_amount: None,
            pay_currency: None,
            usd_value: usd,
        });
    };

    for (block, planted) in spec.planted.iter().enumerate() {
        for _ in 0..fillers[block] {
            let to = pool.fresh()?;
            let value = if rng.gen_bool(0.8) {
                Some(price(&mut rng))
            } else {
                None
            };
            push(&mut txs, holder.clone(), to.clone(), at, value);
            holder = to;
            at += Duration::hours(rng.gen_range(6..=48));
        }

        let suspect = WalletPool::address(planted.suspect);
        // acquisition: the suspect buys in at the entry price
        push(
            &mut txs,
            holder.clone(),
            suspect.clone(),
            at,
            Some(planted.entry_usd),
        );
        at += Duration::hours(1);
        // entry sale
        let entry_idx = txs.len();
        let entry_at = at;
        let first_hop = pool.fresh()?;
        push(
            &mut txs,
            suspect.clone(),
            first_hop.clone(),
            at,
            Some(price(&mut rng)),
        );
        holder = first_hop;
        // intermediary hops inside the gap
        let gap_secs = planted.gap.num_seconds();
        for hop in 0..planted.hops {
            let hop_at = entry_at
                + Duration::seconds(gap_secs * (hop as i64 + 1) / (planted.hops as i64 + 1));
            let to = pool.fresh()?;
            let value = if rng.gen_bool(0.7) {
                Some(price(&mut rng))
            } else {
                None
            };
            push(&mut txs, holder.clone(), to.clone(), hop_at, value);
            holder = to;
        }
        // repurchase lands exactly `gap` after the entry
        let repurchase_idx = txs.len();
        push(
            &mut txs,
            holder.clone(),
            suspect.clone(),
            entry_at + planted.gap,
            Some(price(&mut rng)),
        );
        at = entry_at + planted.gap + Duration::hours(1);
        // exit sale
        let to = pool.fresh()?;
        push(
            &mut txs,
            suspect.clone(),
            to.clone(),
            at,
            Some(planted.exit_usd),
        );
        holder = to;
        refs.push(PlantedRef {
            entry: entry_idx,
            repurchase: repurchase_idx,
            gap: planted.gap,
        });
        // keep same-suspect blocks from interacting
        at += Duration::days(365);
    }

    for _ in 0..fillers[spec.planted.len()] {
        let to = pool.fresh()?;
        let value = if rng.gen_bool(0.8) {
            Some(price(&mut rng))
        } else {
            None
        };
        push(&mut txs, holder.clone(), to.clone(), at, value);
        holder = to;
        at += Duration::hours(rng.gen_range(6..=48));
    }

    Ok((
        TokenHistory::new(spec.collection.clone(), spec.token_id.clone(), txs),
        refs,
    ))
}

/// A run of back-and-forth sales between two wallets with a linear price
/// ramp. A run of `count` sales chains into `count - 1` cycles and flags
/// every sale in it.
#[allow(clippy::too_many_arguments)]
pub fn alternating_sales(
    collection: &str,
    token_id: &str,
    wallet_a: &str,
    wallet_b: &str,
    count: usize,
    start_usd: Usd,
    end_usd: Usd,
    start_at: DateTime<Utc>,
    spacing: Duration,
) -> TokenHistory {
    let mut txs = Vec::with_capacity(count);
    for i in 0..count {
        let (from, to) = if i % 2 == 0 {
            (wallet_a, wallet_b)
        } else {
            (wallet_b, wallet_a)
        };
        let value = if count <= 1 {
            start_usd
        } else {
            let start = start_usd.as_decimal();
            let end = end_usd.as_decimal();
            let step = (end - start) * Decimal::from(i as u64) / Decimal::from((count - 1) as u64);
            Usd::from_decimal(start + step)
        };
        txs.push(Transaction {
            tx_hash: format!("0x{:064x}", i + 1),
            seq: i as u64,
            timestamp: start_at + spacing * (i as i32),
            sender: from.to_owned(),
            receiver: to.to_owned(),
            collection: collection.to_owned(),
            token_id: token_id.to_owned(),
            pay_amount: None,
            pay_currency: None,
            usd_value: Some(value),
        });
    }
    TokenHistory::new(collection.to_owned(), token_id.to_owned(), txs)
}

/// Exhaustive reference detector: scans every ordered pair of qualifying
/// events and applies the same greedy earliest-match policy as the real
/// detector, but shares none of its code. Returns (entry, repurchase) index
/// pairs.
pub fn oracle_detect(
    history: &TokenHistory,
    config: &DetectorConfig,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let txs = history.txs();
    if txs.len() > ORACLE_MAX_TXS {
        return Err(SynthError::TooLarge {
            len: txs.len(),
            max: ORACLE_MAX_TXS,
        });
    }
    let qualifies = |i: usize| -> bool {
        if config.include_transfers_in_matching {
            return true;
        }
        matches!(txs[i].usd_value, Some(v) if v.is_positive())
    };

    let mut taken = vec![false; txs.len()];
    let mut pairs = Vec::new();
    for i in 0..txs.len() {
        if !qualifies(i) {
            continue;
        }
        for j in i..txs.len() {
            if !qualifies(j) || taken[j] {
                continue;
            }
            if txs[j].receiver != txs[i].sender {
                continue;
            }
            let in_window =
                config.windowless || (txs[j].timestamp - txs[i].timestamp) <= config.window;
            if in_window {
                pairs.push((i, j));
                taken[j] = true;
                break;
            }
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{detect_wash_sales, DetectorConfig};
    use crate::testutil::{bayc_1332_history, usd};

    #[test]
    fn planted_cycle_is_found_with_its_hop() {
        let spec = ScenarioSpec {
            tx_count: 10,
            planted: vec![PlantedCycle {
                suspect: 40,
                hops: 1,
                gap: Duration::days(5),
                entry_usd: usd("100.00"),
                exit_usd: usd("250.00"),
            }],
            seed: 7,
            ..Default::default()
        };
        let (history, refs) = generate_annotated(&spec).unwrap();
        assert_eq!(history.len(), 10);
        let detection = detect_wash_sales(&history, &DetectorConfig::default());
        assert_eq!(detection.cycles.len(), 1);
        let cycle = &detection.cycles[0];
        assert_eq!(cycle.entry, refs[0].entry);
        assert_eq!(cycle.repurchase, refs[0].repurchase);
        assert_eq!(cycle.intermediaries.len(), 1);
        // detector and oracle agree on the generated history
        let pairs = oracle_detect(&history, &DetectorConfig::default()).unwrap();
        assert_eq!(pairs, vec![(cycle.entry, cycle.repurchase)]);
    }

    #[test]
    fn no_planted_cycles_means_no_detections() {
        let spec = ScenarioSpec {
            tx_count: 15,
            seed: 3,
            ..Default::default()
        };
        let history = generate(&spec).unwrap();
        assert!(detect_wash_sales(&history, &DetectorConfig::default())
            .cycles
            .is_empty());
    }

    #[test]
    fn generation_is_chain_consistent_and_deterministic() {
        let spec = ScenarioSpec {
            tx_count: 16,
            planted: vec![PlantedCycle {
                suspect: 9,
                hops: 2,
                gap: Duration::days(10),
                entry_usd: usd("50.00"),
                exit_usd: usd("60.00"),
            }],
            seed: 11,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        for pair in a.txs().windows(2) {
            assert_eq!(pair[0].receiver, pair[1].sender);
        }
    }

    #[test]
    fn out_of_window_plant_is_not_detected_unless_windowless() {
        let spec = ScenarioSpec {
            tx_count: 6,
            planted: vec![PlantedCycle {
                suspect: 0,
                hops: 0,
                gap: Duration::days(40),
                entry_usd: usd("10.00"),
                exit_usd: usd("20.00"),
            }],
            seed: 2,
            ..Default::default()
        };
        let history = generate(&spec).unwrap();
        assert!(detect_wash_sales(&history, &DetectorConfig::default())
            .cycles
            .is_empty());
        assert_eq!(
            detect_wash_sales(&history, &DetectorConfig::windowless())
                .cycles
                .len(),
            1
        );
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let overfull = ScenarioSpec {
            tx_count: 3,
            planted: vec![PlantedCycle {
                suspect: 0,
                hops: 0,
                gap: Duration::days(1),
                entry_usd: usd("1"),
                exit_usd: usd("2"),
            }],
            ..Default::default()
        };
        assert!(matches!(
            generate(&overfull),
            Err(SynthError::InfeasibleSpec(_))
        ));
        let tiny_pool = ScenarioSpec {
            wallet_count: 2,
            tx_count: 10,
            ..Default::default()
        };
        assert!(matches!(
            generate(&tiny_pool),
            Err(SynthError::InfeasibleSpec(_))
        ));
    }

    #[test]
    fn alternating_run_flags_every_sale() {
        let history = alternating_sales(
            "Otherdeed",
            "55343",
            "0x837e6fd5d2b39b6fd2791ba8a4a364d104c18e15",
            "0x2156001ecebe8fdcd46c0c9be0738d48b2e98d58",
            17,
            usd("14.00"),
            usd("197.00"),
            Utc.with_ymd_and_hms(2022, 5, 1, 0, 0, 0).unwrap(),
            Duration::minutes(30),
        );
        let detection = detect_wash_sales(&history, &DetectorConfig::default());
        // 17 chained sales make 16 cycles flagging all 17 transactions
        assert_eq!(detection.cycles.len(), 16);
        let mut flagged: std::collections::HashSet<usize> = std::collections::HashSet::new();
        for c in &detection.cycles {
            flagged.insert(c.entry);
            flagged.insert(c.repurchase);
        }
        assert_eq!(flagged.len(), 17);
        // brute force over ordered sale pairs agrees
        let pairs = oracle_detect(&history, &DetectorConfig::default()).unwrap();
        assert_eq!(pairs.len(), 16);
        assert_eq!(
            pairs,
            detection
                .cycles
                .iter()
                .map(|c| (c.entry, c.repurchase))
                .collect::<Vec<_>>()
        );
        // the ramp starts at $14 and ends at $197
        assert_eq!(history.txs()[0].usd_value.unwrap(), usd("14.00"));
        assert_eq!(history.txs()[16].usd_value.unwrap(), usd("197.00"));
    }

    #[test]
    fn oracle_finds_the_bayc_1332_pair() {
        let history = bayc_1332_history();
        let pairs = oracle_detect(&history, &DetectorConfig::default()).unwrap();
        assert_eq!(pairs, vec![(1, 3)]);
    }

    #[test]
    fn oracle_empty_history() {
        let history = TokenHistory::new("C".into(), "T".into(), Vec::new());
        assert_eq!(
            oracle_detect(&history, &DetectorConfig::default()).unwrap(),
            Vec::new()
        );
    }

    #[test]
    fn oracle_guards_against_large_inputs() {
        let history = alternating_sales(
            "C",
            "T",
            "a",
            "b",
            ORACLE_MAX_TXS + 1,
            usd("1.00"),
            usd("2.00"),
            Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
            Duration::seconds(1),
        );
        assert!(matches!(
            oracle_detect(&history, &DetectorConfig::default()),
            Err(SynthError::TooLarge { .. })
        ));
    }
}
