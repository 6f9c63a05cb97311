//! Wash-sale cycle detection.
//!
//! Scanning a token's sales in chronological order, a sale by wallet `w` is
//! matched to the earliest later sale in which `w` receives the token back,
//! provided the repurchase has not already closed another cycle and the gap
//! fits the window (30 days by default, inclusive). Matching a transaction to
//! itself covers the degenerate self-sale, which is flagged as a cycle with
//! no intermediaries.
//!
//! Intermediaries are found by a path search over the full graph (sales and
//! transfers), restricted to edges strictly between the entry and the
//! repurchase and expanded in chronological order, so the result is the
//! earliest-timestamp path. On an unbroken ownership chain that path is
//! exactly the contiguous slice of the history between the two flagged sales.

use crate::graph::{build_graph, EdgeLabel, LabelKind, TokenGraph};
use crate::ledger::{TokenHistory, TxKind};
use chrono::Duration;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_WINDOW_SECONDS: i64 = 30 * 86_400;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetectorError {
    #[error("window must be positive unless windowless mode is on")]
    InvalidWindow,
    #[error("no ownership path between entry and repurchase")]
    NoPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Maximum entry-to-repurchase gap, inclusive.
    pub window: Duration,
    /// When set, transfers also qualify as entry/repurchase events.
    pub include_transfers_in_matching: bool,
    /// When set, the window constraint is dropped entirely.
    pub windowless: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: Duration::seconds(DEFAULT_WINDOW_SECONDS),
            include_transfers_in_matching: false,
            windowless: false,
        }
    }
}

impl DetectorConfig {
    pub fn with_window_days(days: i64) -> Self {
        DetectorConfig {
            window: Duration::days(days),
            ..Default::default()
        }
    }

    pub fn windowless() -> Self {
        DetectorConfig {
            windowless: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if !self.windowless && self.window <= Duration::zero() {
            return Err(DetectorError::InvalidWindow);
        }
        Ok(())
    }
}

/// One detected cycle. All transaction references are indices into the token
/// history the cycle was detected from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WashCycle {
    pub token_id: String,
    /// The seller-repurchaser.
    pub suspect: String,
    /// First sale of the cycle; the suspect is the sender.
    pub entry: usize,
    /// Closing transaction; the suspect is the receiver.
    pub repurchase: usize,
    /// Ownership-path transactions strictly between entry and repurchase.
    pub intermediaries: Vec<usize>,
    /// The suspect's acquisition nearest before the entry, if any.
    pub pre_context: Option<usize>,
    /// First sale after the repurchase, if any.
    pub post_context: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorWarning {
    pub token_id: String,
    pub message: String,
}

/// Detection output: the cycles plus non-fatal findings (e.g. a broken
/// ownership chain between an entry and its repurchase).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Detection {
    pub cycles: Vec<WashCycle>,
    pub warnings: Vec<DetectorWarning>,
}

/// Runs cycle detection over one token history.
pub fn detect_wash_sales(history: &TokenHistory, config: &DetectorConfig) -> Detection {
    debug_assert!(config.validate().is_ok());
    let txs = history.txs();
    let qualifies = |i: usize| -> bool {
        config.include_transfers_in_matching || txs[i].kind() == TxKind::Sale
    };

    let mut detection = Detection::default();
    let mut consumed = vec![false; txs.len()];
    let mut graph: Option<TokenGraph> = None;

    for entry in 0..txs.len() {
        if !qualifies(entry) {
            continue;
        }
        let suspect = &txs[entry].sender;
        let mut matched = None;
        for rep in entry..txs.len() {
            if !qualifies(rep) || consumed[rep] || txs[rep].receiver != *suspect {
                continue;
            }
            if !config.windowless {
                let gap = txs[rep].timestamp - txs[entry].timestamp;
                if gap > config.window {
                    break; // timestamps only grow from here
                }
            }
            matched = Some(rep);
            break;
        }
        let Some(rep) = matched else { continue };
        consumed[rep] = true;

        let intermediaries = if rep == entry {
            Vec::new()
        } else {
            let graph = graph.get_or_insert_with(|| {
                build_graph(history).expect("history with a matched sale is nonempty")
            });
            match find_intermediaries(graph, entry, rep) {
                Ok(path) => path,
                Err(DetectorError::NoPath) => {
                    detection.warnings.push(DetectorWarning {
                        token_id: history.token_id.clone(),
                        message: format!(
                            "broken ownership chain between {} and {}; cycle kept with no intermediaries",
                            txs[entry].tx_hash, txs[rep].tx_hash
                        ),
                    });
                    Vec::new()
                }
                Err(other) => unreachable!("unexpected path error: {other}"),
            }
        };

        let pre_context = txs[..entry].iter().rposition(|t| t.receiver == *suspect);
        let post_context = txs[rep + 1..]
            .iter()
            .position(|t| t.kind() == TxKind::Sale)
            .map(|offset| rep + 1 + offset);

        detection.cycles.push(WashCycle {
            token_id: history.token_id.clone(),
            suspect: suspect.clone(),
            entry,
            repurchase: rep,
            intermediaries,
            pre_context,
            post_context,
        });
    }
    detection
}

/// Finds the transactions that carry the token from the entry's buyer back to
/// the repurchase's seller.
///
/// The search walks edges in chronological order with backtracking, accepting
/// only edges later than the one it arrived by and no later than the
/// repurchase; the first complete path is therefore the earliest-timestamp
/// path. Returns the path's edges excluding entry and repurchase themselves.
pub fn find_intermediaries(
    graph: &TokenGraph,
    entry: usize,
    repurchase: usize,
) -> Result<Vec<usize>, DetectorError> {
    debug_assert!(entry <= repurchase);
    if entry == repurchase {
        return Ok(Vec::new());
    }
    let edges = graph.edges();
    let start = edges[entry].to;

    // Frame: node we stand on, edge id we arrived by, cursor into the node's
    // outgoing list. `failed_from` memoizes dead ends: once a node fails with
    // arrival id `a`, any arrival at the same node with id >= `a` fails too.
    let mut path: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize, usize)> = vec![(start, entry, 0)];
    let mut failed_from: HashMap<usize, usize> = HashMap::new();

    while !stack.is_empty() {
        let top = stack.len() - 1;
        let (node, arrived, mut cursor) = stack[top];
        if failed_from.get(&node).is_some_and(|&a| arrived >= a) {
            stack.pop();
            path.pop();
            continue;
        }
        let outgoing = graph.outgoing(node);
        let mut advanced = false;
        while cursor < outgoing.len() {
            let edge = outgoing[cursor];
            cursor += 1;
            if edge <= arrived {
                continue;
            }
            if edge > repurchase {
                break;
            }
            if edge == repurchase {
                return Ok(path);
            }
            stack[top].2 = cursor;
            path.push(edge);
            stack.push((edges[edge].to, edge, 0));
            advanced = true;
            break;
        }
        if !advanced {
            failed_from
                .entry(node)
                .and_modify(|a| *a = (*a).min(arrived))
                .or_insert(arrived);
            stack.pop();
            path.pop();
        }
    }
    Err(DetectorError::NoPath)
}

/// Labels every transaction of the history given the detected cycles.
/// An edge holding several roles takes the most severe one: wash sale beats
/// cycle member beats the regular kinds.
pub fn label_all(history: &TokenHistory, cycles: &[WashCycle]) -> Vec<EdgeLabel> {
    let mut kinds: Vec<LabelKind> = history
        .txs()
        .iter()
        .map(|t| match t.kind() {
            TxKind::Sale => LabelKind::RegularSale,
            TxKind::Transfer => LabelKind::RegularTransfer,
        })
        .collect();
    for cycle in cycles {
        for &i in &cycle.intermediaries {
            kinds[i] = LabelKind::CycleMember;
        }
    }
    for cycle in cycles {
        kinds[cycle.entry] = LabelKind::WashSale;
        kinds[cycle.repurchase] = LabelKind::WashSale;
    }
    kinds
        .into_iter()
        .enumerate()
        .map(|(edge, kind)| EdgeLabel { edge, kind })
        .collect()
}
