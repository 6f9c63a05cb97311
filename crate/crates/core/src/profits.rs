//! Per-cycle profit metrics.
//!
//! Three numbers are attached to every detected cycle:
//!
//! * price-manipulation profit: the sale closing out the cycle minus the
//!   suspect's cost entering it, ignoring every price inside the cycle;
//! * sale profit: the entry sale minus the suspect's cost basis;
//! * repurchase profit: the first post-cycle sale minus the repurchase price.
//!
//! Cost basis passes through free transfers in both directions: walking
//! backward, a recipient of consecutive zero-value transfers inherits the most
//! recent sale price (zero for a never-purchased mint); walking forward, the
//! first sale after the repurchase is credited to the suspect no matter how
//! many free transfers precede it.

use crate::detector::WashCycle;
use crate::ledger::{TokenHistory, TxKind};
use crate::money::Usd;
use serde::{Deserialize, Serialize};

/// The three metrics for one cycle. A field is absent exactly when its
/// defining context transaction is absent (no post-cycle sale, or an entry /
/// repurchase without a monetary value under transfer matching).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub token_id: String,
    /// Index of the cycle within its token's detection output.
    pub cycle: usize,
    pub pm_profit: Option<Usd>,
    pub sale_profit: Option<Usd>,
    pub repurchase_profit: Option<Usd>,
}

/// Cost basis at an acquisition: the transaction's own sale price, or — for a
/// free transfer — the most recent earlier sale's price, or zero when the walk
/// reaches the beginning of the history (a mint).
pub fn resolve_cost_basis(history: &TokenHistory, at: usize) -> Usd {
    let txs = history.txs();
    for k in (0..=at).rev() {
        if txs[k].kind() == TxKind::Sale {
            return txs[k].usd_value.expect("sales carry a USD value");
        }
    }
    Usd::zero()
}

fn basis_before_entry(cycle: &WashCycle, history: &TokenHistory) -> Usd {
    match cycle.pre_context {
        Some(at) => resolve_cost_basis(history, at),
        // no acquisition on record: treat like a mint
        None => Usd::zero(),
    }
}

/// Exit-context sale price minus entry-context cost. Absent when the cycle has
/// no exit sale.
pub fn pm_profit(cycle: &WashCycle, history: &TokenHistory) -> Option<Usd> {
    let post = cycle.post_context?;
    let exit = history.txs()[post].usd_value?;
    Some(exit - basis_before_entry(cycle, history))
}

/// Entry sale price minus the suspect's cost basis.
pub fn sale_profit(cycle: &WashCycle, history: &TokenHistory) -> Option<Usd> {
    let entry = history.txs()[cycle.entry].usd_value?;
    Some(entry - basis_before_entry(cycle, history))
}

/// First post-cycle sale price minus the repurchase price. Absent when no
/// sale follows the repurchase.
pub fn repurchase_profit(cycle: &WashCycle, history: &TokenHistory) -> Option<Usd> {
    let post = cycle.post_context?;
    let exit = history.txs()[post].usd_value?;
    let paid = history.txs()[cycle.repurchase].usd_value?;
    Some(exit - paid)
}

pub fn breakdown(cycle_index: usize, cycle: &WashCycle, history: &TokenHistory) -> ProfitBreakdown {
    ProfitBreakdown {
        token_id: cycle.token_id.clone(),
        cycle: cycle_index,
        pm_profit: pm_profit(cycle, history),
        sale_profit: sale_profit(cycle, history),
        repurchase_profit: repurchase_profit(cycle, history),
    }
}
