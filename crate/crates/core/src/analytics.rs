//! Aggregation of detection and profit results into report tables: per-
//! collection wash statistics, profit statistics per metric, wallet-level
//! sales profit rankings, and monthly time series.
//!
//! Counting rules: a "wash sale" is a flagged sale transaction (entry or
//! repurchase — intermediaries are wallets of interest but do not count),
//! wash tokens are tokens with at least one cycle, wash wallets are distinct
//! suspects. Denominators cover sale transactions only; transfers are
//! excluded throughout.

use crate::detector::WashCycle;
use crate::ledger::{Ledger, TxKind};
use crate::money::{mean3_counts, mean3_decimals, pct3, Usd};
use crate::profits::ProfitBreakdown;
use chrono::Datelike;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub collection: String,
    pub wash_sale_count: u64,
    pub wash_sale_pct: Decimal,
    pub wash_token_count: u64,
    pub wash_token_pct: Decimal,
    pub wash_wallet_count: u64,
    pub wash_wallet_pct: Decimal,
    pub total_sales: u64,
    pub total_tokens: u64,
    pub total_wallets: u64,
}

impl CollectionStats {
    pub fn from_counts(
        collection: &str,
        counts: (u64, u64, u64),
        denominators: (u64, u64, u64),
    ) -> CollectionStats {
        let (wash_sales, wash_tokens, wash_wallets) = counts;
        let (total_sales, total_tokens, total_wallets) = denominators;
        CollectionStats {
            collection: collection.to_owned(),
            wash_sale_count: wash_sales,
            wash_sale_pct: pct3(wash_sales, total_sales),
            wash_token_count: wash_tokens,
            wash_token_pct: pct3(wash_tokens, total_tokens),
            wash_wallet_count: wash_wallets,
            wash_wallet_pct: pct3(wash_wallets, total_wallets),
            total_sales,
            total_tokens,
            total_wallets,
        }
    }
}

/// Distinct flagged sale transactions as (token_id, tx index) pairs.
fn flagged_sales(ledger: &Ledger, cycles: &[WashCycle]) -> BTreeSet<(String, usize)> {
    let mut flagged = BTreeSet::new();
    for cycle in cycles {
        let Some(history) = ledger.histories.get(&cycle.token_id) else {
            continue;
        };
        for idx in [cycle.entry, cycle.repurchase] {
            if history.txs()[idx].kind() == TxKind::Sale {
                flagged.insert((cycle.token_id.clone(), idx));
            }
        }
    }
    flagged
}

pub fn collection_stats(ledger: &Ledger, cycles: &[WashCycle]) -> CollectionStats {
    let mut total_sales = 0u64;
    let mut tokens_traded: HashSet<&str> = HashSet::new();
    let mut wallets: HashSet<&str> = HashSet::new();
    for history in ledger.histories.values() {
        for tx in history.txs() {
            if tx.kind() == TxKind::Sale {
                total_sales += 1;
                tokens_traded.insert(&history.token_id);
                wallets.insert(&tx.sender);
                wallets.insert(&tx.receiver);
            }
        }
    }

    let wash_sales = flagged_sales(ledger, cycles).len() as u64;
    let wash_tokens = cycles
        .iter()
        .map(|c| c.token_id.as_str())
        .collect::<HashSet<_>>()
        .len() as u64;
    let wash_wallets = cycles
        .iter()
        .map(|c| c.suspect.as_str())
        .collect::<HashSet<_>>()
        .len() as u64;

    CollectionStats::from_counts(
        &ledger.collection,
        (wash_sales, wash_tokens, wash_wallets),
        (
            total_sales,
            tokens_traded.len() as u64,
            wallets.len() as u64,
        ),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitMetric {
    Pm,
    Sale,
    Repurchase,
}

impl ProfitMetric {
    pub const ALL: [ProfitMetric; 3] = [
        ProfitMetric::Pm,
        ProfitMetric::Sale,
        ProfitMetric::Repurchase,
    ];

    fn pick(&self, b: &ProfitBreakdown) -> Option<Usd> {
        match self {
            ProfitMetric::Pm => b.pm_profit,
            ProfitMetric::Sale => b.sale_profit,
            ProfitMetric::Repurchase => b.repurchase_profit,
        }
    }
}

impl fmt::Display for ProfitMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfitMetric::Pm => write!(f, "pm"),
            ProfitMetric::Sale => write!(f, "sale"),
            ProfitMetric::Repurchase => write!(f, "repurchase"),
        }
    }
}

/// Profit aggregation for one collection and one metric. The unit is the wash
/// token: a token's value is the sum of the metric over its cycles, skipping
/// absent values; tokens with no defined value do not count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitStats {
    pub collection: String,
    pub metric: ProfitMetric,
    pub max: Option<Usd>,
    pub avg: Option<Usd>,
    pub total: Usd,
    pub unit_count: u64,
}

impl ProfitStats {
    pub fn from_parts(
        collection: &str,
        metric: ProfitMetric,
        max: Usd,
        avg: Usd,
        total: Usd,
        unit_count: u64,
    ) -> ProfitStats {
        ProfitStats {
            collection: collection.to_owned(),
            metric,
            max: Some(max),
            avg: Some(avg),
            total,
            unit_count,
        }
    }

    /// `|total - avg * unit_count| <= 0.01 * unit_count` (rounding slack).
    pub fn is_consistent(&self) -> bool {
        match (self.avg, self.unit_count) {
            (Some(avg), n) if n >= 1 => {
                (self.total - avg.times(n)).abs() <= Usd::from_cents(n as i64)
            }
            _ => true,
        }
    }
}

pub fn profit_stats(
    collection: &str,
    breakdowns: &[ProfitBreakdown],
    metric: ProfitMetric,
) -> ProfitStats {
    let mut per_token: BTreeMap<&str, Usd> = BTreeMap::new();
    for b in breakdowns {
        if let Some(v) = metric.pick(b) {
            *per_token
                .entry(b.token_id.as_str())
                .or_insert_with(Usd::zero) += v;
        }
    }
    let unit_count = per_token.len() as u64;
    let total: Usd = per_token.values().copied().sum();
    let max = per_token.values().copied().max();
    let avg = (unit_count > 0).then(|| Usd::mean_of_total(total, unit_count));
    ProfitStats {
        collection: collection.to_owned(),
        metric,
        max,
        avg,
        total,
        unit_count,
    }
}

/// Overall row across collections: totals add, max is the max of maxes, and
/// the average is the grand total over the summed unit counts.
pub fn rollup_profit_stats(rows: &[ProfitStats]) -> ProfitStats {
    assert!(!rows.is_empty(), "rollup needs at least one row");
    let metric = rows[0].metric;
    debug_assert!(rows.iter().all(|r| r.metric == metric));
    let total: Usd = rows.iter().map(|r| r.total).sum();
    let unit_count: u64 = rows.iter().map(|r| r.unit_count).sum();
    let max = rows.iter().filter_map(|r| r.max).max();
    let avg = (unit_count > 0).then(|| Usd::mean_of_total(total, unit_count));
    ProfitStats {
        collection: "Overall".to_owned(),
        metric,
        max,
        avg,
        total,
        unit_count,
    }
}

/// The "Average" rollup row of a count table: arithmetic mean of the counts
/// and of the percentages, three decimals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsAverageRow {
    pub wash_sale_count: Decimal,
    pub wash_sale_pct: Decimal,
    pub wash_token_count: Decimal,
    pub wash_token_pct: Decimal,
    pub wash_wallet_count: Decimal,
    pub wash_wallet_pct: Decimal,
}

/// The "Total" rollup row: summed counts with percentages recomputed from the
/// summed denominators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTotalRow {
    pub wash_sale_count: u64,
    pub wash_sale_pct: Decimal,
    pub wash_token_count: u64,
    pub wash_token_pct: Decimal,
    pub wash_wallet_count: u64,
    pub wash_wallet_pct: Decimal,
    pub total_sales: u64,
    pub total_tokens: u64,
    pub total_wallets: u64,
}

pub fn rollup_collection_stats(rows: &[CollectionStats]) -> (StatsAverageRow, StatsTotalRow) {
    assert!(!rows.is_empty(), "rollup needs at least one row");
    let counts = |f: fn(&CollectionStats) -> u64| rows.iter().map(f).collect::<Vec<_>>();
    let pcts = |f: fn(&CollectionStats) -> Decimal| rows.iter().map(f).collect::<Vec<_>>();

    let average = StatsAverageRow {
        wash_sale_count: mean3_counts(&counts(|r| r.wash_sale_count)),
        wash_sale_pct: mean3_decimals(&pcts(|r| r.wash_sale_pct)),
        wash_token_count: mean3_counts(&counts(|r| r.wash_token_count)),
        wash_token_pct: mean3_decimals(&pcts(|r| r.wash_token_pct)),
        wash_wallet_count: mean3_counts(&counts(|r| r.wash_wallet_count)),
        wash_wallet_pct: mean3_decimals(&pcts(|r| r.wash_wallet_pct)),
    };

    let sum = |f: fn(&CollectionStats) -> u64| rows.iter().map(f).sum::<u64>();
    let wash_sale_count = sum(|r| r.wash_sale_count);
    let wash_token_count = sum(|r| r.wash_token_count);
    let wash_wallet_count = sum(|r| r.wash_wallet_count);
    let total_sales = sum(|r| r.total_sales);
    let total_tokens = sum(|r| r.total_tokens);
    let total_wallets = sum(|r| r.total_wallets);
    let total = StatsTotalRow {
        wash_sale_count,
        wash_sale_pct: pct3(wash_sale_count, total_sales),
        wash_token_count,
        wash_token_pct: pct3(wash_token_count, total_tokens),
        wash_wallet_count,
        wash_wallet_pct: pct3(wash_wallet_count, total_wallets),
        total_sales,
        total_tokens,
        total_wallets,
    };
    (average, total)
}

/// Wallet-level sales profit: sale inflows minus purchase outflows, with
/// transfers contributing nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletProfit {
    pub wallet: String,
    pub sales_profit: Usd,
    pub is_wash_trader: bool,
}

pub fn wallet_profits(ledger: &Ledger, cycles: &[WashCycle]) -> Vec<WalletProfit> {
    let mut profit: BTreeMap<&str, Usd> = BTreeMap::new();
    for history in ledger.histories.values() {
        for tx in history.txs() {
            if tx.kind() != TxKind::Sale {
                continue;
            }
            let value = tx.usd_value.expect("sales carry a USD value");
            *profit.entry(&tx.sender).or_insert_with(Usd::zero) += value;
            *profit.entry(&tx.receiver).or_insert_with(Usd::zero) -= value;
        }
    }
    let suspects: HashSet<&str> = cycles.iter().map(|c| c.suspect.as_str()).collect();
    let mut rows: Vec<WalletProfit> = profit
        .into_iter()
        .map(|(wallet, sales_profit)| WalletProfit {
            is_wash_trader: suspects.contains(wallet),
            wallet: wallet.to_owned(),
            sales_profit,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.sales_profit
            .cmp(&a.sales_profit)
            .then_with(|| a.wallet.cmp(&b.wallet))
    });
    rows
}

/// One calendar month, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonthBin {
    pub year: i32,
    pub month: u32,
}

impl MonthBin {
    fn of(ts: &chrono::DateTime<chrono::Utc>) -> MonthBin {
        MonthBin {
            year: ts.year(),
            month: ts.month(),
        }
    }

    fn next(&self) -> MonthBin {
        if self.month == 12 {
            MonthBin {
                year: self.year + 1,
                month: 1,
            }
        } else {
            MonthBin {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for MonthBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub bin: MonthBin,
    /// Sales in the month; transfers are not counted.
    pub total_tx: u64,
    /// Flagged wash sales in the month, by their own timestamps.
    pub wash_tx: u64,
    /// Mean sale value for the month; absent when the month has no sales.
    pub avg_sale_usd: Option<Usd>,
}

/// Monthly sale counts and averages from the first to the last transaction of
/// the ledger, gap months included with zeros.
pub fn wash_time_series(ledger: &Ledger, cycles: &[WashCycle]) -> Vec<TimeSeries> {
    let mut first: Option<MonthBin> = None;
    let mut last: Option<MonthBin> = None;
    for history in ledger.histories.values() {
        for tx in history.txs() {
            let bin = MonthBin::of(&tx.timestamp);
            first = Some(first.map_or(bin, |f| f.min(bin)));
            last = Some(last.map_or(bin, |l| l.max(bin)));
        }
    }
    let (Some(first), Some(last)) = (first, last) else {
        return Vec::new();
    };

    let flagged = flagged_sales(ledger, cycles);
    let mut sales: BTreeMap<MonthBin, (u64, Usd)> = BTreeMap::new();
    let mut wash: BTreeMap<MonthBin, u64> = BTreeMap::new();
    for history in ledger.histories.values() {
        for (idx, tx) in history.txs().iter().enumerate() {
            if tx.kind() != TxKind::Sale {
                continue;
            }
            let bin = MonthBin::of(&tx.timestamp);
            let slot = sales.entry(bin).or_insert((0, Usd::zero()));
            slot.0 += 1;
            slot.1 += tx.usd_value.expect("sales carry a USD value");
            if flagged.contains(&(history.token_id.clone(), idx)) {
                *wash.entry(bin).or_insert(0) += 1;
            }
        }
    }

    let mut out = Vec::new();
    let mut bin = first;
    loop {
        let (total_tx, sum) = sales.get(&bin).copied().unwrap_or((0, Usd::zero()));
        out.push(TimeSeries {
            bin,
            total_tx,
            wash_tx: wash.get(&bin).copied().unwrap_or(0),
            avg_sale_usd: (total_tx > 0).then(|| Usd::mean_of_total(sum, total_tx)),
        });
        if bin == last {
            break;
        }
        bin = bin.next();
    }
    out
}

// ---------------------------------------------------------------------------
// Table rendering
// ---------------------------------------------------------------------------

fn csv_row(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    quoted.join(",") + "\n"
}

pub fn stats_table_csv(
    rows: &[CollectionStats],
    average: &StatsAverageRow,
    total: &StatsTotalRow,
) -> String {
    let mut out = String::from(
        "collection,wash_sale_count,wash_sale_pct,wash_token_count,wash_token_pct,wash_wallet_count,wash_wallet_pct,total_sales,total_tokens,total_wallets\n",
    );
    for r in rows {
        out.push_str(&csv_row(&[
            r.collection.clone(),
            r.wash_sale_count.to_string(),
            r.wash_sale_pct.to_string(),
            r.wash_token_count.to_string(),
            r.wash_token_pct.to_string(),
            r.wash_wallet_count.to_string(),
            r.wash_wallet_pct.to_string(),
            r.total_sales.to_string(),
            r.total_tokens.to_string(),
            r.total_wallets.to_string(),
        ]));
    }
    out.push_str(&csv_row(&[
        "Average".to_owned(),
        average.wash_sale_count.to_string(),
        average.wash_sale_pct.to_string(),
        average.wash_token_count.to_string(),
        average.wash_token_pct.to_string(),
        average.wash_wallet_count.to_string(),
        average.wash_wallet_pct.to_string(),
        String::new(),
        String::new(),
        String::new(),
    ]));
    out.push_str(&csv_row(&[
        "Total".to_owned(),
        total.wash_sale_count.to_string(),
        total.wash_sale_pct.to_string(),
        total.wash_token_count.to_string(),
        total.wash_token_pct.to_string(),
        total.wash_wallet_count.to_string(),
        total.wash_wallet_pct.to_string(),
        total.total_sales.to_string(),
        total.total_tokens.to_string(),
        total.total_wallets.to_string(),
    ]));
    out
}

pub fn profit_table_csv(rows: &[ProfitStats]) -> String {
    let mut out = String::from("collection,metric,max,avg,total,unit_count\n");
    for r in rows {
        out.push_str(&csv_row(&[
            r.collection.clone(),
            r.metric.to_string(),
            r.max.map(|v| v.to_string()).unwrap_or_default(),
            r.avg.map(|v| v.to_string()).unwrap_or_default(),
            r.total.to_string(),
            r.unit_count.to_string(),
        ]));
    }
    out
}

pub fn wallets_csv(collection: &str, rows: &[WalletProfit]) -> String {
    let mut out = String::from("collection,wallet,sales_profit,is_wash_trader\n");
    for r in rows {
        out.push_str(&csv_row(&[
            collection.to_owned(),
            r.wallet.clone(),
            r.sales_profit.to_string(),
            r.is_wash_trader.to_string(),
        ]));
    }
    out
}

pub fn timeseries_csv(rows: &[TimeSeries]) -> String {
    let mut out = String::from("bin,total_tx,wash_tx,avg_sale_usd\n");
    for r in rows {
        out.push_str(&csv_row(&[
            r.bin.to_string(),
            r.total_tx.to_string(),
            r.wash_tx.to_string(),
            r.avg_sale_usd.map(|v| v.to_string()).unwrap_or_default(),
        ]));
    }
    out
}
