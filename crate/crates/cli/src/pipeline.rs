//! Shared glue between the subcommands and the library: input loading,
//! whole-ledger detection, and the JSON shape of `cycles.json`.

use serde_json::{json, Value};
use std::path::Path;
use washtrade::detector::{detect_wash_sales, DetectorConfig, DetectorWarning, WashCycle};
use washtrade::ledger::{
    build_ledger, format_timestamp, parse_transactions, InputFormat, Ledger, TokenHistory,
};
use washtrade::profits::{breakdown, ProfitBreakdown};

pub fn input_format(path: &Path, forced: Option<InputFormat>) -> InputFormat {
    if let Some(f) = forced {
        return f;
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") | Some("json") => InputFormat::Jsonl,
        _ => InputFormat::Csv,
    }
}

pub fn load_ledger(bytes: &[u8], format: InputFormat) -> Result<Ledger, String> {
    let txs = parse_transactions(bytes, format).map_err(|e| e.to_string())?;
    build_ledger(txs).map_err(|e| e.to_string())
}

/// Detection over every token of the ledger, in token-id order.
pub struct LedgerDetection {
    pub cycles: Vec<WashCycle>,
    pub breakdowns: Vec<ProfitBreakdown>,
    pub warnings: Vec<DetectorWarning>,
}

pub fn detect_ledger(ledger: &Ledger, config: &DetectorConfig) -> LedgerDetection {
    let mut out = LedgerDetection {
        cycles: Vec::new(),
        breakdowns: Vec::new(),
        warnings: Vec::new(),
    };
    for history in ledger.histories.values() {
        let detection = detect_wash_sales(history, config);
        for (i, cycle) in detection.cycles.iter().enumerate() {
            out.breakdowns.push(breakdown(i, cycle, history));
        }
        out.cycles.extend(detection.cycles);
        out.warnings.extend(detection.warnings);
    }
    out
}

fn tx_ref(history: &TokenHistory, index: usize) -> Value {
    let tx = &history.txs()[index];
    json!({
        "index": index,
        "tx_hash": tx.tx_hash,
        "seq": tx.seq,
        "timestamp": format_timestamp(&tx.timestamp),
        "sender": tx.sender,
        "receiver": tx.receiver,
        "usd_value": tx.usd_value.map(|u| u.to_string()),
    })
}

pub fn cycles_json(ledger: &Ledger, detection: &LedgerDetection, config: &DetectorConfig) -> Value {
    let cycles: Vec<Value> = detection
        .cycles
        .iter()
        .zip(detection.breakdowns.iter())
        .map(|(cycle, profits)| {
            let history = &ledger.histories[&cycle.token_id];
            json!({
                "token_id": cycle.token_id,
                "suspect": cycle.suspect,
                "entry": tx_ref(history, cycle.entry),
                "repurchase": tx_ref(history, cycle.repurchase),
                "intermediaries": cycle
                    .intermediaries
                    .iter()
                    .map(|&i| tx_ref(history, i))
                    .collect::<Vec<_>>(),
                "pre_context": cycle.pre_context.map(|i| tx_ref(history, i)),
                "post_context": cycle.post_context.map(|i| tx_ref(history, i)),
                "profits": {
                    "pm_profit": profits.pm_profit.map(|u| u.to_string()),
                    "sale_profit": profits.sale_profit.map(|u| u.to_string()),
                    "repurchase_profit": profits.repurchase_profit.map(|u| u.to_string()),
                },
            })
        })
        .collect();

    let mut warnings: Vec<Value> = ledger
        .warnings
        .iter()
        .map(|w| json!({"source": "ledger", "token_id": w.token_id, "message": w.message}))
        .collect();
    warnings.extend(
        detection
            .warnings
            .iter()
            .map(|w| json!({"source": "detector", "token_id": w.token_id, "message": w.message})),
    );

    json!({
        "collection": ledger.collection,
        "config": {
            "window_seconds": config.window.num_seconds(),
            "windowless": config.windowless,
            "include_transfers": config.include_transfers_in_matching,
        },
        "cycles": cycles,
        "warnings": warnings,
    })
}

/// Keeps token ids usable as file names.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}
