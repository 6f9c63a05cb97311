//! Transaction ingestion: parse CSV/JSONL records, normalize them, and group
//! them into per-token histories.
//!
//! A record is a SALE when `usd_value` is present and greater than zero,
//! otherwise a TRANSFER. Zero-value "sales" are kept as transfers but surfaced
//! in the ledger warnings so they stay visible to reviewers.

use crate::money::Usd;
use chrono::{DateTime, NaiveDateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;
use thiserror::Error;

/// Required input columns. `seq`, `pay_amount`, `pay_currency` and
/// `usd_value` are optional.
pub const REQUIRED_FIELDS: [&str; 6] = [
    "tx_hash",
    "timestamp",
    "sender",
    "receiver",
    "collection",
    "token_id",
];

pub const CSV_HEADER: [&str; 10] = [
    "tx_hash",
    "seq",
    "timestamp",
    "sender",
    "receiver",
    "collection",
    "token_id",
    "pay_amount",
    "pay_currency",
    "usd_value",
];

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: negative value in `{field}`")]
    NegativeValue { line: usize, field: &'static str },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("mixed collections in one ledger: `{first}` and `{second}`")]
    MixedCollections { first: String, second: String },
    #[error("duplicate transaction key ({tx_hash}, {seq})")]
    DuplicateKey { tx_hash: String, seq: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Sale,
    Transfer,
}

/// One on-chain movement of one token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_hash: String,
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub sender: String,
    pub receiver: String,
    pub collection: String,
    pub token_id: String,
    pub pay_amount: Option<Decimal>,
    pub pay_currency: Option<String>,
    pub usd_value: Option<Usd>,
}

impl Transaction {
    /// Classification is derived, never stored: a record with a positive
    /// `usd_value` is a sale, everything else is a transfer.
    pub fn kind(&self) -> TxKind {
        match self.usd_value {
            Some(v) if v.is_positive() => TxKind::Sale,
            _ => TxKind::Transfer,
        }
    }

    pub fn is_sale(&self) -> bool {
        self.kind() == TxKind::Sale
    }

    /// Ordering key within a token history.
    pub fn order_key(&self) -> (DateTime<Utc>, u64) {
        (self.timestamp, self.seq)
    }
}

/// Chronologically ordered transactions for a single (collection, token).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHistory {
    pub collection: String,
    pub token_id: String,
    txs: Vec<Transaction>,
}

impl TokenHistory {
    /// Sorts the given transactions by (timestamp, seq), tie-breaking on
    /// tx_hash so the order is total.
    pub fn new(collection: String, token_id: String, mut txs: Vec<Transaction>) -> TokenHistory {
        txs.sort_by(|a, b| {
            a.order_key()
                .cmp(&b.order_key())
                .then_with(|| a.tx_hash.cmp(&b.tx_hash))
        });
        TokenHistory {
            collection,
            token_id,
            txs,
        }
    }

    pub fn txs(&self) -> &[Transaction] {
        &self.txs
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerWarning {
    pub token_id: String,
    pub message: String,
}

/// All histories of one collection plus the warnings raised while building.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub collection: String,
    pub histories: BTreeMap<String, TokenHistory>,
    pub warnings: Vec<LedgerWarning>,
}

impl Ledger {
    pub fn tx_count(&self) -> usize {
        self.histories.values().map(TokenHistory::len).sum()
    }

    pub fn token_ids(&self) -> impl Iterator<Item = &str> {
        self.histories.keys().map(String::as_str)
    }

    /// Serializes the ledger back to the canonical CSV layout: tokens in id
    /// order, transactions in history order.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(CSV_HEADER).expect("in-memory write");
        for history in self.histories.values() {
            for tx in history.txs() {
                wtr.write_record([
                    tx.tx_hash.as_str(),
                    &tx.seq.to_string(),
                    &format_timestamp(&tx.timestamp),
                    tx.sender.as_str(),
                    tx.receiver.as_str(),
                    tx.collection.as_str(),
                    tx.token_id.as_str(),
                    &tx.pay_amount.map(|d| d.to_string()).unwrap_or_default(),
                    tx.pay_currency.as_deref().unwrap_or(""),
                    &tx.usd_value.map(|u| u.to_string()).unwrap_or_default(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

/// Accepts `YYYY-MM-DD H:MM:SS` (hour may be a single digit) and ISO-8601.
/// Everything is interpreted as UTC.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(naive) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Ok(naive.and_utc());
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(naive.and_utc());
    }
    if let Ok(fixed) = DateTime::parse_from_rfc3339(s) {
        return Ok(fixed.with_timezone(&Utc));
    }
    Err(format!("unrecognized timestamp `{s}`"))
}

/// Parses raw transaction records from a byte stream.
///
/// Rows come back in input order; when a row carries no `seq`, its 0-based
/// input position is assigned. Addresses are lowercased here so every later
/// comparison can be literal.
pub fn parse_transactions<R: Read>(
    source: R,
    format: InputFormat,
) -> Result<Vec<Transaction>, LedgerError> {
    match format {
        InputFormat::Csv => parse_csv(source),
        InputFormat::Jsonl => parse_jsonl(source),
    }
}

fn build_transaction(
    line: usize,
    row_index: usize,
    get: impl Fn(&'static str) -> Option<String>,
) -> Result<Transaction, LedgerError> {
    let field = |name: &'static str| -> Result<String, LedgerError> {
        match get(name) {
            Some(v) if !v.trim().is_empty() => Ok(v.trim().to_owned()),
            _ => Err(LedgerError::MissingField {
                line,
                field: name.to_owned(),
            }),
        }
    };
    let opt_field = |name: &'static str| -> Option<String> {
        get(name)
            .map(|v| v.trim().to_owned())
            .filter(|v| !v.is_empty())
    };

    let tx_hash = field("tx_hash")?;
    let timestamp = parse_timestamp(&field("timestamp")?)
        .map_err(|reason| LedgerError::MalformedRow { line, reason })?;
    let sender = field("sender")?.to_lowercase();
    let receiver = field("receiver")?.to_lowercase();
    let collection = field("collection")?;
    let token_id = field("token_id")?;

    let seq = match opt_field("seq") {
        Some(raw) => raw.parse::<u64>().map_err(|_| LedgerError::MalformedRow {
            line,
            reason: format!("invalid seq `{raw}`"),
        })?,
        None => row_index as u64,
    };

    let pay_amount = match opt_field("pay_amount") {
        Some(raw) => {
            let d = Decimal::from_str(&raw).map_err(|_| LedgerError::MalformedRow {
                line,
                reason: format!("invalid pay_amount `{raw}`"),
            })?;
            if d < Decimal::ZERO {
                return Err(LedgerError::NegativeValue {
                    line,
                    field: "pay_amount",
                });
            }
            Some(d)
        }
        None => None,
    };
    let pay_currency = opt_field("pay_currency");

    let usd_value = match opt_field("usd_value") {
        Some(raw) => {
            let d = Decimal::from_str(&raw).map_err(|_| LedgerError::MalformedRow {
                line,
                reason: format!("invalid usd_value `{raw}`"),
            })?;
            if d < Decimal::ZERO {
                return Err(LedgerError::NegativeValue {
                    line,
                    field: "usd_value",
                });
            }
            Some(Usd::parse(&raw).map_err(|e| LedgerError::MalformedRow {
                line,
                reason: e.to_string(),
            })?)
        }
        None => None,
    };

    Ok(Transaction {
        tx_hash,
        seq,
        timestamp,
        sender,
        receiver,
        collection,
        token_id,
        pay_amount,
        pay_currency,
        usd_value,
    })
}

fn parse_csv<R: Read>(source: R) -> Result<Vec<Transaction>, LedgerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| LedgerError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    for required in REQUIRED_FIELDS {
        if column(required).is_none() {
            return Err(LedgerError::MissingField {
                line: 1,
                field: required.to_owned(),
            });
        }
    }
    let indices: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_owned(), i))
        .collect();

    let mut out = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LedgerError::MalformedRow {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(row_index + 2),
            reason: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(row_index + 2);
        let get = |name: &'static str| -> Option<String> {
            indices
                .iter()
                .find(|(h, _)| h == name)
                .and_then(|(_, i)| record.get(*i))
                .map(str::to_owned)
        };
        out.push(build_transaction(line, row_index, get)?);
    }
    Ok(out)
}

fn parse_jsonl<R: Read>(source: R) -> Result<Vec<Transaction>, LedgerError> {
    let reader = BufReader::new(source);
    let mut out = Vec::new();
    let mut row_index = 0usize;
    for (line_index, line) in reader.lines().enumerate() {
        let line_no = line_index + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| LedgerError::MalformedRow {
                line: line_no,
                reason: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| LedgerError::MalformedRow {
            line: line_no,
            reason: "expected a JSON object".to_owned(),
        })?;
        let get = |name: &'static str| -> Option<String> {
            match obj.get(name) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => Some(s.clone()),
                Some(serde_json::Value::Number(n)) => Some(n.to_string()),
                Some(other) => Some(other.to_string()),
            }
        };
        out.push(build_transaction(line_no, row_index, get)?);
        row_index += 1;
    }
    Ok(out)
}

/// Groups transactions into per-token histories.
///
/// Broken ownership chains and zero-value sales become warnings, not errors;
/// real ledgers have off-marketplace gaps and detection still works on what
/// is present.
pub fn build_ledger(txs: Vec<Transaction>) -> Result<Ledger, LedgerError> {
    let mut collection = String::new();
    let mut seen_keys: HashSet<(String, u64)> = HashSet::new();
    let mut by_token: BTreeMap<String, Vec<Transaction>> = BTreeMap::new();

    for tx in txs {
        if collection.is_empty() {
            collection = tx.collection.clone();
        } else if tx.collection != collection {
            return Err(LedgerError::MixedCollections {
                first: collection,
                second: tx.collection,
            });
        }
        if !seen_keys.insert((tx.tx_hash.clone(), tx.seq)) {
            return Err(LedgerError::DuplicateKey {
                tx_hash: tx.tx_hash,
                seq: tx.seq,
            });
        }
        by_token.entry(tx.token_id.clone()).or_default().push(tx);
    }

    let mut warnings = Vec::new();
    let mut histories = BTreeMap::new();
    for (token_id, txs) in by_token {
        let history = TokenHistory::new(collection.clone(), token_id.clone(), txs);
        for pair in history.txs().windows(2) {
            if pair[0].order_key() == pair[1].order_key() {
                warnings.push(LedgerWarning {
                    token_id: token_id.clone(),
                    message: format!(
                        "transactions {} and {} share (timestamp, seq); order fixed by tx_hash",
                        pair[0].tx_hash, pair[1].tx_hash
                    ),
                });
            }
            if pair[0].receiver != pair[1].sender {
                warnings.push(LedgerWarning {
                    token_id: token_id.clone(),
                    message: format!(
                        "ownership chain break: {} received by {} but next moved by {}",
                        pair[0].tx_hash, pair[0].receiver, pair[1].sender
                    ),
                });
            }
        }
        for tx in history.txs() {
            if let Some(v) = tx.usd_value {
                if !v.is_positive() {
                    warnings.push(LedgerWarning {
                        token_id: token_id.clone(),
                        message: format!("zero-value sale {} treated as transfer", tx.tx_hash),
                    });
                }
            }
        }
        histories.insert(token_id, history);
    }

    Ok(Ledger {
        collection,
        histories,
        warnings,
    })
}
