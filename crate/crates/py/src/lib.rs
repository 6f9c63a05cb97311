//! Python bindings: load a transaction file, detect cycles, pull stats,
//! wallet rankings, time series, and DOT graphs without leaving Python.
//!
//! Money crosses the boundary as floats for convenience; the exact
//! two-decimal strings live in the JSON/CSV artifacts written by the CLI.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rust_decimal::prelude::ToPrimitive;
use washtrade::analytics;
use washtrade::detector::label_all;
use washtrade::detector::{detect_wash_sales, DetectorConfig, WashCycle};
use washtrade::graph::{build_graph, graph_json, to_dot};
use washtrade::ledger::{build_ledger, parse_transactions, InputFormat};
use washtrade::money::Usd;
use washtrade::profits;
use washtrade::synth;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed, validated collection of per-token transaction histories.
#[pyclass(name = "Ledger")]
struct PyLedger {
    inner: washtrade::Ledger,
}

impl PyLedger {
    fn from_bytes(bytes: &[u8], format: InputFormat) -> PyResult<Self> {
        let txs = parse_transactions(bytes, format).map_err(value_error)?;
        let inner = build_ledger(txs).map_err(value_error)?;
        Ok(PyLedger { inner })
    }
}

#[pymethods]
impl PyLedger {
    /// Parses CSV text with the standard header.
    #[staticmethod]
    fn from_csv_text(text: &str) -> PyResult<Self> {
        Self::from_bytes(text.as_bytes(), InputFormat::Csv)
    }

    /// Parses JSONL text (one object per line).
    #[staticmethod]
    fn from_jsonl_text(text: &str) -> PyResult<Self> {
        Self::from_bytes(text.as_bytes(), InputFormat::Jsonl)
    }

    /// Loads a file, inferring the format from the extension.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let bytes = std::fs::read(path).map_err(value_error)?;
        let format =
            if path.ends_with(".jsonl") || path.ends_with(".ndjson") || path.ends_with(".json") {
                InputFormat::Jsonl
            } else {
                InputFormat::Csv
            };
        Self::from_bytes(&bytes, format)
    }

    fn collection(&self) -> String {
        self.inner.collection.clone()
    }

    fn token_ids(&self) -> Vec<String> {
        self.inner.token_ids().map(str::to_owned).collect()
    }

    fn tx_count(&self) -> usize {
        self.inner.tx_count()
    }

    /// Ledger warnings as (token_id, message) pairs.
    fn warnings(&self) -> Vec<(String, String)> {
        self.inner
            .warnings
            .iter()
            .map(|w| (w.token_id.clone(), w.message.clone()))
            .collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "Ledger(collection='{}', tokens={}, txs={})",
            self.inner.collection,
            self.inner.histories.len(),
            self.inner.tx_count()
        )
    }
}

/// One detected cycle with its profit breakdown. Transaction references are
/// indices into the token's chronologically ordered history.
#[pyclass(name = "WashCycle", get_all, from_py_object)]
#[derive(Clone)]
struct PyWashCycle {
    token_id: String,
    suspect: String,
    entry: usize,
    repurchase: usize,
    intermediaries: Vec<usize>,
    pre_context: Option<usize>,
    post_context: Option<usize>,
    pm_profit: Option<f64>,
    sale_profit: Option<f64>,
    repurchase_profit: Option<f64>,
}

#[pymethods]
impl PyWashCycle {
    fn __repr__(&self) -> String {
        format!(
            "WashCycle(token='{}', suspect='{}', entry={}, repurchase={})",
            self.token_id, self.suspect, self.entry, self.repurchase
        )
    }
}

impl PyWashCycle {
    fn to_inner(&self) -> WashCycle {
        WashCycle {
            token_id: self.token_id.clone(),
            suspect: self.suspect.clone(),
            entry: self.entry,
            repurchase: self.repurchase,
            intermediaries: self.intermediaries.clone(),
            pre_context: self.pre_context,
            post_context: self.post_context,
        }
    }
}

fn config_from(
    window_days: i64,
    windowless: bool,
    include_transfers: bool,
) -> PyResult<DetectorConfig> {
    let config = DetectorConfig {
        window: chrono::Duration::days(window_days),
        include_transfers_in_matching: include_transfers,
        windowless,
    };
    config.validate().map_err(value_error)?;
    Ok(config)
}

/// Runs detection over every token and returns the cycles with profits.
#[pyfunction]
#[pyo3(signature = (ledger, window_days=30, windowless=false, include_transfers=false))]
fn detect(
    ledger: &PyLedger,
    window_days: i64,
    windowless: bool,
    include_transfers: bool,
) -> PyResult<Vec<PyWashCycle>> {
    let config = config_from(window_days, windowless, include_transfers)?;
    let mut out = Vec::new();
    for history in ledger.inner.histories.values() {
        for cycle in detect_wash_sales(history, &config).cycles {
            let pm = profits::pm_profit(&cycle, history);
            let sale = profits::sale_profit(&cycle, history);
            let rp = profits::repurchase_profit(&cycle, history);
            out.push(PyWashCycle {
                token_id: cycle.token_id.clone(),
                suspect: cycle.suspect.clone(),
                entry: cycle.entry,
                repurchase: cycle.repurchase,
                intermediaries: cycle.intermediaries.clone(),
                pre_context: cycle.pre_context,
                post_context: cycle.post_context,
                pm_profit: pm.map(|u| u.to_f64()),
                sale_profit: sale.map(|u| u.to_f64()),
                repurchase_profit: rp.map(|u| u.to_f64()),
            });
        }
    }
    Ok(out)
}

#[pyclass(name = "CollectionStats", get_all)]
struct PyCollectionStats {
    collection: String,
    wash_sale_count: u64,
    wash_sale_pct: f64,
    wash_token_count: u64,
    wash_token_pct: f64,
    wash_wallet_count: u64,
    wash_wallet_pct: f64,
    total_sales: u64,
    total_tokens: u64,
    total_wallets: u64,
}

#[pymethods]
impl PyCollectionStats {
    fn __repr__(&self) -> String {
        format!(
            "CollectionStats(collection='{}', wash_sales={}, wash_tokens={}, wash_wallets={})",
            self.collection, self.wash_sale_count, self.wash_token_count, self.wash_wallet_count
        )
    }
}

#[pyfunction]
fn collection_stats(ledger: &PyLedger, cycles: Vec<PyWashCycle>) -> PyCollectionStats {
    let cycles: Vec<WashCycle> = cycles.iter().map(PyWashCycle::to_inner).collect();
    let s = analytics::collection_stats(&ledger.inner, &cycles);
    PyCollectionStats {
        collection: s.collection,
        wash_sale_count: s.wash_sale_count,
        wash_sale_pct: s.wash_sale_pct.to_f64().unwrap_or(f64::NAN),
        wash_token_count: s.wash_token_count,
        wash_token_pct: s.wash_token_pct.to_f64().unwrap_or(f64::NAN),
        wash_wallet_count: s.wash_wallet_count,
        wash_wallet_pct: s.wash_wallet_pct.to_f64().unwrap_or(f64::NAN),
        total_sales: s.total_sales,
        total_tokens: s.total_tokens,
        total_wallets: s.total_wallets,
    }
}

/// Wallet rankings as (wallet, sales_profit, is_wash_trader), best first.
#[pyfunction]
fn wallet_profits(ledger: &PyLedger, cycles: Vec<PyWashCycle>) -> Vec<(String, f64, bool)> {
    let cycles: Vec<WashCycle> = cycles.iter().map(PyWashCycle::to_inner).collect();
    analytics::wallet_profits(&ledger.inner, &cycles)
        .into_iter()
        .map(|w| (w.wallet, w.sales_profit.to_f64(), w.is_wash_trader))
        .collect()
}

/// Monthly series as (bin, total_sales, wash_sales, avg_sale_usd).
#[pyfunction]
fn time_series(
    ledger: &PyLedger,
    cycles: Vec<PyWashCycle>,
) -> Vec<(String, u64, u64, Option<f64>)> {
    let cycles: Vec<WashCycle> = cycles.iter().map(PyWashCycle::to_inner).collect();
    analytics::wash_time_series(&ledger.inner, &cycles)
        .into_iter()
        .map(|r| {
            (
                r.bin.to_string(),
                r.total_tx,
                r.wash_tx,
                r.avg_sale_usd.map(|u| u.to_f64()),
            )
        })
        .collect()
}

/// Annotated DOT rendering of one token's transaction graph.
#[pyfunction]
fn token_dot(ledger: &PyLedger, cycles: Vec<PyWashCycle>, token_id: &str) -> PyResult<String> {
    let history = ledger
        .inner
        .histories
        .get(token_id)
        .ok_or_else(|| value_error(format!("unknown token `{token_id}`")))?;
    let graph = build_graph(history).map_err(value_error)?;
    let cycles: Vec<WashCycle> = cycles
        .iter()
        .filter(|c| c.token_id == token_id)
        .map(PyWashCycle::to_inner)
        .collect();
    let labels = label_all(history, &cycles);
    to_dot(&graph, &labels).map_err(value_error)
}

/// JSON dump (nodes, edges, labels) of one token's transaction graph.
#[pyfunction]
fn token_graph_json(
    ledger: &PyLedger,
    cycles: Vec<PyWashCycle>,
    token_id: &str,
) -> PyResult<String> {
    let history = ledger
        .inner
        .histories
        .get(token_id)
        .ok_or_else(|| value_error(format!("unknown token `{token_id}`")))?;
    let graph = build_graph(history).map_err(value_error)?;
    let cycles: Vec<WashCycle> = cycles
        .iter()
        .filter(|c| c.token_id == token_id)
        .map(PyWashCycle::to_inner)
        .collect();
    let labels = label_all(history, &cycles);
    let value = graph_json(&graph, &labels, history).map_err(value_error)?;
    Ok(value.to_string())
}

/// Synthetic fixture CSV with planted cycles. Each plant is a tuple of
/// (suspect_index, hops, gap_days, entry_usd, exit_usd).
#[pyfunction]
#[pyo3(signature = (seed=0, wallets=64, txs=12, plants=vec![], collection="synthetic", token="1"))]
fn synth_fixture_csv(
    seed: u64,
    wallets: usize,
    txs: usize,
    plants: Vec<(usize, usize, i64, String, String)>,
    collection: &str,
    token: &str,
) -> PyResult<String> {
    let planted = plants
        .into_iter()
        .map(|(suspect, hops, gap_days, entry, exit)| {
            Ok(synth::PlantedCycle {
                suspect,
                hops,
                gap: chrono::Duration::days(gap_days),
                entry_usd: Usd::parse(&entry).map_err(value_error)?,
                exit_usd: Usd::parse(&exit).map_err(value_error)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let spec = synth::ScenarioSpec {
        collection: collection.to_owned(),
        token_id: token.to_owned(),
        wallet_count: wallets,
        tx_count: txs,
        planted,
        seed,
        ..Default::default()
    };
    let history = synth::generate(&spec).map_err(value_error)?;
    let ledger = build_ledger(history.txs().to_vec()).map_err(value_error)?;
    Ok(ledger.to_csv())
}

/// Fixture CSV of `count` back-and-forth sales between two wallets with a
/// linear price ramp.
#[pyfunction]
#[pyo3(signature = (count=17, price_from="14.00", price_to="197.00", collection="synthetic", token="1"))]
fn alternating_fixture_csv(
    count: usize,
    price_from: &str,
    price_to: &str,
    collection: &str,
    token: &str,
) -> PyResult<String> {
    use chrono::TimeZone;
    let history = synth::alternating_sales(
        collection,
        token,
        "0x000000000000000000000000000000000000000a",
        "0x000000000000000000000000000000000000000b",
        count,
        Usd::parse(price_from).map_err(value_error)?,
        Usd::parse(price_to).map_err(value_error)?,
        chrono::Utc.with_ymd_and_hms(2022, 5, 1, 0, 0, 0).unwrap(),
        chrono::Duration::minutes(30),
    );
    let ledger = build_ledger(history.txs().to_vec()).map_err(value_error)?;
    Ok(ledger.to_csv())
}

#[pymodule]
fn washtrade_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLedger>()?;
    m.add_class::<PyWashCycle>()?;
    m.add_class::<PyCollectionStats>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(collection_stats, m)?)?;
    m.add_function(wrap_pyfunction!(wallet_profits, m)?)?;
    m.add_function(wrap_pyfunction!(time_series, m)?)?;
    m.add_function(wrap_pyfunction!(token_dot, m)?)?;
    m.add_function(wrap_pyfunction!(token_graph_json, m)?)?;
    m.add_function(wrap_pyfunction!(synth_fixture_csv, m)?)?;
    m.add_function(wrap_pyfunction!(alternating_fixture_csv, m)?)?;
    Ok(())
}
