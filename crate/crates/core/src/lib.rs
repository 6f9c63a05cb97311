//! Wash-trade surveillance for NFT transaction histories.
//!
//! The pipeline: [`ledger`] parses raw transaction records into per-token
//! histories, [`detector`] finds sell-and-repurchase cycles under a
//! configurable window, [`profits`] prices each cycle three ways, and
//! [`analytics`] rolls everything up into collection statistics, wallet
//! rankings, and monthly time series. [`graph`] renders annotated per-token
//! transaction graphs, and [`synth`] generates fixtures plus the independent
//! brute-force detector used to cross-check the real one.

pub mod analytics;
pub mod detector;
pub mod graph;
pub mod ledger;
pub mod money;
pub mod profits;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use detector::{detect_wash_sales, Detection, DetectorConfig, WashCycle};
pub use graph::{build_graph, to_dot, TokenGraph};
pub use ledger::{
    build_ledger, parse_transactions, InputFormat, Ledger, TokenHistory, Transaction,
};
pub use money::Usd;
pub use profits::{breakdown, ProfitBreakdown};
