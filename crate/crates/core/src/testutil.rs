//! Shared fixtures for unit tests.

use crate::ledger::{
    build_ledger, parse_timestamp, parse_transactions, InputFormat, TokenHistory, Transaction,
};
use crate::money::Usd;

pub(crate) fn usd(s: &str) -> Usd {
    Usd::parse(s).unwrap()
}

pub(crate) fn tx(
    hash: &str,
    seq: u64,
    ts: &str,
    from: &str,
    to: &str,
    usd_value: Option<Usd>,
) -> Transaction {
    Transaction {
        tx_hash: hash.to_owned(),
        seq,
        timestamp: parse_timestamp(ts).unwrap(),
        sender: from.to_owned(),
        receiver: to.to_owned(),
        collection: "C".to_owned(),
        token_id: "T".to_owned(),
        pay_amount: None,
        pay_currency: None,
        usd_value,
    }
}

pub(crate) fn history_from(txs: Vec<Transaction>) -> TokenHistory {
    TokenHistory::new("C".to_owned(), "T".to_owned(), txs)
}

/// The five-row BAYC 1332 sale history used across the test suite.
pub(crate) fn bayc_1332_csv() -> String {
    let rows = [
        (
            "0xa1",
            "2021-06-01 0:49:43",
            "0xdc82142e5fa1ad18bee3f351d0c820db63ca5a91",
            "0x1729ae0e8f58d55de0f209273759cb644405478a",
            "5124.66",
        ),
        (
            "0xa2",
            "2021-06-20 1:41:46",
            "0x1729ae0e8f58d55de0f209273759cb644405478a",
            "0x30f0149363f860bd37015a77da1db8b5845545cc",
            "8503.60",
        ),
        (
            "0xa3",
            "2021-07-10 17:53:09",
            "0x30f0149363f860bd37015a77da1db8b5845545cc",
            "0xc91b761085e6d9059e1e5012cc82eec9ec3110fc",
            "9239.76",
        ),
        (
            "0xa4",
            "2021-07-17 19:41:02",
            "0xc91b761085e6d9059e1e5012cc82eec9ec3110fc",
            "0x1729ae0e8f58d55de0f209273759cb644405478a",
            "16932.51",
        ),
        (
            "0xa5",
            "2021-08-21 10:52:50",
            "0x1729ae0e8f58d55de0f209273759cb644405478a",
            "0x8f18d6a49bb392a84a4a4c03b69d29179e333946",
            "75425.67",
        ),
    ];
    let mut csv = String::from(
        "tx_hash,seq,timestamp,sender,receiver,collection,token_id,pay_amount,pay_currency,usd_value\n",
    );
    for (hash, ts, from, to, usd) in rows {
        csv.push_str(&format!("{hash},,{ts},{from},{to},BAYC,1332,,,{usd}\n"));
    }
    csv
}

pub(crate) fn bayc_1332_history() -> TokenHistory {
    let csv = bayc_1332_csv();
    let ledger =
        build_ledger(parse_transactions(csv.as_bytes(), InputFormat::Csv).unwrap()).unwrap();
    ledger.histories["1332"].clone()
}
