//! Transaction ingestion: parsing, failed-transaction filtering, label joins and
//! dataset refinement.

mod parse;
mod types;

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;

pub use parse::{
    parse_transactions, read_address_types, read_labels, selector_from_input, write_address_types,
    write_labels, write_transactions, write_transactions_csv, write_transactions_jsonl, LabelRow,
    TxSchema,
};
pub use types::{
    ApplicationRecord, Dataset, Label, LabelCounts, PonziType, RefineReport, Transaction, TxKind,
    TxStatus, ONE_DAY_SECS,
};

use crate::error::{Error, Result};

/// Keeps only successful transactions, preserving order.
pub fn filter_failed(txs: Vec<Transaction>) -> Vec<Transaction> {
    txs.into_iter().filter(Transaction::is_success).collect()
}

/// Groups transactions under every endpoint address that is in `wanted`.
///
/// Self-transfers (from == to) cannot be oriented and are skipped.
pub fn group_by_address(
    txs: &[Transaction],
    wanted: &HashSet<String>,
) -> HashMap<String, Vec<Transaction>> {
    let mut groups: HashMap<String, Vec<Transaction>> = HashMap::new();
    let mut self_transfers = 0usize;
    for tx in txs {
        if tx.from_addr == tx.to_addr {
            self_transfers += 1;
            continue;
        }
        for addr in [&tx.from_addr, &tx.to_addr] {
            if wanted.contains(addr) {
                groups.entry(addr.clone()).or_default().push(tx.clone());
            }
        }
    }
    if self_transfers > 0 {
        warn!("skipped {self_transfers} self-transfer transaction(s)");
    }
    groups
}

#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub records: Vec<ApplicationRecord>,
    /// Labeled addresses with no transactions at all.
    pub unmatched: Vec<String>,
}

/// Builds one record per labeled address.
///
/// With `strict`, a labeled address that has no transaction group is an error;
/// otherwise it is skipped and reported in [`JoinOutcome::unmatched`].
pub fn join_labels(
    mut txs_by_address: HashMap<String, Vec<Transaction>>,
    labels: &[LabelRow],
    strict: bool,
) -> Result<JoinOutcome> {
    let mut records = Vec::with_capacity(labels.len());
    let mut unmatched = Vec::new();
    for row in labels {
        match txs_by_address.remove(&row.address) {
            Some(txs) => records.push(ApplicationRecord::new(
                row.address.clone(),
                row.label,
                row.ponzi_type,
                txs,
            )),
            None => unmatched.push(row.address.clone()),
        }
    }
    if strict && !unmatched.is_empty() {
        return Err(Error::MissingAddresses(unmatched));
    }
    if !unmatched.is_empty() {
        warn!(
            "{} labeled address(es) have no transactions",
            unmatched.len()
        );
    }
    Ok(JoinOutcome { records, unmatched })
}

/// Overrides `counterpart_is_contract` from an address-type map, relative to `app`.
pub fn apply_address_types(app: &mut ApplicationRecord, types: &HashMap<String, bool>) {
    let address = app.address.clone();
    for tx in &mut app.txs {
        let counterpart = if tx.to_addr == address {
            &tx.from_addr
        } else {
            &tx.to_addr
        };
        if let Some(&flag) = types.get(counterpart) {
            tx.counterpart_is_contract = flag;
        }
    }
}

/// Drops applications without transactions or with a lifetime under one day and
/// sorts the rest by address.
///
/// Transactions are expected to be filtered with [`filter_failed`] already. A lifetime
/// of exactly one day is kept.
pub fn refine_dataset(apps: Vec<ApplicationRecord>) -> Result<Dataset> {
    let mut by_addr: BTreeMap<String, ApplicationRecord> = BTreeMap::new();
    let mut report = RefineReport::default();
    for app in apps {
        if by_addr.contains_key(&app.address) {
            return Err(Error::DuplicateAddress(app.address));
        }
        by_addr.insert(app.address.clone(), app);
    }
    let mut kept = Vec::with_capacity(by_addr.len());
    for (_, app) in by_addr {
        if app.txs.is_empty() {
            report.dropped_no_txs.add(app.label);
        } else if app.lifetime_secs() < ONE_DAY_SECS {
            report.dropped_short_lifetime.add(app.label);
        } else {
            report.retained.add(app.label);
            kept.push(app);
        }
    }
    Ok(Dataset { apps: kept, report })
}

/// Full ingest pipeline: group by labeled address, drop failed transactions, join
/// labels, apply the optional address-type map, refine.
pub fn assemble_dataset(
    txs: Vec<Transaction>,
    labels: &[LabelRow],
    address_types: Option<&HashMap<String, bool>>,
    strict: bool,
) -> Result<(Dataset, JoinOutcome)> {
    let wanted: HashSet<String> = labels.iter().map(|l| l.address.clone()).collect();
    // group before filtering so an address seen only in failed calls is a
    // zero-transaction drop rather than a missing address
    let groups = group_by_address(&txs, &wanted)
        .into_iter()
        .map(|(addr, txs)| (addr, filter_failed(txs)))
        .collect();
    let mut outcome = join_labels(groups, labels, strict)?;
    if let Some(types) = address_types {
        for app in &mut outcome.records {
            apply_address_types(app, types);
        }
    }
    let dataset = refine_dataset(std::mem::take(&mut outcome.records))?;
    Ok((dataset, outcome))
}
