//! Whole-lifetime account features of an application.
//!
//! Amounts are accumulated in integer wei and converted to ether when the vector is
//! emitted. Every ratio with a zero denominator is 0, so the output is always finite.

use std::collections::HashMap;

use crate::ingest::{ApplicationRecord, TxKind};
use crate::registry::{FeatureVector, ACCOUNT_ARITY};
use crate::scalar::{safe_div, signed_wei_to_eth, wei_to_eth, Scalar};
use crate::stats::{gini, skewness, std_dev};

/// Canonical account feature order.
pub const ACCOUNT_FEATURES: [&str; ACCOUNT_ARITY] = [
    "know_rate",
    "balance",
    "num_in_txs",
    "num_out_txs",
    "difference_idx",
    "paid_rate",
    "max_pay",
    "total_inv_amt",
    "total_pay_amt",
    "avg_inv_amt",
    "avg_pay_amt",
    "dev_inv_amt",
    "dev_pay_amt",
    "avg_time_btw_txs",
    "life_time",
    "gini_amt_in",
    "gini_amt_out",
    "overlap_addr",
    "gini_time_in",
    "gini_time_out",
    "num_inv_acc",
    "num_pay_acc",
    "balance_rate",
    "payment_time",
    "num_all_txs",
    "pay_skewness",
    "num_in_internal_txs",
    "num_out_internal_txs",
    "nbr_tx_in",
];

#[derive(Debug, Default, Clone, Copy)]
struct Party {
    amount_wei: u128,
    count: usize,
    first_ts: i64,
}

impl Party {
    fn record(&mut self, value: u128, ts: i64) {
        if self.count == 0 {
            self.first_ts = ts;
        }
        self.amount_wei += value;
        self.count += 1;
    }
}

/// Integer aggregates the features are derived from.
#[derive(Debug, Default, Clone)]
pub struct AccountAggregates {
    pub num_in_txs: usize,
    pub num_out_txs: usize,
    pub num_in_internal_txs: usize,
    pub num_out_internal_txs: usize,
    pub total_in_wei: u128,
    pub total_out_wei: u128,
    pub last_payment_ts: Option<i64>,
}

impl AccountAggregates {
    pub fn balance_wei(&self) -> i128 {
        self.total_in_wei as i128 - self.total_out_wei as i128
    }
}

pub fn account_aggregates(app: &ApplicationRecord) -> AccountAggregates {
    let mut agg = AccountAggregates::default();
    for tx in &app.txs {
        let internal = tx.kind == TxKind::Internal;
        if app.is_incoming(tx) {
            agg.num_in_txs += 1;
            agg.num_in_internal_txs += internal as usize;
            agg.total_in_wei += tx.value_wei;
        } else {
            agg.num_out_txs += 1;
            agg.num_out_internal_txs += internal as usize;
            agg.total_out_wei += tx.value_wei;
            agg.last_payment_ts = Some(tx.timestamp);
        }
    }
    agg
}

fn gini_or_zero<F: Scalar>(values: &[F]) -> F {
    if values.is_empty() {
        F::zero()
    } else {
        gini(values).unwrap_or_else(|_| F::zero())
    }
}

/// Computes the 29 account features in [`ACCOUNT_FEATURES`] order.
pub fn compute_account_features<F: Scalar>(app: &ApplicationRecord) -> FeatureVector<F> {
    let agg = account_aggregates(app);
    let mut investors: HashMap<&str, Party> = HashMap::new();
    let mut payees: HashMap<&str, Party> = HashMap::new();
    let mut in_amounts: Vec<F> = Vec::with_capacity(agg.num_in_txs);
    let mut out_amounts: Vec<F> = Vec::with_capacity(agg.num_out_txs);
    for tx in &app.txs {
        if app.is_incoming(tx) {
            investors
                .entry(tx.from_addr.as_str())
                .or_default()
                .record(tx.value_wei, tx.timestamp);
            in_amounts.push(wei_to_eth(tx.value_wei));
        } else {
            payees
                .entry(tx.to_addr.as_str())
                .or_default()
                .record(tx.value_wei, tx.timestamp);
            out_amounts.push(wei_to_eth(tx.value_wei));
        }
    }

    let n = |k: usize| F::from_usize_lossy(k);
    let num_in = agg.num_in_txs;
    let num_out = agg.num_out_txs;
    let num_all = num_in + num_out;
    let lifetime = app.lifetime_secs();

    let overlap = investors.keys().filter(|a| payees.contains_key(*a)).count();
    let participants = investors.len() + payees.len() - overlap;
    // invested no later than their first payment
    let knowing = payees
        .iter()
        .filter(|(addr, pay)| {
            investors
                .get(*addr)
                .is_some_and(|inv| inv.first_ts <= pay.first_ts)
        })
        .count();
    let max_pay = payees.values().map(|p| p.count).max().unwrap_or(0);

    let total_inv: F = wei_to_eth(agg.total_in_wei);
    let total_pay: F = wei_to_eth(agg.total_out_wei);
    let balance: F = signed_wei_to_eth(agg.balance_wei());

    let mut inv_totals: Vec<F> = investors
        .values()
        .map(|p| wei_to_eth(p.amount_wei))
        .collect();
    let mut pay_totals: Vec<F> = payees.values().map(|p| wei_to_eth(p.amount_wei)).collect();
    let mut inv_counts: Vec<F> = investors.values().map(|p| n(p.count)).collect();
    let mut pay_counts: Vec<F> = payees.values().map(|p| n(p.count)).collect();
    // HashMap and tie order are arbitrary; sort so float sums are reproducible
    for v in [
        &mut inv_totals,
        &mut pay_totals,
        &mut inv_counts,
        &mut pay_counts,
        &mut in_amounts,
        &mut out_amounts,
    ] {
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    }

    let avg_gap = if app.txs.len() >= 2 {
        F::lit(lifetime as f64) / n(app.txs.len() - 1)
    } else {
        F::zero()
    };
    let payment_time = match agg.last_payment_ts {
        Some(ts) if lifetime > 0 => F::lit((ts - app.created_at) as f64 / lifetime as f64),
        _ => F::zero(),
    };

    let values = vec![
        safe_div(n(knowing), n(participants)),
        balance,
        n(num_in),
        n(num_out),
        (F::lit(num_in as f64) - F::lit(num_out as f64)) / n(num_all.max(1)),
        safe_div(n(overlap), n(investors.len())),
        n(max_pay),
        total_inv,
        total_pay,
        safe_div(total_inv, n(num_in)),
        safe_div(total_pay, n(num_out)),
        std_dev(&in_amounts),
        std_dev(&out_amounts),
        avg_gap,
        F::lit(lifetime as f64),
        gini_or_zero(&inv_totals),
        gini_or_zero(&pay_totals),
        n(overlap),
        gini_or_zero(&inv_counts),
        gini_or_zero(&pay_counts),
        n(investors.len()),
        n(payees.len()),
        safe_div(balance, total_inv),
        payment_time,
        n(num_all),
        skewness(&out_amounts),
        n(agg.num_in_internal_txs),
        n(agg.num_out_internal_txs),
        safe_div(n(num_in), n(investors.len())),
    ];
    debug_assert_eq!(values.len(), ACCOUNT_ARITY);
    FeatureVector { values }
}
