//! Plot-ready tables for a single application.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use ponzi_core::ingest::{ApplicationRecord, TxKind, ONE_DAY_SECS};
use ponzi_core::scalar::{signed_wei_to_eth, wei_to_eth};
use ponzi_core::Real;

use crate::commands::load_dataset;
use crate::{FigureArgs, Outcome};

pub const DAILY_FILE: &str = "daily_volume.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const BALANCE_FILE: &str = "balance.csv";

fn day_of(app: &ApplicationRecord, ts: i64) -> usize {
    ((ts - app.created_at) / ONE_DAY_SECS) as usize
}

#[derive(Default, Clone, Copy)]
struct Day {
    txs: usize,
    incoming: usize,
    outgoing: usize,
    in_wei: u128,
    out_wei: u128,
}

/// One row per day of the lifetime, empty days included.
pub fn daily_volume_csv(app: &ApplicationRecord) -> String {
    let days = day_of(app, app.last_timestamp()) + 1;
    let mut per_day = vec![Day::default(); days];
    for tx in &app.txs {
        let d = &mut per_day[day_of(app, tx.timestamp)];
        d.txs += 1;
        if app.is_incoming(tx) {
            d.incoming += 1;
            d.in_wei += tx.value_wei;
        } else {
            d.outgoing += 1;
            d.out_wei += tx.value_wei;
        }
    }
    let mut s = String::from("day,num_txs,num_in,num_out,value_in_eth,value_out_eth\n");
    for (i, d) in per_day.iter().enumerate() {
        let (vin, vout): (Real, Real) = (wei_to_eth(d.in_wei), wei_to_eth(d.out_wei));
        let _ = writeln!(
            s,
            "{i},{},{},{},{vin:?},{vout:?}",
            d.txs, d.incoming, d.outgoing
        );
    }
    s
}

/// One row per transaction.
pub fn events_csv(app: &ApplicationRecord) -> String {
    let mut s = String::from("timestamp,day,direction,kind,value_eth,counterpart,tx_hash\n");
    for tx in &app.txs {
        let dir = if app.is_incoming(tx) { "in" } else { "out" };
        let kind = match tx.kind {
            TxKind::Normal => "normal",
            TxKind::Internal => "internal",
        };
        let v: Real = wei_to_eth(tx.value_wei);
        let _ = writeln!(
            s,
            "{},{},{dir},{kind},{v:?},{},{}",
            tx.timestamp,
            day_of(app, tx.timestamp),
            app.counterpart(tx),
            tx.tx_hash
        );
    }
    s
}

/// Running balance after each transaction.
pub fn balance_csv(app: &ApplicationRecord) -> String {
    let mut s = String::from("timestamp,balance_eth\n");
    let mut wei: i128 = 0;
    for tx in &app.txs {
        if app.is_incoming(tx) {
            wei += tx.value_wei as i128;
        } else {
            wei -= tx.value_wei as i128;
        }
        let b: Real = signed_wei_to_eth(wei);
        let _ = writeln!(s, "{},{b:?}", tx.timestamp);
    }
    s
}

pub fn figure_data(a: &FigureArgs) -> Result<Outcome> {
    let dataset = load_dataset(&a.dataset)?;
    let address = a.address.trim().to_ascii_lowercase();
    let app = dataset
        .get(&address)
        .ok_or_else(|| anyhow!("{address} is not in the refined dataset"))?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    for (name, text) in [
        (DAILY_FILE, daily_volume_csv(app)),
        (EVENTS_FILE, events_csv(app)),
        (BALANCE_FILE, balance_csv(app)),
    ] {
        let path = a.out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path);
    }
    println!(
        "{}: {} transactions over {} days",
        app.address,
        app.txs.len(),
        day_of(app, app.last_timestamp()) + 1
    );
    Ok(Outcome {
        inputs: vec![a.dataset.clone()],
        outputs,
        out: a.out.clone(),
        seed: None,
    })
}
