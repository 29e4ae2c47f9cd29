//! Interval bucketing of an application's history into the 43 per-interval series.

use std::collections::HashSet;
use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ApplicationRecord, TxKind};
use crate::registry::SERIES_COUNT;
use crate::scalar::{Scalar, WEI_PER_ETH};

/// Series names in canonical order. The first 12 are ether amounts, the rest counts.
pub const SERIES_NAMES: [&str; SERIES_COUNT] = [
    // ETH value
    "balance",
    "profit_and_loss",
    "loss",
    "loss_by_contract",
    "loss_by_person",
    "loss_from_internal_txs",
    "loss_from_normal_txs",
    "profit",
    "profit_by_contract",
    "profit_by_person",
    "profit_from_internal_txs",
    "profit_from_normal_txs",
    // transactions
    "total_txs",
    "total_internal_txs",
    "total_in_coming_txs",
    "total_in_coming_internal_txs",
    "total_in_coming_normal_txs",
    "total_normal_txs",
    "total_out_going_txs",
    "total_out_going_internal_txs",
    "total_out_going_normal_txs",
    // participant addresses
    "total_unique_addresses",
    "total_unique_in_coming_addresses",
    "total_unique_in_coming_addresses_from_internal",
    "total_unique_in_coming_addresses_from_normal",
    "total_unique_out_going_addresses",
    "total_unique_out_going_addresses_from_internal",
    "total_unique_out_going_addresses_from_normal",
    // calling functions
    "total_unique_calling_function",
    "total_unique_in_coming_calling_function",
    "total_unique_in_coming_calling_function_from_internal",
    "total_unique_in_coming_calling_function_from_normal",
    "total_unique_out_going_calling_function",
    "total_unique_out_going_calling_function_from_internal",
    "total_unique_out_going_calling_function_from_normal",
    // participant account type
    "num_in_coming_txs_from_contract",
    "num_in_coming_txs_from_person",
    "num_out_going_txs_to_contract",
    "num_out_going_txs_to_person",
    "num_unique_in_coming_contract_address",
    "num_unique_in_coming_person_address",
    "num_unique_out_going_contract_address",
    "num_unique_out_going_person_address",
];

/// Number of leading series measured in wei/ether.
pub const VALUE_SERIES: usize = 12;

pub mod idx {
    pub const BALANCE: usize = 0;
    pub const PROFIT_AND_LOSS: usize = 1;
    pub const LOSS: usize = 2;
    pub const LOSS_BY_CONTRACT: usize = 3;
    pub const LOSS_BY_PERSON: usize = 4;
    pub const LOSS_INTERNAL: usize = 5;
    pub const LOSS_NORMAL: usize = 6;
    pub const PROFIT: usize = 7;
    pub const PROFIT_BY_CONTRACT: usize = 8;
    pub const PROFIT_BY_PERSON: usize = 9;
    pub const PROFIT_INTERNAL: usize = 10;
    pub const PROFIT_NORMAL: usize = 11;
    pub const TOTAL_TXS: usize = 12;
    pub const TOTAL_INTERNAL: usize = 13;
    pub const IN_TXS: usize = 14;
    pub const IN_INTERNAL: usize = 15;
    pub const IN_NORMAL: usize = 16;
    pub const TOTAL_NORMAL: usize = 17;
    pub const OUT_TXS: usize = 18;
    pub const OUT_INTERNAL: usize = 19;
    pub const OUT_NORMAL: usize = 20;
    pub const UNIQ_ADDR: usize = 21;
    pub const UNIQ_IN_ADDR: usize = 22;
    pub const UNIQ_IN_ADDR_INTERNAL: usize = 23;
    pub const UNIQ_IN_ADDR_NORMAL: usize = 24;
    pub const UNIQ_OUT_ADDR: usize = 25;
    pub const UNIQ_OUT_ADDR_INTERNAL: usize = 26;
    pub const UNIQ_OUT_ADDR_NORMAL: usize = 27;
    pub const UNIQ_FN: usize = 28;
    pub const UNIQ_IN_FN: usize = 29;
    pub const UNIQ_IN_FN_INTERNAL: usize = 30;
    pub const UNIQ_IN_FN_NORMAL: usize = 31;
    pub const UNIQ_OUT_FN: usize = 32;
    pub const UNIQ_OUT_FN_INTERNAL: usize = 33;
    pub const UNIQ_OUT_FN_NORMAL: usize = 34;
    pub const IN_FROM_CONTRACT: usize = 35;
    pub const IN_FROM_PERSON: usize = 36;
    pub const OUT_TO_CONTRACT: usize = 37;
    pub const OUT_TO_PERSON: usize = 38;
    pub const UNIQ_IN_CONTRACT: usize = 39;
    pub const UNIQ_IN_PERSON: usize = 40;
    pub const UNIQ_OUT_CONTRACT: usize = 41;
    pub const UNIQ_OUT_PERSON: usize = 42;
}

/// Allowed interval lengths in hours.
pub const INTERVAL_HOURS: [u32; 3] = [12, 24, 48];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub hours: u32,
    /// Number of intervals, `ceil(lifetime / T)`, at least 1.
    pub count: usize,
}

impl IntervalSpec {
    pub fn for_app(app: &ApplicationRecord, hours: u32) -> Result<Self> {
        if hours == 0 {
            return Err(Error::invalid("interval length must be positive"));
        }
        let width = 3600 * hours as i64;
        let lifetime = app.lifetime_secs().max(0);
        let count = ((lifetime + width - 1) / width).max(1) as usize;
        Ok(IntervalSpec { hours, count })
    }

    pub fn width_secs(&self) -> i64 {
        3600 * self.hours as i64
    }

    /// Seasonal period used by the decomposition: intervals per week, at least 2.
    pub fn seasonal_period(&self) -> usize {
        seasonal_period(self.hours)
    }
}

pub fn seasonal_period(hours: u32) -> usize {
    (168usize.div_ceil(hours.max(1) as usize)).max(2)
}

/// Interval index of every transaction of `app`, in transaction order.
///
/// Intervals are left-closed and anchored at `created_at`; the final timestamp is
/// clamped into the last interval.
pub fn assign_intervals(app: &ApplicationRecord, hours: u32) -> Result<Vec<usize>> {
    let spec = IntervalSpec::for_app(app, hours)?;
    let width = spec.width_secs();
    app.txs
        .iter()
        .map(|tx| {
            let offset = tx.timestamp - app.created_at;
            if offset < 0 {
                return Err(Error::TimestampBeforeCreation {
                    tx_hash: tx.tx_hash.clone(),
                    timestamp: tx.timestamp,
                    created_at: app.created_at,
                });
            }
            Ok(((offset / width) as usize).min(spec.count - 1))
        })
        .collect()
}

/// Integer panel: wei for the value series, plain counts for the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPanel {
    pub spec: IntervalSpec,
    pub series: Vec<Vec<i128>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPanel<F> {
    pub address: String,
    pub spec: IntervalSpec,
    /// `SERIES_COUNT` series of length `spec.count`, in [`SERIES_NAMES`] order.
    pub series: Vec<Vec<F>>,
}

impl<F: Scalar> TimeSeriesPanel<F> {
    pub fn get(&self, name: &str) -> Option<&[F]> {
        SERIES_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.series[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.spec.count
    }

    pub fn is_empty(&self) -> bool {
        self.spec.count == 0
    }

    /// Writes `interval_index` plus the 43 series as CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["interval_index".to_string()];
        header.extend(SERIES_NAMES.iter().map(|s| s.to_string()));
        wtr.write_record(&header)?;
        for i in 0..self.spec.count {
            let mut rec = vec![i.to_string()];
            rec.extend(self.series.iter().map(|s| s[i].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }
}

#[derive(Default)]
struct IntervalSets<'a> {
    addr: HashSet<&'a str>,
    in_addr: [HashSet<&'a str>; 2],
    out_addr: [HashSet<&'a str>; 2],
    func: HashSet<&'a str>,
    in_func: [HashSet<&'a str>; 2],
    out_func: [HashSet<&'a str>; 2],
    in_contract: HashSet<&'a str>,
    in_person: HashSet<&'a str>,
    out_contract: HashSet<&'a str>,
    out_person: HashSet<&'a str>,
}

fn union_len(a: &[HashSet<&str>; 2]) -> usize {
    a[0].len() + a[1].iter().filter(|x| !a[0].contains(*x)).count()
}

impl<'a> IntervalSets<'a> {
    fn flush(&mut self, series: &mut [Vec<i128>], i: usize) {
        use idx::*;
        let put = |series: &mut [Vec<i128>], s: usize, v: usize| series[s][i] = v as i128;
        put(series, UNIQ_ADDR, self.addr.len());
        put(series, UNIQ_IN_ADDR, union_len(&self.in_addr));
        put(series, UNIQ_IN_ADDR_INTERNAL, self.in_addr[1].len());
        put(series, UNIQ_IN_ADDR_NORMAL, self.in_addr[0].len());
        put(series, UNIQ_OUT_ADDR, union_len(&self.out_addr));
        put(series, UNIQ_OUT_ADDR_INTERNAL, self.out_addr[1].len());
        put(series, UNIQ_OUT_ADDR_NORMAL, self.out_addr[0].len());
        put(series, UNIQ_FN, self.func.len());
        put(series, UNIQ_IN_FN, union_len(&self.in_func));
        put(series, UNIQ_IN_FN_INTERNAL, self.in_func[1].len());
        put(series, UNIQ_IN_FN_NORMAL, self.in_func[0].len());
        put(series, UNIQ_OUT_FN, union_len(&self.out_func));
        put(series, UNIQ_OUT_FN_INTERNAL, self.out_func[1].len());
        put(series, UNIQ_OUT_FN_NORMAL, self.out_func[0].len());
        put(series, UNIQ_IN_CONTRACT, self.in_contract.len());
        put(series, UNIQ_IN_PERSON, self.in_person.len());
        put(series, UNIQ_OUT_CONTRACT, self.out_contract.len());
        put(series, UNIQ_OUT_PERSON, self.out_person.len());
        *self = IntervalSets::default();
    }
}

/// Builds the integer panel. Distinct-count series are per interval, not cumulative.
pub fn build_raw_panel(app: &ApplicationRecord, hours: u32) -> Result<RawPanel> {
    use idx::*;
    let spec = IntervalSpec::for_app(app, hours)?;
    let assignment = assign_intervals(app, hours)?;
    let mut series = vec![vec![0i128; spec.count]; SERIES_COUNT];
    let mut sets = IntervalSets::default();
    let mut current = 0usize;

    for (tx, &i) in app.txs.iter().zip(&assignment) {
        if i != current {
            sets.flush(&mut series, current);
            current = i;
        }
        let v = tx.value_wei as i128;
        let internal = tx.kind == TxKind::Internal;
        let k = internal as usize;
        let incoming = app.is_incoming(tx);
        let counterpart = app.counterpart(tx);
        let contract = tx.counterpart_is_contract;

        series[TOTAL_TXS][i] += 1;
        series[if internal {
            TOTAL_INTERNAL
        } else {
            TOTAL_NORMAL
        }][i] += 1;
        sets.addr.insert(counterpart);
        if let Some(sel) = tx.input_selector.as_deref() {
            sets.func.insert(sel);
            if incoming {
                sets.in_func[k].insert(sel);
            } else {
                sets.out_func[k].insert(sel);
            }
        }
        if incoming {
            series[PROFIT][i] += v;
            series[if contract {
                PROFIT_BY_CONTRACT
            } else {
                PROFIT_BY_PERSON
            }][i] += v;
            series[if internal {
                PROFIT_INTERNAL
            } else {
                PROFIT_NORMAL
            }][i] += v;
            series[IN_TXS][i] += 1;
            series[if internal { IN_INTERNAL } else { IN_NORMAL }][i] += 1;
            series[if contract {
                IN_FROM_CONTRACT
            } else {
                IN_FROM_PERSON
            }][i] += 1;
            sets.in_addr[k].insert(counterpart);
            if contract {
                sets.in_contract.insert(counterpart);
            } else {
                sets.in_person.insert(counterpart);
            }
        } else {
            series[LOSS][i] += v;
            series[if contract {
                LOSS_BY_CONTRACT
            } else {
                LOSS_BY_PERSON
            }][i] += v;
            series[if internal { LOSS_INTERNAL } else { LOSS_NORMAL }][i] += v;
            series[OUT_TXS][i] += 1;
            series[if internal { OUT_INTERNAL } else { OUT_NORMAL }][i] += 1;
            series[if contract {
                OUT_TO_CONTRACT
            } else {
                OUT_TO_PERSON
            }][i] += 1;
            sets.out_addr[k].insert(counterpart);
            if contract {
                sets.out_contract.insert(counterpart);
            } else {
                sets.out_person.insert(counterpart);
            }
        }
    }
    if !app.txs.is_empty() {
        sets.flush(&mut series, current);
    }

    let mut running = 0i128;
    let mut went_negative = false;
    for i in 0..spec.count {
        let pl = series[PROFIT][i] - series[LOSS][i];
        series[PROFIT_AND_LOSS][i] = pl;
        running += pl;
        went_negative |= running < 0;
        series[BALANCE][i] = running;
    }
    if went_negative {
        warn!(
            "application {} has a negative interval balance",
            app.address
        );
    }
    Ok(RawPanel { spec, series })
}

/// Builds the panel, converting the value series to ether.
pub fn build_panel<F: Scalar>(app: &ApplicationRecord, hours: u32) -> Result<TimeSeriesPanel<F>> {
    let raw = build_raw_panel(app, hours)?;
    let series = raw
        .series
        .iter()
        .enumerate()
        .map(|(s, values)| {
            values
                .iter()
                .map(|&v| {
                    if s < VALUE_SERIES {
                        F::lit(v as f64 / WEI_PER_ETH)
                    } else {
                        F::lit(v as f64)
                    }
                })
                .collect()
        })
        .collect();
    Ok(TimeSeriesPanel {
        address: app.address.clone(),
        spec: raw.spec,
        series,
    })
}
