use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Seconds in one day; minimum application lifetime kept by refinement.
pub const ONE_DAY_SECS: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    /// Externally signed transaction.
    Normal,
    /// Value transfer emitted during contract execution.
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NonPonzi,
    Ponzi,
}

impl Label {
    pub fn is_ponzi(self) -> bool {
        matches!(self, Label::Ponzi)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ponzi => "ponzi",
            Label::NonPonzi => "non_ponzi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PonziType {
    Chain,
    Tree,
    Handover,
    Waterfall,
    Other,
}

impl PonziType {
    pub fn as_str(self) -> &'static str {
        match self {
            PonziType::Chain => "chain",
            PonziType::Tree => "tree",
            PonziType::Handover => "handover",
            PonziType::Waterfall => "waterfall",
            PonziType::Other => "other",
        }
    }
}

macro_rules! str_enum {
    ($ty:ty, $what:literal, { $($tok:literal => $val:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self, Error> {
                match s.trim() {
                    $($tok => Ok($val),)+
                    other => Err(Error::invalid(format!(concat!("unknown ", $what, " token {:?}"), other))),
                }
            }
        }
    };
}

str_enum!(TxKind, "kind", { "normal" => TxKind::Normal, "internal" => TxKind::Internal });
str_enum!(TxStatus, "status", { "success" => TxStatus::Success, "failed" => TxStatus::Failed });
str_enum!(Label, "label", { "ponzi" => Label::Ponzi, "non_ponzi" => Label::NonPonzi });
str_enum!(PonziType, "ponzi_type", {
    "chain" => PonziType::Chain,
    "tree" => PonziType::Tree,
    "handover" => PonziType::Handover,
    "waterfall" => PonziType::Waterfall,
    "other" => PonziType::Other,
});

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for PonziType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One normal or internal value transfer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_hash: String,
    pub timestamp: i64,
    pub from_addr: String,
    pub to_addr: String,
    pub value_wei: u128,
    pub kind: TxKind,
    pub status: TxStatus,
    /// First four bytes of the call data as 8 lowercase hex characters.
    pub input_selector: Option<String>,
    pub counterpart_is_contract: bool,
}

impl Transaction {
    pub fn is_success(&self) -> bool {
        self.status == TxStatus::Success
    }

    /// Canonical ordering: timestamp, then hash. Equal keys keep their input order
    /// when used with a stable sort.
    pub fn order_key(&self, other: &Self) -> Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then_with(|| self.tx_hash.cmp(&other.tx_hash))
    }
}

/// A labeled contract with its (successful, sorted) transaction history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationRecord {
    pub address: String,
    pub label: Label,
    pub ponzi_type: Option<PonziType>,
    pub created_at: i64,
    pub txs: Vec<Transaction>,
}

impl ApplicationRecord {
    /// Builds a record, sorting `txs` and anchoring `created_at` at the earliest one.
    pub fn new(
        address: impl Into<String>,
        label: Label,
        ponzi_type: Option<PonziType>,
        mut txs: Vec<Transaction>,
    ) -> Self {
        txs.sort_by(Transaction::order_key);
        let created_at = txs.first().map_or(0, |t| t.timestamp);
        ApplicationRecord {
            address: address.into(),
            label,
            ponzi_type,
            created_at,
            txs,
        }
    }

    pub fn last_timestamp(&self) -> i64 {
        self.txs.last().map_or(self.created_at, |t| t.timestamp)
    }

    pub fn lifetime_secs(&self) -> i64 {
        self.last_timestamp() - self.created_at
    }

    /// True when `tx` sends value to this application (an investment).
    #[inline]
    pub fn is_incoming(&self, tx: &Transaction) -> bool {
        tx.to_addr == self.address
    }

    /// The other party of `tx`.
    #[inline]
    pub fn counterpart<'a>(&self, tx: &'a Transaction) -> &'a str {
        if self.is_incoming(tx) {
            &tx.from_addr
        } else {
            &tx.to_addr
        }
    }
}

/// Per-label retained/dropped counts from refinement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub ponzi: usize,
    pub non_ponzi: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::Ponzi => self.ponzi += 1,
            Label::NonPonzi => self.non_ponzi += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.ponzi + self.non_ponzi
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineReport {
    pub retained: LabelCounts,
    pub dropped_no_txs: LabelCounts,
    pub dropped_short_lifetime: LabelCounts,
}

/// Refined applications, sorted by address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub apps: Vec<ApplicationRecord>,
    pub report: RefineReport,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }

    pub fn get(&self, address: &str) -> Option<&ApplicationRecord> {
        self.apps
            .binary_search_by(|a| a.address.as_str().cmp(address))
            .ok()
            .map(|i| &self.apps[i])
    }
}
