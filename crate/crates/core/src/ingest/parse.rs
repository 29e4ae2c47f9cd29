//! Readers and writers for the transaction, label and address-type files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::value::RawValue;

use super::types::{Label, PonziType, Transaction, TxKind, TxStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxSchema {
    Jsonl,
    Csv,
}

impl TxSchema {
    /// Picks the schema from a file extension, defaulting to jsonl.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TxSchema::Csv,
            _ => TxSchema::Jsonl,
        }
    }
}

/// Wire form of one transaction row; field names are the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TxRow {
    tx_hash: String,
    timestamp: i64,
    from: String,
    to: String,
    value_wei: u128,
    kind: String,
    status: String,
    #[serde(default)]
    input: String,
    #[serde(deserialize_with = "de_bool")]
    counterpart_is_contract: bool,
}

/// JSON variant: `value_wei` may exceed `u64`, which serde's buffered number types
/// cannot carry, so the raw token is parsed by hand. Strings are accepted too.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TxRowJson<'a> {
    tx_hash: String,
    timestamp: i64,
    from: String,
    to: String,
    #[serde(borrow)]
    value_wei: &'a RawValue,
    kind: String,
    status: String,
    #[serde(default)]
    input: String,
    #[serde(deserialize_with = "de_bool")]
    counterpart_is_contract: bool,
}

impl TxRowJson<'_> {
    fn into_row(self) -> std::result::Result<TxRow, String> {
        let raw = self.value_wei.get().trim();
        let digits = raw
            .strip_prefix('"')
            .and_then(|r| r.strip_suffix('"'))
            .unwrap_or(raw)
            .trim();
        let value_wei = digits
            .parse::<u128>()
            .map_err(|e| format!("value_wei {raw}: {e}"))?;
        Ok(TxRow {
            tx_hash: self.tx_hash,
            timestamp: self.timestamp,
            from: self.from,
            to: self.to,
            value_wei,
            kind: self.kind,
            status: self.status,
            input: self.input,
            counterpart_is_contract: self.counterpart_is_contract,
        })
    }
}

fn de_bool<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Int(u8),
        Str(String),
    }
    match Flag::deserialize(d)? {
        Flag::Bool(b) => Ok(b),
        Flag::Int(0) => Ok(false),
        Flag::Int(1) => Ok(true),
        Flag::Str(s) => {
            parse_flag(&s).ok_or_else(|| serde::de::Error::custom(format!("bad boolean {s:?}")))
        }
        Flag::Int(n) => Err(serde::de::Error::custom(format!("bad boolean {n}"))),
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "True" | "TRUE" => Some(true),
        "0" | "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

/// Extracts the 4-byte function selector from `0x`-prefixed call data.
pub fn selector_from_input(input: &str) -> std::result::Result<Option<String>, String> {
    let input = input.trim();
    if input.is_empty() {
        return Ok(None);
    }
    let hex = input
        .strip_prefix("0x")
        .or_else(|| input.strip_prefix("0X"))
        .ok_or_else(|| format!("input {input:?} is not 0x-prefixed"))?;
    if !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("input {input:?} is not hex"));
    }
    if hex.len() < 8 {
        return Ok(None);
    }
    Ok(Some(hex[..8].to_ascii_lowercase()))
}

impl TxRow {
    fn into_tx(self) -> std::result::Result<Transaction, String> {
        let kind: TxKind = self.kind.parse().map_err(|e: Error| e.to_string())?;
        let status: TxStatus = self.status.parse().map_err(|e: Error| e.to_string())?;
        let input_selector = selector_from_input(&self.input)?;
        Ok(Transaction {
            tx_hash: self.tx_hash,
            timestamp: self.timestamp,
            from_addr: self.from.trim().to_ascii_lowercase(),
            to_addr: self.to.trim().to_ascii_lowercase(),
            value_wei: self.value_wei,
            kind,
            status,
            input_selector,
            counterpart_is_contract: self.counterpart_is_contract,
        })
    }

    fn from_tx(tx: &Transaction) -> Self {
        TxRow {
            tx_hash: tx.tx_hash.clone(),
            timestamp: tx.timestamp,
            from: tx.from_addr.clone(),
            to: tx.to_addr.clone(),
            value_wei: tx.value_wei,
            kind: match tx.kind {
                TxKind::Normal => "normal",
                TxKind::Internal => "internal",
            }
            .to_string(),
            status: match tx.status {
                TxStatus::Success => "success",
                TxStatus::Failed => "failed",
            }
            .to_string(),
            input: tx
                .input_selector
                .as_ref()
                .map(|s| format!("0x{s}"))
                .unwrap_or_default(),
            counterpart_is_contract: tx.counterpart_is_contract,
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads every row of a transaction file in file order; failed rows are kept.
pub fn parse_transactions(path: &Path, schema: TxSchema) -> Result<Vec<Transaction>> {
    match schema {
        TxSchema::Jsonl => parse_jsonl(path),
        TxSchema::Csv => parse_csv(path),
    }
}

fn parse_jsonl(path: &Path) -> Result<Vec<Transaction>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: TxRowJson =
            serde_json::from_str(&line).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let tx = row.into_row().and_then(TxRow::into_tx);
        out.push(tx.map_err(|m| parse_err(path, lineno, m))?);
    }
    Ok(out)
}

fn parse_csv(path: &Path) -> Result<Vec<Transaction>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<TxRow>().enumerate() {
        // header is line 1
        let lineno = i + 2;
        let row = rec.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        out.push(row.into_tx().map_err(|m| parse_err(path, lineno, m))?);
    }
    Ok(out)
}

/// Writes transactions in the jsonl schema, one object per line.
pub fn write_transactions_jsonl<W: Write>(mut w: W, txs: &[Transaction]) -> Result<()> {
    for tx in txs {
        serde_json::to_writer(&mut w, &TxRow::from_tx(tx))?;
        w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn write_transactions_csv<W: Write>(w: W, txs: &[Transaction]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for tx in txs {
        wtr.serialize(TxRow::from_tx(tx))?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_transactions(path: &Path, schema: TxSchema, txs: &[Transaction]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let w = BufWriter::new(file);
    match schema {
        TxSchema::Jsonl => write_transactions_jsonl(w, txs),
        TxSchema::Csv => write_transactions_csv(w, txs),
    }
}

/// One row of the labels file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub address: String,
    pub label: Label,
    pub ponzi_type: Option<PonziType>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelCsvRow {
    address: String,
    label: String,
    #[serde(default)]
    ponzi_type: String,
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<LabelCsvRow>().enumerate() {
        let lineno = i + 2;
        let row = rec.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let label: Label = row
            .label
            .parse()
            .map_err(|e: Error| parse_err(path, lineno, e.to_string()))?;
        let ponzi_type = if row.ponzi_type.trim().is_empty() {
            None
        } else {
            Some(
                row.ponzi_type
                    .parse::<PonziType>()
                    .map_err(|e| parse_err(path, lineno, e.to_string()))?,
            )
        };
        out.push(LabelRow {
            address: row.address.trim().to_ascii_lowercase(),
            label,
            ponzi_type,
        });
    }
    Ok(out)
}

pub fn write_labels<W: Write>(w: W, rows: &[LabelRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(LabelCsvRow {
            address: r.address.clone(),
            label: r.label.as_str().to_string(),
            ponzi_type: r
                .ponzi_type
                .map(|t| t.as_str().to_string())
                .unwrap_or_default(),
        })?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Reads `address,is_contract` rows into a lookup map.
pub fn read_address_types(path: &Path) -> Result<HashMap<String, bool>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let lineno = i + 2;
        let rec = rec.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 2 columns, got {}", rec.len()),
            ));
        }
        let flag = match rec[1].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("is_contract must be 0 or 1, got {other:?}"),
                ))
            }
        };
        out.insert(rec[0].trim().to_ascii_lowercase(), flag);
    }
    Ok(out)
}

pub fn write_address_types<W: Write>(w: W, map: &[(String, bool)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["address", "is_contract"])?;
    for (addr, flag) in map {
        wtr.write_record([addr.as_str(), if *flag { "1" } else { "0" }])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
