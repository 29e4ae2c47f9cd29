//! Synthetic labeled transaction traces for the four ponzi payout mechanisms and for
//! benign contracts.
//!
//! All value arithmetic is integer wei. Payouts are internal transactions that share the
//! hash and timestamp of the investment that triggered them and follow it in file order.
//! Ponzi arrivals slow down geometrically (boom, then bust); benign activity is a
//! stationary Poisson process over the whole duration.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    refine_dataset, write_address_types, write_labels, write_transactions_jsonl, ApplicationRecord,
    Dataset, Label, LabelRow, PonziType, Transaction, TxKind, TxStatus, ONE_DAY_SECS,
};

const GWEI: u128 = 1_000_000_000;
const PPM: u128 = 1_000_000;
const INVEST_SELECTOR: &str = "d0e30db0";
const WITHDRAW_SELECTOR: &str = "2e1a7d4d";
const PLAY_SELECTOR: &str = "e9fad8ee";
/// Ceiling on how far ponzi arrivals slow down, relative to the first gap.
const MAX_SLOWDOWN: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Chain,
    Tree,
    Handover,
    Waterfall,
    Benign,
}

impl Scheme {
    pub fn ponzi_type(self) -> Option<PonziType> {
        match self {
            Scheme::Chain => Some(PonziType::Chain),
            Scheme::Tree => Some(PonziType::Tree),
            Scheme::Handover => Some(PonziType::Handover),
            Scheme::Waterfall => Some(PonziType::Waterfall),
            Scheme::Benign => None,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Scheme::Chain),
            "tree" => Ok(Scheme::Tree),
            "handover" => Ok(Scheme::Handover),
            "waterfall" => Ok(Scheme::Waterfall),
            "benign" => Ok(Scheme::Benign),
            other => Err(Error::invalid(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Benign contract behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenignKind {
    /// Users deposit and later withdraw part of their own deposits.
    Wallet,
    /// Users place bets; winners are paid from a house bankroll.
    Game,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub scheme: Scheme,
    /// Joiners of a ponzi scheme, or activity events of a benign contract.
    pub n_investors: usize,
    /// Chain: each investor is owed `multiplier` times the investment.
    pub multiplier: f64,
    /// Share of each investment the contract keeps.
    pub fee_rate: f64,
    /// Handover: per-joiner growth of the entry toll.
    pub toll_growth: f64,
    pub toll0_eth: f64,
    /// Tree: share of the nearest ancestor; each further ancestor gets this share of
    /// the previous one and the root takes the rest.
    pub tree_decay: f64,
    /// Waterfall: per-round payment owed to each investor, as a fraction of their investment.
    pub waterfall_return: f64,
    /// Mean gap between the first two arrivals, seconds.
    pub mean_interarrival_secs: f64,
    /// Factor applied to the mean gap after every ponzi arrival (1 keeps it constant).
    pub arrival_slowdown: f64,
    /// Log-normal investment size in ether: `ln` mean and standard deviation.
    pub investment_mu: f64,
    pub investment_sigma: f64,
    /// Chance that a ponzi arrival reuses an earlier investor's address.
    pub repeat_investor_rate: f64,
    /// Benign: size of the recurring user pool relative to the number of events.
    pub users_per_event: f64,
    /// Benign: active span.
    pub duration_days: u32,
    pub benign_kind: BenignKind,
    /// Timestamp of the first transaction.
    pub start: i64,
    pub seed: u64,
}

impl SchemeParams {
    /// Mid-range settings for `scheme`. Benign contracts default to about eight events a day.
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        SchemeParams {
            scheme,
            n_investors: if scheme == Scheme::Benign { 720 } else { 40 },
            multiplier: 1.5,
            fee_rate: 0.05,
            toll_growth: 0.1,
            toll0_eth: 0.1,
            tree_decay: 0.5,
            waterfall_return: 0.1,
            mean_interarrival_secs: 2.0 * 3600.0,
            arrival_slowdown: 1.05,
            investment_mu: 0.0,
            investment_sigma: 0.8,
            repeat_investor_rate: 0.05,
            users_per_event: 0.25,
            duration_days: 90,
            benign_kind: BenignKind::Wallet,
            start: 1_500_000_000,
            seed,
        }
    }

    /// Randomized settings, drawn from `rng`, as used for corpora.
    pub fn sample<R: Rng>(scheme: Scheme, rng: &mut R) -> Self {
        let mut p = SchemeParams::new(scheme, rng.random());
        p.start = 1_450_000_000 + rng.random_range(0..100_000_000);
        p.investment_mu = rng.random_range(-2.0..1.0);
        p.investment_sigma = rng.random_range(0.4..1.2);
        p.fee_rate = rng.random_range(0.0..0.1);
        match scheme {
            Scheme::Benign => {
                p.duration_days = log_uniform(rng, 3.0, 400.0).round() as u32;
                p.n_investors = log_uniform(rng, 15.0, 600.0).round() as usize;
                p.mean_interarrival_secs =
                    p.duration_days as f64 * ONE_DAY_SECS as f64 / p.n_investors as f64;
                p.arrival_slowdown = 1.0;
                p.users_per_event = log_uniform(rng, 0.3, 3.0);
                p.benign_kind = if rng.random_bool(0.5) {
                    BenignKind::Wallet
                } else {
                    BenignKind::Game
                };
            }
            _ => {
                p.n_investors = log_uniform(rng, 12.0, 200.0).round() as usize;
                p.mean_interarrival_secs = log_uniform(rng, 900.0, 24.0 * 3600.0);
                p.arrival_slowdown = rng.random_range(1.0..1.06);
                p.multiplier = rng.random_range(1.2..2.0);
                p.toll_growth = rng.random_range(0.03..0.15);
                p.toll0_eth = log_uniform(rng, 0.01, 1.0);
                p.tree_decay = rng.random_range(0.3..=0.5);
                p.waterfall_return = rng.random_range(0.05..0.2);
                p.repeat_investor_rate = rng.random_range(0.0..0.35);
            }
        }
        p
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.n_investors == 0 {
            return bad("at least one investor or activity event is required");
        }
        if !(0.0..1.0).contains(&self.fee_rate) {
            return bad("fee_rate must lie in [0, 1)");
        }
        if !(self.mean_interarrival_secs > 0.0) || !(self.arrival_slowdown > 0.0) {
            return bad("arrival parameters must be positive");
        }
        if !(self.investment_sigma >= 0.0) {
            return bad("investment_sigma must be non-negative");
        }
        if self.scheme != Scheme::Benign && self.n_investors < 2 {
            return bad("a ponzi trace needs at least two investors to span a day");
        }
        Ok(())
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_hex<R: Rng>(rng: &mut R, nibbles: usize) -> String {
    let mut s = String::with_capacity(nibbles + 2);
    s.push_str("0x");
    while s.len() < nibbles + 2 {
        s.push_str(&format!("{:016x}", rng.random::<u64>()));
    }
    s.truncate(nibbles + 2);
    s
}

pub fn random_address<R: Rng>(rng: &mut R) -> String {
    random_hex(rng, 40)
}

/// Ether to wei, rounded to whole gwei.
pub fn eth_to_wei(eth: f64) -> u128 {
    ((eth * 1e9).round().max(0.0) as u128) * GWEI
}

fn ppm(x: f64) -> u128 {
    (x * PPM as f64).round().max(0.0) as u128
}

/// Transaction log of one contract under construction.
struct Trace {
    address: String,
    rng: ChaCha8Rng,
    txs: Vec<Transaction>,
    balance: u128,
}

impl Trace {
    fn new(p: &SchemeParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        Trace {
            address: random_address(&mut rng),
            rng,
            txs: Vec::new(),
            balance: 0,
        }
    }

    /// A successful call into the contract; returns its hash.
    fn incoming(&mut self, from: &str, value: u128, ts: i64, selector: &str) -> String {
        let hash = random_hex(&mut self.rng, 64);
        self.balance += value;
        self.txs.push(Transaction {
            tx_hash: hash.clone(),
            timestamp: ts,
            from_addr: from.to_string(),
            to_addr: self.address.clone(),
            value_wei: value,
            kind: TxKind::Normal,
            status: TxStatus::Success,
            input_selector: Some(selector.to_string()),
            counterpart_is_contract: false,
        });
        hash
    }

    /// An internal transfer out of the contract inside transaction `hash`.
    fn payout(&mut self, hash: &str, to: &str, value: u128, ts: i64) {
        if value == 0 {
            return;
        }
        assert!(value <= self.balance, "payout exceeds contract balance");
        self.balance -= value;
        self.txs.push(Transaction {
            tx_hash: hash.to_string(),
            timestamp: ts,
            from_addr: self.address.clone(),
            to_addr: to.to_string(),
            value_wei: value,
            kind: TxKind::Internal,
            status: TxStatus::Success,
            input_selector: None,
            counterpart_is_contract: false,
        });
    }

    fn investment(&mut self, p: &SchemeParams) -> u128 {
        let eth = LogNormal::new(p.investment_mu, p.investment_sigma)
            .expect("valid log-normal")
            .sample(&mut self.rng);
        eth_to_wei(eth).max(GWEI * 1_000_000)
    }

    /// Ponzi arrival times: exponential gaps whose mean grows by `arrival_slowdown`
    /// after every arrival, up to `MAX_SLOWDOWN` times the first. Stretched to span at
    /// least 1.5 days.
    fn arrivals(&mut self, p: &SchemeParams, n: usize) -> Vec<i64> {
        let mut mean = p.mean_interarrival_secs;
        let mut t = 0.0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                t += Exp::new(1.0 / mean)
                    .expect("positive rate")
                    .sample(&mut self.rng);
                mean = (mean * p.arrival_slowdown).min(MAX_SLOWDOWN * p.mean_interarrival_secs);
            }
            out.push(t);
        }
        let span = out.last().copied().unwrap_or(0.0);
        let min_span = 1.5 * ONE_DAY_SECS as f64;
        let stretch = if n > 1 && span < min_span {
            min_span / span.max(1.0)
        } else {
            1.0
        };
        let mut times: Vec<i64> = out
            .iter()
            .map(|&s| p.start + (s * stretch).round() as i64)
            .collect();
        strictly_increasing(&mut times);
        times
    }

    /// Address of the next ponzi joiner: fresh, or sometimes an earlier one.
    fn joiner(&mut self, p: &SchemeParams, earlier: &[String]) -> String {
        if !earlier.is_empty() && self.rng.random_bool(p.repeat_investor_rate.clamp(0.0, 1.0)) {
            let i = self.rng.random_range(0..earlier.len());
            earlier[i].clone()
        } else {
            random_address(&mut self.rng)
        }
    }

    fn finish(self, p: &SchemeParams) -> ApplicationRecord {
        let label = if p.scheme == Scheme::Benign {
            Label::NonPonzi
        } else {
            Label::Ponzi
        };
        ApplicationRecord::new(self.address, label, p.scheme.ponzi_type(), self.txs)
    }
}

/// Bumps ties forward so every event gets its own second.
fn strictly_increasing(times: &mut [i64]) {
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            times[i] = times[i - 1] + 1;
        }
    }
}

fn fee(value: u128, fee_rate: f64) -> u128 {
    value * ppm(fee_rate) / PPM
}

/// Chain-shaped: investors queue in arrival order, each owed `multiplier` times the
/// investment; the head of the queue is paid in full as soon as the fee-free pool
/// covers it.
pub fn gen_chain(p: &SchemeParams) -> Result<ApplicationRecord> {
    p.validate()?;
    if !(p.multiplier > 1.0) {
        return Err(Error::invalid("chain multiplier must exceed 1"));
    }
    let mut tr = Trace::new(p);
    let times = tr.arrivals(p, p.n_investors);
    let mult = ppm(p.multiplier);
    let mut queue: std::collections::VecDeque<(String, u128)> = Default::default();
    let mut joined = Vec::new();
    let mut pool = 0u128;
    for &ts in &times {
        let who = tr.joiner(p, &joined);
        let amount = tr.investment(p);
        let hash = tr.incoming(&who, amount, ts, INVEST_SELECTOR);
        pool += amount - fee(amount, p.fee_rate);
        queue.push_back((who.clone(), amount * mult / PPM));
        joined.push(who);
        while let Some((head, owed)) = queue.front().cloned() {
            if owed > pool {
                break;
            }
            pool -= owed;
            tr.payout(&hash, &head, owed, ts);
            queue.pop_front();
        }
    }
    Ok(tr.finish(p))
}

/// Ancestor shares of a tree investment: `decay, decay^2, ...` of `amount` (each
/// floored) to the ancestors nearest first, the rest to the last ancestor (the root).
pub fn tree_shares(amount: u128, ancestors: usize, decay: f64) -> Vec<u128> {
    if ancestors == 0 {
        return Vec::new();
    }
    let d = ppm(decay);
    let mut shares = Vec::with_capacity(ancestors);
    let mut share = amount;
    for _ in 0..ancestors - 1 {
        share = share * d / PPM;
        shares.push(share);
    }
    let given: u128 = shares.iter().sum();
    shares.push(amount - given);
    shares
}

/// Tree-shaped: each joiner attaches under a uniformly random earlier joiner and the
/// fee-free part of the investment is split along the ancestor chain.
pub fn gen_tree(p: &SchemeParams) -> Result<ApplicationRecord> {
    p.validate()?;
    if p.n_investors < 2 {
        return Err(Error::invalid("a tree scheme needs at least two investors"));
    }
    if !(p.tree_decay > 0.0 && p.tree_decay <= 0.5) {
        return Err(Error::invalid(
            "tree decay must lie in (0, 0.5] so shares never exceed the investment",
        ));
    }
    let mut tr = Trace::new(p);
    let times = tr.arrivals(p, p.n_investors);
    let mut nodes: Vec<(String, Option<usize>)> = Vec::new();
    let mut joined: Vec<String> = Vec::new();
    for &ts in &times {
        let who = tr.joiner(p, &joined);
        let amount = tr.investment(p);
        let hash = tr.incoming(&who, amount, ts, INVEST_SELECTOR);
        let parent = (!nodes.is_empty()).then(|| tr.rng.random_range(0..nodes.len()));
        let mut chain = Vec::new();
        let mut cur = parent;
        while let Some(i) = cur {
            chain.push(i);
            cur = nodes[i].1;
        }
        let shares = tree_shares(amount - fee(amount, p.fee_rate), chain.len(), p.tree_decay);
        for (&i, &s) in chain.iter().zip(&shares) {
            let to = nodes[i].0.clone();
            tr.payout(&hash, &to, s, ts);
        }
        nodes.push((who.clone(), parent));
        joined.push(who);
    }
    Ok(tr.finish(p))
}

/// Entry toll of joiner `i` (0-based), in wei.
pub fn handover_toll(toll0_eth: f64, growth: f64, i: usize) -> u128 {
    eth_to_wei(toll0_eth * (1.0 + growth).powi(i as i32))
}

/// Handover: joiner `i` pays a toll growing geometrically with `i`, forwarded in full
/// to joiner `i - 1`.
pub fn gen_handover(p: &SchemeParams) -> Result<ApplicationRecord> {
    p.validate()?;
    if !(p.toll_growth > 0.0) || !(p.toll0_eth > 0.0) {
        return Err(Error::invalid("handover toll and growth must be positive"));
    }
    let mut tr = Trace::new(p);
    let times = tr.arrivals(p, p.n_investors);
    let mut joined: Vec<String> = Vec::new();
    for (i, &ts) in times.iter().enumerate() {
        let who = tr.joiner(p, &joined);
        let toll = handover_toll(p.toll0_eth, p.toll_growth, i);
        let hash = tr.incoming(&who, toll, ts, INVEST_SELECTOR);
        if let Some(prev) = joined.last().cloned() {
            tr.payout(&hash, &prev, toll, ts);
        }
        joined.push(who);
    }
    Ok(tr.finish(p))
}

/// Waterfall payouts of one new fund: earlier investors in join order are each owed
/// `return_fraction` of their own investment until the fund runs out.
pub fn waterfall_round(fund: u128, investments: &[u128], return_fraction: f64) -> Vec<u128> {
    let r = ppm(return_fraction);
    let mut left = fund;
    let mut out = Vec::new();
    for &inv in investments {
        if left == 0 {
            break;
        }
        let pay = (inv * r / PPM).min(left);
        left -= pay;
        out.push(pay);
    }
    out
}

/// Waterfall: each new investment, minus fee, cascades over all earlier investors
/// from the first to the last or until exhausted.
pub fn gen_waterfall(p: &SchemeParams) -> Result<ApplicationRecord> {
    p.validate()?;
    if !(p.waterfall_return > 0.0) {
        return Err(Error::invalid("waterfall return must be positive"));
    }
    let mut tr = Trace::new(p);
    let times = tr.arrivals(p, p.n_investors);
    let mut who_list: Vec<String> = Vec::new();
    let mut amounts: Vec<u128> = Vec::new();
    for &ts in &times {
        let who = tr.joiner(p, &who_list);
        let amount = tr.investment(p);
        let hash = tr.incoming(&who, amount, ts, INVEST_SELECTOR);
        let pays = waterfall_round(
            amount - fee(amount, p.fee_rate),
            &amounts,
            p.waterfall_return,
        );
        for (k, &pay) in pays.iter().enumerate() {
            let to = who_list[k].clone();
            tr.payout(&hash, &to, pay, ts);
        }
        who_list.push(who);
        amounts.push(amount);
    }
    Ok(tr.finish(p))
}

/// Benign contract: an owner funds it, then `n_investors` events from a recurring user
/// pool arrive as a Poisson process over `duration_days`.
pub fn gen_benign(p: &SchemeParams) -> Result<ApplicationRecord> {
    p.validate()?;
    if p.duration_days < 2 {
        return Err(Error::invalid("benign duration must be at least two days"));
    }
    let mut tr = Trace::new(p);
    let span = p.duration_days as i64 * ONE_DAY_SECS;
    let owner = random_address(&mut tr.rng);
    let typical = eth_to_wei(p.investment_mu.exp());
    let bankroll = typical * 20 + GWEI;
    tr.incoming(&owner, bankroll, p.start, INVEST_SELECTOR);

    let pool_size = ((p.n_investors as f64 * p.users_per_event).round() as usize).max(3);
    let users: Vec<String> = (0..pool_size)
        .map(|_| random_address(&mut tr.rng))
        .collect();
    let mut deposits = vec![0u128; pool_size];
    // A Poisson process with n events on a window: n sorted uniform times.
    let mut times: Vec<i64> = (0..p.n_investors)
        .map(|_| p.start + 1 + tr.rng.random_range(0..span - 1))
        .collect();
    times.sort_unstable();
    strictly_increasing(&mut times);
    for &ts in &times {
        let u = tr.rng.random_range(0..pool_size);
        let amount = tr.investment(p);
        match p.benign_kind {
            BenignKind::Wallet => {
                if deposits[u] == 0 || tr.rng.random_bool(0.55) {
                    tr.incoming(&users[u], amount, ts, INVEST_SELECTOR);
                    deposits[u] += amount;
                } else {
                    let share = tr.rng.random_range(0.2..1.0);
                    let out = ((deposits[u] as f64) * share) as u128;
                    deposits[u] -= out;
                    let hash = tr.incoming(&users[u], 0, ts, WITHDRAW_SELECTOR);
                    tr.payout(&hash, &users[u], out, ts);
                }
            }
            BenignKind::Game => {
                let hash = tr.incoming(&users[u], amount, ts, PLAY_SELECTOR);
                if tr.rng.random_bool(0.45) {
                    let prize = amount * 19 / 10;
                    if prize <= tr.balance / 4 {
                        tr.payout(&hash, &users[u], prize, ts);
                    }
                }
            }
        }
    }
    // Owner top-up at the end of the active span keeps the lifetime at the full duration.
    let last = times.last().map_or(p.start, |&t| t + 1);
    tr.incoming(
        &owner,
        GWEI * 1_000_000,
        last.max(p.start + span),
        INVEST_SELECTOR,
    );
    Ok(tr.finish(p))
}

pub fn generate(p: &SchemeParams) -> Result<ApplicationRecord> {
    match p.scheme {
        Scheme::Chain => gen_chain(p),
        Scheme::Tree => gen_tree(p),
        Scheme::Handover => gen_handover(p),
        Scheme::Waterfall => gen_waterfall(p),
        Scheme::Benign => gen_benign(p),
    }
}

/// Counts of each scheme in a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub chain: usize,
    pub tree: usize,
    pub handover: usize,
    pub waterfall: usize,
    pub benign: usize,
    /// Probability of an extra failed copy of each incoming call in the written files.
    pub failed_rate: f64,
    /// Probability that a benign counterpart is itself a contract.
    pub contract_counterpart_rate: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    /// 60 ponzi (48 chain, 4 of each other type) and 940 benign contracts.
    fn default() -> Self {
        CorpusSpec {
            chain: 48,
            tree: 4,
            handover: 4,
            waterfall: 4,
            benign: 940,
            failed_rate: 0.02,
            contract_counterpart_rate: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub apps: Vec<ApplicationRecord>,
    pub params: Vec<SchemeParams>,
    /// Counterpart address to whether it is a contract.
    pub address_types: BTreeMap<String, bool>,
    /// Failed calls that only appear in the written transaction file.
    pub failed: Vec<Transaction>,
}

impl Corpus {
    pub fn generate(spec: &CorpusSpec) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let plan = [
            (Scheme::Chain, spec.chain),
            (Scheme::Tree, spec.tree),
            (Scheme::Handover, spec.handover),
            (Scheme::Waterfall, spec.waterfall),
            (Scheme::Benign, spec.benign),
        ];
        let mut apps = Vec::new();
        let mut params = Vec::new();
        let mut address_types = BTreeMap::new();
        let mut failed = Vec::new();
        for (scheme, count) in plan {
            for _ in 0..count {
                let p = SchemeParams::sample(scheme, &mut rng);
                let mut app = generate(&p)?;
                for tx in &mut app.txs {
                    let cp = if tx.from_addr == app.address {
                        &tx.to_addr
                    } else {
                        &tx.from_addr
                    };
                    let is_contract = *address_types.entry(cp.clone()).or_insert_with(|| {
                        scheme == Scheme::Benign && rng.random_bool(spec.contract_counterpart_rate)
                    });
                    tx.counterpart_is_contract = is_contract;
                }
                for tx in &app.txs {
                    if tx.kind == TxKind::Normal && rng.random_bool(spec.failed_rate) {
                        let mut f = tx.clone();
                        f.tx_hash = random_hex(&mut rng, 64);
                        f.status = TxStatus::Failed;
                        failed.push(f);
                    }
                }
                apps.push(app);
                params.push(p);
            }
        }
        Ok(Corpus {
            apps,
            params,
            address_types,
            failed,
        })
    }

    pub fn labels(&self) -> Vec<LabelRow> {
        self.apps
            .iter()
            .map(|a| LabelRow {
                address: a.address.clone(),
                label: a.label,
                ponzi_type: a.ponzi_type,
            })
            .collect()
    }

    /// The refined dataset, as ingestion of the written files would produce it.
    pub fn dataset(&self) -> Result<Dataset> {
        refine_dataset(self.apps.clone())
    }

    /// Every transaction in file order: applications in generation order, each
    /// followed by its failed calls.
    pub fn transactions(&self) -> Vec<Transaction> {
        let mut failed_by_app: BTreeMap<&str, Vec<&Transaction>> = BTreeMap::new();
        for f in &self.failed {
            failed_by_app.entry(f.to_addr.as_str()).or_default().push(f);
        }
        let mut out = Vec::new();
        for app in &self.apps {
            out.extend(app.txs.iter().cloned());
            if let Some(fs) = failed_by_app.get(app.address.as_str()) {
                out.extend(fs.iter().map(|&f| f.clone()));
            }
        }
        out
    }

    /// Writes `transactions.jsonl`, `labels.csv` and `address_types.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            Ok(BufWriter::new(
                File::create(&path).map_err(|e| Error::io(&path, e))?,
            ))
        };
        write_transactions_jsonl(create("transactions.jsonl")?, &self.transactions())?;
        write_labels(create("labels.csv")?, &self.labels())?;
        let types: Vec<(String, bool)> = self
            .address_types
            .iter()
            .map(|(a, &c)| (a.clone(), c))
            .collect();
        write_address_types(create("address_types.csv")?, &types)?;
        Ok(())
    }
}
