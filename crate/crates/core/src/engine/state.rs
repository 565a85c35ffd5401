//! Engine state carried between runs, and its JSON file form.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{json, Value};

use super::gag::{key_from_json, key_to_json, GlobalGraph};
use super::units::Layout;
use crate::analyzer::{AnalysisGraph, NodeKey};
use crate::domain::DomainKind;
use crate::error::{Error, Result};
use crate::ir::{sym, PredId, ProgramIndex, Sym};

pub const STATE_VERSION: u64 = 1;

/// Clause changes of a unit not yet taken into account by its local graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pending {
    pub added: BTreeSet<PredId>,
    pub deleted: BTreeSet<PredId>,
}

impl Pending {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineState {
    pub domain: DomainKind,
    pub layout: Layout,
    /// Clause ids and declarations of the analyzed program version.
    pub index: ProgramIndex,
    pub entries: BTreeSet<NodeKey>,
    pub pending: BTreeMap<Sym, Pending>,
    pub queue: BTreeSet<NodeKey>,
    pub gag: GlobalGraph,
    pub lags: BTreeMap<Sym, AnalysisGraph>,
}

impl EngineState {
    pub fn new(domain: DomainKind, layout: Layout) -> EngineState {
        EngineState {
            domain,
            layout,
            index: ProgramIndex::default(),
            entries: BTreeSet::new(),
            pending: BTreeMap::new(),
            queue: BTreeSet::new(),
            gag: GlobalGraph::default(),
            lags: BTreeMap::new(),
        }
    }

    pub fn fingerprint(&self) -> String {
        self.index.fingerprint()
    }

    pub fn to_json(&self) -> Value {
        let keys = |ks: &BTreeSet<NodeKey>| ks.iter().map(key_to_json).collect::<Vec<_>>();
        let preds = |ps: &BTreeSet<PredId>| ps.iter().map(|p| serde_json::to_value(p).expect("pred id")).collect::<Vec<_>>();
        let pending: serde_json::Map<String, Value> = self
            .pending
            .iter()
            .map(|(u, p)| (u.to_string(), json!({"added": preds(&p.added), "deleted": preds(&p.deleted)})))
            .collect();
        let lags: serde_json::Map<String, Value> = self.lags.iter().map(|(u, g)| (u.to_string(), g.to_json())).collect();
        json!({
            "version": STATE_VERSION,
            "domain": self.domain.to_string(),
            "layout": self.layout.to_string(),
            "fingerprint": self.fingerprint(),
            "index": serde_json::to_value(&self.index).expect("index"),
            "entries": keys(&self.entries),
            "pending": pending,
            "queue": keys(&self.queue),
            "gag": self.gag.to_json(),
            "lags": lags,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("state serializes");
        s.push('\n');
        s
    }

    pub fn from_json(v: &Value) -> Result<EngineState> {
        let bad = |what: &str| Error::State(format!("missing or malformed `{what}`"));
        let version = v["version"].as_u64().ok_or_else(|| bad("version"))?;
        if version != STATE_VERSION {
            return Err(Error::StateVersion { found: version, expected: STATE_VERSION });
        }
        let domain: DomainKind =
            v["domain"].as_str().ok_or_else(|| bad("domain"))?.parse().map_err(|_| bad("domain"))?;
        let layout: Layout = v["layout"].as_str().ok_or_else(|| bad("layout"))?.parse().map_err(|_| bad("layout"))?;
        let index: ProgramIndex = serde_json::from_value(v["index"].clone()).map_err(|_| bad("index"))?;
        if v["fingerprint"].as_str() != Some(index.fingerprint().as_str()) {
            return Err(Error::State("fingerprint does not match the stored program index".into()));
        }
        let keys = |f: &str| -> Result<BTreeSet<NodeKey>> {
            v[f].as_array().ok_or_else(|| bad(f))?.iter().map(|k| key_from_json(domain, k)).collect()
        };
        let preds = |p: &Value, f: &str| -> Result<BTreeSet<PredId>> {
            serde_json::from_value(p[f].clone()).map_err(|_| bad("pending"))
        };
        let mut pending = BTreeMap::new();
        for (u, p) in v["pending"].as_object().ok_or_else(|| bad("pending"))? {
            pending.insert(sym(u), Pending { added: preds(p, "added")?, deleted: preds(p, "deleted")? });
        }
        let mut lags = BTreeMap::new();
        for (u, g) in v["lags"].as_object().ok_or_else(|| bad("lags"))? {
            lags.insert(sym(u), AnalysisGraph::from_json(domain, g)?);
        }
        Ok(EngineState {
            domain,
            layout,
            index,
            entries: keys("entries")?,
            pending,
            queue: keys("queue")?,
            gag: GlobalGraph::from_json(domain, &v["gag"])?,
            lags,
        })
    }
}

pub fn save_state(state: &EngineState, path: &Path) -> Result<()> {
    std::fs::write(path, state.to_json_string())?;
    Ok(())
}

/// Reads a state file, checking it was produced for `domain` if given.
pub fn load_state(path: &Path, domain: Option<DomainKind>) -> Result<EngineState> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::State(format!("corrupt state file: {e}")))?;
    let s = EngineState::from_json(&v)?;
    if let Some(d) = domain {
        if d != s.domain {
            return Err(Error::DomainMismatch { expected: d.to_string(), found: s.domain.to_string() });
        }
    }
    Ok(s)
}
