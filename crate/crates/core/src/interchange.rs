//! JSON documents for models, update models and scenarios.
//!
//! Worlds, agents, propositions and actions are referred to by name. A
//! relation is written either as its equivalence classes or as explicit
//! pairs; the correctness of an agent either as the set of worlds where it is
//! correct or as an explicit hope relation. Explicit relations are checked
//! against the KH conditions when the document is turned into a model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::formula::{parse, ParseError, Printer, UpdateRegistry};
use crate::kripke::{world_set, KripkeModel, ModelError, RawModel, RawModelError, Relation, Signature};
use crate::partition::{Partition, PartitionError};
use crate::scenarios::Scenario;
use crate::update::{UpdateError, UpdateModel};

#[derive(Debug, thiserror::Error)]
pub enum InterchangeError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Raw(#[from] RawModelError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error("{what}: {source}")]
    Partition { what: String, source: PartitionError },
    #[error("formula `{text}`: {source}")]
    Parse { text: String, source: ParseError },
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub agents: Vec<String>,
    pub props: Vec<String>,
    pub worlds: Vec<String>,
    /// World to the propositions true there; absent worlds make nothing true.
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
    /// Agent to classes of worlds it cannot tell apart.
    #[serde(rename = "K")]
    pub knowledge: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<BTreeMap<String, Vec<String>>>,
    /// Agent to explicit hope pairs, as an alternative to `correct`.
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hope: Option<BTreeMap<String, Vec<(String, String)>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateDoc {
    pub name: String,
    pub actions: Vec<String>,
    /// Action to agent to hope update formula.
    pub theta: BTreeMap<String, BTreeMap<String, String>>,
    /// Action to proposition to substitute; unlisted propositions keep their value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sigma: BTreeMap<String, BTreeMap<String, String>>,
    /// Agent to the classes of indistinguishable actions.
    #[serde(rename = "KU")]
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionDoc {
    pub world: String,
    pub formula: String,
    pub expected: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub name: String,
    pub summary: String,
    pub model: ModelDoc,
    pub updates: Vec<UpdateDoc>,
    pub assertions: Vec<AssertionDoc>,
}

fn names_of(m: &KripkeModel, ws: impl IntoIterator<Item = usize>) -> Vec<String> {
    ws.into_iter().map(|w| m.world_name(w).to_string()).collect()
}

impl ModelDoc {
    pub fn from_model(m: &KripkeModel) -> Self {
        let sig = m.signature();
        let valuation = (0..m.world_count())
            .map(|w| (m.world_name(w).to_string(), m.true_props(w).map(|p| sig.prop_name(p).to_string()).collect()))
            .collect();
        let knowledge = sig
            .agents()
            .map(|i| {
                let classes = m.knowledge(i).classes().iter().map(|c| names_of(m, c.iter().copied())).collect();
                (sig.agent_name(i).to_string(), classes)
            })
            .collect();
        let correct =
            sig.agents().map(|i| (sig.agent_name(i).to_string(), names_of(m, m.correct_set(i).ones()))).collect();
        ModelDoc {
            agents: sig.agent_names().to_vec(),
            props: sig.prop_names().to_vec(),
            worlds: m.world_names().to_vec(),
            valuation,
            knowledge,
            correct: Some(correct),
            hope: None,
        }
    }

    /// The candidate relations described by the document, before any KH check.
    pub fn to_raw(&self) -> Result<RawModel, InterchangeError> {
        let sig = Arc::new(Signature::new(self.agents.iter().map(String::as_str), self.props.iter().map(String::as_str))?);
        let n = self.worlds.len();
        let mut index = HashMap::new();
        for (k, w) in self.worlds.iter().enumerate() {
            if index.insert(w.as_str(), k).is_some() {
                return Err(ModelError::DuplicateName(w.clone()).into());
            }
        }
        let world = |w: &str| index.get(w).copied().ok_or_else(|| ModelError::UnknownWorld(w.to_string()));

        let mut valuation = vec![world_set(n, []); sig.prop_count()];
        for (w, props) in &self.valuation {
            let x = world(w)?;
            for p in props {
                let p = sig.prop(p).ok_or_else(|| ModelError::UnknownProp(p.clone()))?;
                valuation[p.0].insert(x);
            }
        }

        let classes = |classes: &Vec<Vec<String>>| -> Result<Relation, InterchangeError> {
            let mut rel = Relation::new();
            for c in classes {
                let members = c.iter().map(|w| world(w)).collect::<Result<Vec<_>, _>>()?;
                for &x in &members {
                    rel.extend(members.iter().map(|&y| (x, y)));
                }
            }
            Ok(rel)
        };
        let pairs = |pairs: &Vec<(String, String)>| -> Result<Relation, InterchangeError> {
            pairs.iter().map(|(x, y)| Ok((world(x)?, world(y)?))).collect()
        };
        check_keys("K", self.knowledge.keys(), &sig)?;
        let mut knowledge = Vec::new();
        for a in &self.agents {
            let doc = self.knowledge.get(a).ok_or_else(|| shape(format!("no K classes for agent `{a}`")))?;
            knowledge.push(classes(doc)?);
        }

        let hope = match (&self.correct, &self.hope) {
            (Some(correct), None) => {
                check_keys("correct", correct.keys(), &sig)?;
                let mut hope = Vec::new();
                for (i, a) in self.agents.iter().enumerate() {
                    let c: BTreeSet<usize> = correct
                        .get(a)
                        .map(|ws| ws.iter().map(|w| world(w)).collect::<Result<_, _>>())
                        .transpose()?
                        .unwrap_or_default();
                    hope.push(knowledge[i].iter().copied().filter(|(x, y)| c.contains(x) && c.contains(y)).collect());
                }
                hope
            }
            (None, Some(hope)) => {
                check_keys("H", hope.keys(), &sig)?;
                self.agents
                    .iter()
                    .map(|a| hope.get(a).map(&pairs).unwrap_or_else(|| Ok(Relation::new())))
                    .collect::<Result<_, _>>()?
            }
            _ => return Err(shape("give exactly one of `correct` and `H`".into())),
        };
        Ok(RawModel { sig, worlds: self.worlds.clone(), valuation, knowledge, hope })
    }

    /// Checks the KH conditions and converts to a model.
    pub fn to_model(&self) -> Result<KripkeModel, InterchangeError> {
        Ok(self.to_raw()?.into_model()?)
    }
}

fn shape(msg: String) -> InterchangeError {
    InterchangeError::Shape(msg)
}

fn check_keys<'a>(what: &str, keys: impl Iterator<Item = &'a String>, sig: &Signature) -> Result<(), InterchangeError> {
    for k in keys {
        if sig.agent(k).is_none() {
            return Err(shape(format!("{what}: unknown agent `{k}`")));
        }
    }
    Ok(())
}

impl UpdateDoc {
    pub fn from_model(u: &UpdateModel, sig: &Signature) -> Self {
        let printer = Printer::new(sig);
        let actions = u.action_names().to_vec();
        let theta = (0..u.action_count())
            .map(|e| {
                let row = sig.agents().map(|i| (sig.agent_name(i).to_string(), printer.print(u.theta(e, i)))).collect();
                (actions[e].clone(), row)
            })
            .collect();
        let sigma = (0..u.action_count())
            .filter(|&e| !u.overrides(e).is_empty())
            .map(|e| {
                let row =
                    u.overrides(e).iter().map(|(p, f)| (sig.prop_name(*p).to_string(), printer.print(f))).collect();
                (actions[e].clone(), row)
            })
            .collect();
        let relations = sig
            .agents()
            .map(|i| {
                let classes =
                    u.relation(i).classes().iter().map(|c| c.iter().map(|&e| actions[e].clone()).collect()).collect();
                (sig.agent_name(i).to_string(), classes)
            })
            .collect();
        UpdateDoc { name: u.name().to_string(), actions, theta, sigma, relations }
    }

    /// Builds the update model over `sig`. Formulas may mention the update
    /// models already in `known`.
    pub fn to_model(&self, sig: &Signature, known: &UpdateRegistry) -> Result<UpdateModel, InterchangeError> {
        let f = |text: &str| {
            parse(text, sig, known).map_err(|source| InterchangeError::Parse { text: text.to_string(), source })
        };
        let action = |name: &str| {
            self.actions.iter().position(|a| a == name).ok_or_else(|| UpdateError::UnknownAction(name.to_string()))
        };
        for name in self.theta.keys().chain(self.sigma.keys()) {
            action(name)?;
        }
        check_keys("KU", self.relations.keys(), sig)?;

        let mut theta = Vec::new();
        for a in &self.actions {
            let row = self.theta.get(a).ok_or_else(|| shape(format!("no hope update formulas for action `{a}`")))?;
            check_keys("theta", row.keys(), sig)?;
            let mut formulas = Vec::new();
            for i in sig.agents() {
                let name = sig.agent_name(i);
                let text = row.get(name).ok_or_else(|| shape(format!("action `{a}` has no formula for `{name}`")))?;
                formulas.push(f(text)?);
            }
            theta.push(formulas);
        }

        let mut sigma = vec![BTreeMap::new(); self.actions.len()];
        for (a, row) in &self.sigma {
            for (p, text) in row {
                let p = sig.prop(p).ok_or_else(|| ModelError::UnknownProp(p.clone()))?;
                sigma[action(a)?].insert(p, f(text)?);
            }
        }

        let mut relations = Vec::new();
        for i in sig.agents() {
            let name = sig.agent_name(i);
            let classes = self.relations.get(name).ok_or_else(|| shape(format!("no KU classes for agent `{name}`")))?;
            let classes = classes
                .iter()
                .map(|c| c.iter().map(|e| action(e)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let p = Partition::from_classes(self.actions.len(), &classes)
                .map_err(|source| InterchangeError::Partition { what: format!("relation of `{name}`"), source })?;
            relations.push(p);
        }
        Ok(UpdateModel::new(self.name.clone(), self.actions.clone(), theta, sigma, relations)?)
    }
}

impl ScenarioDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        let sig = s.model.signature();
        ScenarioDoc {
            name: s.name.clone(),
            summary: s.summary.clone(),
            model: ModelDoc::from_model(&s.model),
            updates: s.updates.models().map(|u| UpdateDoc::from_model(u, sig)).collect(),
            assertions: s
                .assertions
                .iter()
                .map(|a| AssertionDoc {
                    world: a.world.clone(),
                    formula: a.formula.clone(),
                    expected: a.expected,
                    note: a.note.clone(),
                })
                .collect(),
        }
    }
}

fn read(path: &Path) -> Result<String, InterchangeError> {
    std::fs::read_to_string(path).map_err(|source| InterchangeError::Io { path: path.display().to_string(), source })
}

pub fn read_model_doc(path: &Path) -> Result<ModelDoc, InterchangeError> {
    Ok(serde_json::from_str(&read(path)?)?)
}

pub fn load_model(path: &Path) -> Result<KripkeModel, InterchangeError> {
    read_model_doc(path)?.to_model()
}

pub fn read_update_doc(path: &Path) -> Result<UpdateDoc, InterchangeError> {
    Ok(serde_json::from_str(&read(path)?)?)
}

/// Loads update models in order; each may refer to the ones before it.
pub fn load_updates(paths: &[impl AsRef<Path>], sig: &Signature) -> Result<UpdateRegistry, InterchangeError> {
    let mut reg = UpdateRegistry::new();
    for p in paths {
        let u = read_update_doc(p.as_ref())?.to_model(sig, &reg)?;
        reg.insert(Arc::new(u));
    }
    Ok(reg)
}

pub fn model_json(m: &KripkeModel) -> String {
    serde_json::to_string_pretty(&ModelDoc::from_model(m)).expect("model documents serialize")
}

pub fn save_model(m: &KripkeModel, path: &Path) -> Result<(), InterchangeError> {
    std::fs::write(path, model_json(m) + "\n")
        .map_err(|source| InterchangeError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{builtin_scenarios, scenario};

    #[test]
    fn scenario_models_round_trip() {
        for s in builtin_scenarios() {
            let doc = ModelDoc::from_model(&s.model);
            let text = serde_json::to_string(&doc).unwrap();
            let back: ModelDoc = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_model().unwrap(), s.model);
            for u in s.updates.models() {
                let d = UpdateDoc::from_model(u, s.model.signature());
                assert_eq!(&d.to_model(s.model.signature(), &UpdateRegistry::new()).unwrap(), &**u);
            }
        }
    }

    #[test]
    fn explicit_hope_is_validated() {
        let mut doc = ModelDoc::from_model(&scenario("fail-safe").unwrap().model);
        doc.correct = None;
        doc.hope = Some(BTreeMap::from([("a".to_string(), vec![("00".into(), "01".into())])]));
        let raw = doc.to_raw().unwrap();
        let report = crate::kripke::validate(&raw);
        assert!(report.has(crate::kripke::Condition::OneHope) || report.has(crate::kripke::Condition::ShiftSerial));
        assert!(doc.to_model().is_err());
    }

    #[test]
    fn missing_theta_entry_is_an_error() {
        let s = scenario("private-correction").unwrap();
        let mut d = UpdateDoc::from_model(s.updates.get("U").unwrap(), s.model.signature());
        d.theta.get_mut("noc").unwrap().remove("b");
        assert!(d.to_model(s.model.signature(), &UpdateRegistry::new()).is_err());
    }
}
