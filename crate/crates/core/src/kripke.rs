//! Finite Kripke models for knowledge and hope.
//!
//! A model in class KH is stored in normal form: per agent a partition of the
//! worlds (the knowledge relation) and the set of worlds where the agent is
//! correct. The hope relation is derived as the restriction of the knowledge
//! relation to correct worlds. Arbitrary candidate relations go through
//! [`RawModel`] and [`validate`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::partition::Partition;

pub type WorldSet = FixedBitSet;
pub type Relation = BTreeSet<(usize, usize)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldId(pub usize);

pub const KEYWORDS: &[&str] = &["true", "false", "K", "Kh", "H", "Hh", "B"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown proposition `{0}`")]
    UnknownProp(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("a model needs at least one world")]
    NoWorlds,
    #[error("{0}")]
    Shape(String),
}

/// The agents and atomic propositions a model or formula is built over.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    agents: Vec<String>,
    props: Vec<String>,
}

fn is_agent_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_prop_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

fn check_unique<'a>(names: impl IntoIterator<Item = &'a String>) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(ModelError::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

impl Signature {
    pub fn new<A, P>(agents: A, props: P) -> Result<Self, ModelError>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        let agents: Vec<String> = agents.into_iter().map(Into::into).collect();
        let props: Vec<String> = props.into_iter().map(Into::into).collect();
        if let Some(bad) = agents.iter().find(|a| !is_agent_name(a)) {
            return Err(ModelError::InvalidName(bad.clone()));
        }
        if let Some(bad) = props.iter().find(|p| !is_prop_name(p)) {
            return Err(ModelError::InvalidName(bad.clone()));
        }
        check_unique(&agents)?;
        check_unique(&props)?;
        Ok(Signature { agents, props })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn prop_count(&self) -> usize {
        self.props.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn props(&self) -> impl Iterator<Item = PropId> {
        (0..self.props.len()).map(PropId)
    }

    pub fn agent(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name).map(AgentId)
    }

    pub fn prop(&self, name: &str) -> Option<PropId> {
        self.props.iter().position(|p| p == name).map(PropId)
    }

    pub fn agent_name(&self, i: AgentId) -> &str {
        &self.agents[i.0]
    }

    pub fn prop_name(&self, p: PropId) -> &str {
        &self.props[p.0]
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn prop_names(&self) -> &[String] {
        &self.props
    }

    /// Interns a proposition, appending it if it is new.
    pub fn intern_prop(&mut self, name: &str) -> Result<PropId, ModelError> {
        if let Some(p) = self.prop(name) {
            return Ok(p);
        }
        if !is_prop_name(name) {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        self.props.push(name.to_string());
        Ok(PropId(self.props.len() - 1))
    }
}

/// A model of class KH in normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    sig: Arc<Signature>,
    worlds: Vec<String>,
    index: HashMap<String, usize>,
    valuation: Vec<WorldSet>,
    knowledge: Vec<Partition>,
    correct: Vec<WorldSet>,
}

pub(crate) fn world_set(len: usize, members: impl IntoIterator<Item = usize>) -> WorldSet {
    let mut s = FixedBitSet::with_capacity(len);
    s.extend(members);
    s
}

impl KripkeModel {
    /// Assembles a model from its normal form. Every such model is in KH.
    pub fn new(
        sig: Arc<Signature>,
        worlds: Vec<String>,
        valuation: Vec<WorldSet>,
        knowledge: Vec<Partition>,
        correct: Vec<WorldSet>,
    ) -> Result<Self, ModelError> {
        if worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let n = worlds.len();
        if let Some(bad) = worlds.iter().find(|w| !is_world_name(w)) {
            return Err(ModelError::InvalidName(bad.clone()));
        }
        check_unique(&worlds)?;
        if valuation.len() != sig.prop_count() || valuation.iter().any(|s| s.len() != n) {
            return Err(ModelError::Shape("valuation does not match signature and worlds".into()));
        }
        if knowledge.len() != sig.agent_count() || knowledge.iter().any(|p| p.len() != n) {
            return Err(ModelError::Shape("one knowledge partition per agent required".into()));
        }
        if correct.len() != sig.agent_count() || correct.iter().any(|s| s.len() != n) {
            return Err(ModelError::Shape("one correct-set per agent required".into()));
        }
        let index = worlds.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(KripkeModel { sig, worlds, index, valuation, knowledge, correct })
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world_names(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_name(&self, w: usize) -> &str {
        &self.worlds[w]
    }

    pub fn world(&self, name: &str) -> Result<usize, ModelError> {
        self.index.get(name).copied().ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    pub fn agent(&self, name: &str) -> Result<AgentId, ModelError> {
        self.sig.agent(name).ok_or_else(|| ModelError::UnknownAgent(name.to_string()))
    }

    fn check(&self, w: WorldId, i: AgentId) -> Result<(), ModelError> {
        if w.0 >= self.worlds.len() {
            return Err(ModelError::UnknownWorld(format!("#{}", w.0)));
        }
        if i.0 >= self.sig.agent_count() {
            return Err(ModelError::UnknownAgent(format!("#{}", i.0)));
        }
        Ok(())
    }

    pub fn all_worlds(&self) -> WorldSet {
        let mut s = FixedBitSet::with_capacity(self.worlds.len());
        s.insert_range(..);
        s
    }

    pub fn valuation(&self, p: PropId) -> &WorldSet {
        &self.valuation[p.0]
    }

    pub fn valuations(&self) -> &[WorldSet] {
        &self.valuation
    }

    pub fn knowledge(&self, i: AgentId) -> &Partition {
        &self.knowledge[i.0]
    }

    pub fn knowledge_partitions(&self) -> &[Partition] {
        &self.knowledge
    }

    /// `C_i`: the worlds where agent `i` is correct, i.e. `H_i(w)` is non-empty.
    pub fn correct_set(&self, i: AgentId) -> &WorldSet {
        &self.correct[i.0]
    }

    pub fn correct_sets(&self) -> &[WorldSet] {
        &self.correct
    }

    pub fn is_correct(&self, w: WorldId, i: AgentId) -> Result<bool, ModelError> {
        self.check(w, i)?;
        Ok(self.correct[i.0].contains(w.0))
    }

    pub fn k_class(&self, w: WorldId, i: AgentId) -> Result<Vec<WorldId>, ModelError> {
        self.check(w, i)?;
        Ok(self.knowledge[i.0].class(w.0).iter().map(|&v| WorldId(v)).collect())
    }

    pub fn h_class(&self, w: WorldId, i: AgentId) -> Result<Vec<WorldId>, ModelError> {
        self.check(w, i)?;
        Ok(self.hope_successors(i, w.0).map(WorldId).collect())
    }

    pub(crate) fn hope_successors(&self, i: AgentId, w: usize) -> impl Iterator<Item = usize> + '_ {
        let correct = &self.correct[i.0];
        let class: &[usize] = if correct.contains(w) { self.knowledge[i.0].class(w) } else { &[] };
        class.iter().copied().filter(move |&v| correct.contains(v))
    }

    pub fn knowledge_relation(&self, i: AgentId) -> Relation {
        self.knowledge[i.0].pairs()
    }

    /// `H_i` reconstructed from the correct-set view.
    pub fn hope_relation(&self, i: AgentId) -> Relation {
        let c = &self.correct[i.0];
        self.knowledge[i.0]
            .pairs()
            .into_iter()
            .filter(|&(w, v)| c.contains(w) && c.contains(v))
            .collect()
    }

    pub fn true_props(&self, w: usize) -> impl Iterator<Item = PropId> + '_ {
        self.sig.props().filter(move |p| self.valuation[p.0].contains(w))
    }

    /// The same model with every correct-set replaced.
    pub fn with_correct_sets(&self, correct: Vec<WorldSet>) -> Self {
        assert_eq!(correct.len(), self.correct.len());
        KripkeModel { correct, ..self.clone() }
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            sig: self.sig.clone(),
            worlds: self.worlds.clone(),
            valuation: self.valuation.clone(),
            knowledge: self.sig.agents().map(|i| self.knowledge_relation(i)).collect(),
            hope: self.sig.agents().map(|i| self.hope_relation(i)).collect(),
        }
    }

    /// Renames worlds (and reorders them) so that world `x` of the result is
    /// world `order[x]` of `self`.
    pub fn reordered(&self, order: &[usize], names: Vec<String>) -> Result<Self, ModelError> {
        let n = order.len();
        let pick = |s: &WorldSet| world_set(n, (0..n).filter(|&x| s.contains(order[x])));
        KripkeModel::new(
            self.sig.clone(),
            names,
            self.valuation.iter().map(pick).collect(),
            self.knowledge.iter().map(|p| p.permuted(order)).collect(),
            self.correct.iter().map(pick).collect(),
        )
    }
}

pub(crate) fn is_world_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '"')
}

/// A candidate model with explicit, unchecked knowledge and hope relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawModel {
    pub sig: Arc<Signature>,
    pub worlds: Vec<String>,
    pub valuation: Vec<WorldSet>,
    pub knowledge: Vec<Relation>,
    pub hope: Vec<Relation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    NonEmpty,
    KReflexive,
    KSymmetric,
    KTransitive,
    ShiftSerial,
    HopeInKnowledge,
    OneHope,
    /// Follows from the conditions above; reported as a cross-check.
    HopeSymmetric,
    /// Follows from the conditions above; reported as a cross-check.
    HopeTransitive,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::NonEmpty => "non-empty worlds",
            Condition::KReflexive => "K reflexive",
            Condition::KSymmetric => "K symmetric",
            Condition::KTransitive => "K transitive",
            Condition::ShiftSerial => "H shift-serial",
            Condition::HopeInKnowledge => "HinK",
            Condition::OneHope => "oneH",
            Condition::HopeSymmetric => "H symmetric",
            Condition::HopeTransitive => "H transitive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub agent: Option<AgentId>,
    pub witness: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    names: Vec<String>,
    agents: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn witnesses(&self, condition: Condition) -> Vec<Vec<&str>> {
        self.violations
            .iter()
            .filter(|v| v.condition == condition)
            .map(|v| v.witness.iter().map(|&w| self.names[w].as_str()).collect())
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "model is in KH");
        }
        for v in &self.violations {
            let witness: Vec<&str> = v.witness.iter().map(|&w| self.names[w].as_str()).collect();
            match v.agent {
                Some(i) => writeln!(f, "{} violated for agent {}: ({})", v.condition, self.agents[i.0], witness.join(", "))?,
                None => writeln!(f, "{} violated", v.condition)?,
            }
        }
        Ok(())
    }
}

fn successors(rel: &Relation, w: usize) -> impl Iterator<Item = usize> + '_ {
    rel.range((w, 0)..=(w, usize::MAX)).map(|&(_, v)| v)
}

/// Checks every KH condition on a candidate model and lists each failure
/// together with the worlds witnessing it.
pub fn validate(raw: &RawModel) -> ValidationReport {
    let n = raw.worlds.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation { condition: Condition::NonEmpty, agent: None, witness: vec![] });
    }
    for i in 0..raw.sig.agent_count() {
        let agent = Some(AgentId(i));
        let k = raw.knowledge.get(i).cloned().unwrap_or_default();
        let h = raw.hope.get(i).cloned().unwrap_or_default();
        let mut push = |condition, witness: Vec<usize>| out.push(Violation { condition, agent, witness });

        for w in 0..n {
            if !k.contains(&(w, w)) {
                push(Condition::KReflexive, vec![w]);
            }
        }
        for &(w, v) in &k {
            if !k.contains(&(v, w)) {
                push(Condition::KSymmetric, vec![w, v]);
            }
        }
        for &(w, v) in &k {
            for u in successors(&k, v) {
                if !k.contains(&(w, u)) {
                    push(Condition::KTransitive, vec![w, v, u]);
                }
            }
        }
        for &(w, v) in &h {
            if successors(&h, v).next().is_none() {
                push(Condition::ShiftSerial, vec![w, v]);
            }
        }
        for &(w, v) in &h {
            if !k.contains(&(w, v)) {
                push(Condition::HopeInKnowledge, vec![w, v]);
            }
        }
        let live: Vec<bool> = (0..n).map(|w| successors(&h, w).next().is_some()).collect();
        for &(w, v) in &k {
            if w < n && v < n && live[w] && live[v] && !h.contains(&(w, v)) {
                push(Condition::OneHope, vec![w, v]);
            }
        }
        for &(w, v) in &h {
            if !h.contains(&(v, w)) {
                push(Condition::HopeSymmetric, vec![w, v]);
            }
        }
        for &(w, v) in &h {
            for u in successors(&h, v) {
                if !h.contains(&(w, u)) {
                    push(Condition::HopeTransitive, vec![w, v, u]);
                }
            }
        }
    }
    ValidationReport { violations: out, names: raw.worlds.clone(), agents: raw.sig.agent_names().to_vec() }
}

impl RawModel {
    /// Validates and converts to normal form.
    pub fn into_model(self) -> Result<KripkeModel, RawModelError> {
        let report = validate(&self);
        if !report.is_empty() {
            return Err(RawModelError::Invalid(report));
        }
        let n = self.worlds.len();
        let knowledge = self
            .knowledge
            .iter()
            .map(|k| {
                // an equivalence class is labelled by its least member
                let labels: Vec<usize> = (0..n).map(|w| successors(k, w).next().unwrap_or(w)).collect();
                Partition::from_labels(&labels)
            })
            .collect();
        let correct = self
            .hope
            .iter()
            .map(|h| world_set(n, (0..n).filter(|&w| successors(h, w).next().is_some())))
            .collect();
        Ok(KripkeModel::new(self.sig, self.worlds, self.valuation, knowledge, correct)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RawModelError {
    #[error("model is not in KH:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two agents a, b; world `ij` has `p_a` iff i = 1 and `p_b` iff j = 1.
    /// a is correct only at 00, b everywhere except 00.
    pub fn base_model() -> KripkeModel {
        let sig = Arc::new(Signature::new(["a", "b"], ["p_a", "p_b"]).unwrap());
        let worlds: Vec<String> = ["00", "10", "01", "11"].iter().map(|s| s.to_string()).collect();
        KripkeModel::new(
            sig,
            worlds,
            vec![world_set(4, [1, 3]), world_set(4, [2, 3])],
            vec![
                Partition::from_classes(4, &[vec![0, 2], vec![1, 3]]).unwrap(),
                Partition::from_classes(4, &[vec![0, 1], vec![2, 3]]).unwrap(),
            ],
            vec![world_set(4, [0]), world_set(4, [1, 2, 3])],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::base_model;
    use super::*;

    fn names(m: &KripkeModel, ws: Vec<WorldId>) -> Vec<&str> {
        ws.into_iter().map(|w| m.world_name(w.0)).collect()
    }

    #[test]
    fn base_model_is_kh() {
        let m = base_model();
        assert!(validate(&m.to_raw()).is_empty());
    }

    #[test]
    fn classes_of_base_model() {
        let m = base_model();
        let a = m.agent("a").unwrap();
        let w00 = WorldId(m.world("00").unwrap());
        let w10 = WorldId(m.world("10").unwrap());
        assert_eq!(names(&m, m.k_class(w00, a).unwrap()), ["00", "01"]);
        assert_eq!(names(&m, m.h_class(w00, a).unwrap()), ["00"]);
        assert!(m.h_class(w10, a).unwrap().is_empty());
        assert!(m.is_correct(w00, a).unwrap());
        assert!(!m.is_correct(w00, m.agent("b").unwrap()).unwrap());
    }

    #[test]
    fn unknown_world_or_agent_is_an_error() {
        let m = base_model();
        assert!(m.is_correct(WorldId(9), AgentId(0)).is_err());
        assert!(m.k_class(WorldId(0), AgentId(5)).is_err());
        assert_eq!(m.world("22"), Err(ModelError::UnknownWorld("22".into())));
    }

    #[test]
    fn empty_hope_is_valid_and_nobody_is_correct() {
        let m = base_model();
        let empty = m.with_correct_sets(vec![world_set(4, []), world_set(4, [])]);
        assert!(validate(&empty.to_raw()).is_empty());
        for w in 0..4 {
            for i in 0..2 {
                assert!(!empty.is_correct(WorldId(w), AgentId(i)).unwrap());
            }
        }
    }

    #[test]
    fn one_directional_hope_pair_is_reported() {
        let m = base_model();
        let mut raw = m.to_raw();
        let (w01, w11) = (m.world("01").unwrap(), m.world("11").unwrap());
        raw.hope[0].insert((w01, w11));
        let report = validate(&raw);
        assert!(!report.is_empty());
        assert_eq!(report.witnesses(Condition::ShiftSerial), vec![vec!["01", "11"]]);
        assert_eq!(report.witnesses(Condition::HopeSymmetric), vec![vec!["01", "11"]]);
        assert_eq!(report.witnesses(Condition::HopeInKnowledge), vec![vec!["01", "11"]]);
        assert!(raw.into_model().is_err());
    }

    #[test]
    fn one_hope_violation_is_reported() {
        let m = base_model();
        let mut raw = m.to_raw();
        // make a correct at 01 too, but without linking it to 00
        let w01 = m.world("01").unwrap();
        raw.hope[0].insert((w01, w01));
        let report = validate(&raw);
        assert!(report.has(Condition::OneHope));
        assert!(!report.has(Condition::ShiftSerial));
        assert_eq!(report.witnesses(Condition::OneHope), vec![vec!["00", "01"], vec!["01", "00"]]);
    }

    #[test]
    fn raw_round_trip() {
        let m = base_model();
        assert_eq!(m.to_raw().into_model().unwrap(), m);
    }

    #[test]
    fn signature_rejects_keywords_and_duplicates() {
        assert!(Signature::new(["a"], ["K"]).is_err());
        assert!(Signature::new(["a", "a"], ["p"]).is_err());
        assert!(Signature::new(["a"], ["p", "p"]).is_err());
        assert!(Signature::new(["1", "2"], ["p_1"]).is_ok());
    }
}
