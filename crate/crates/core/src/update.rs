//! Model updates: public hope update, the full product with a hope update
//! model (with or without factual change), and composition of update models.
//!
//! All hope update formulas and substitution formulas are evaluated in the
//! *source* model, never in the product.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::checker::{extension, EvalError};
use crate::formula::{complexity, Formula};
use crate::kripke::{AgentId, KripkeModel, PropId, RawModel, Relation, WorldSet};
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpdateError {
    #[error("update model needs at least one action")]
    NoActions,
    #[error("expected {expected} agents, got {got}")]
    AgentMismatch { expected: usize, got: usize },
    #[error("expected {expected} hope update formulas, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("relation of agent #{agent} is not a partition of the actions: {reason}")]
    BadRelation { agent: usize, reason: String },
}

/// A hope update model `(E, ϑ, σ, K^U)`.
///
/// `σ` is stored sparsely: only propositions whose substitute differs from the
/// proposition itself are kept, so an update without factual change has an
/// empty override map for every action.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UpdateModel {
    name: String,
    actions: Vec<String>,
    /// `theta[e][i]` is `ϑ_i(e)`.
    theta: Vec<Vec<Formula>>,
    sigma: Vec<BTreeMap<PropId, Formula>>,
    relations: Vec<Partition>,
    complexity: u128,
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || matches!(c, ':' | '[' | ']' | '"'))
}

impl UpdateModel {
    pub fn new(
        name: impl Into<String>,
        actions: Vec<String>,
        theta: Vec<Vec<Formula>>,
        sigma: Vec<BTreeMap<PropId, Formula>>,
        relations: Vec<Partition>,
    ) -> Result<Self, UpdateError> {
        let name = name.into();
        if !valid_label(&name) {
            return Err(UpdateError::InvalidName(name));
        }
        if actions.is_empty() {
            return Err(UpdateError::NoActions);
        }
        let mut seen = BTreeSet::new();
        for a in &actions {
            if !valid_label(a) {
                return Err(UpdateError::InvalidName(a.clone()));
            }
            if !seen.insert(a) {
                return Err(UpdateError::DuplicateAction(a.clone()));
            }
        }
        let n = relations.len();
        if theta.len() != actions.len() {
            return Err(UpdateError::Arity { expected: actions.len(), got: theta.len() });
        }
        if let Some(row) = theta.iter().find(|row| row.len() != n) {
            return Err(UpdateError::AgentMismatch { expected: n, got: row.len() });
        }
        if sigma.len() != actions.len() {
            return Err(UpdateError::Arity { expected: actions.len(), got: sigma.len() });
        }
        for (i, r) in relations.iter().enumerate() {
            if r.len() != actions.len() {
                return Err(UpdateError::BadRelation { agent: i, reason: "wrong number of actions".into() });
            }
        }
        let sigma: Vec<BTreeMap<PropId, Formula>> = sigma
            .into_iter()
            .map(|m| m.into_iter().filter(|(p, f)| *f != Formula::Atom(*p)).collect())
            .collect();
        let complexity = theta
            .iter()
            .flatten()
            .chain(sigma.iter().flat_map(|m| m.values()))
            .map(complexity)
            .max()
            .unwrap_or(1);
        Ok(UpdateModel { name, actions, theta, sigma, relations, complexity })
    }

    /// An update model without factual change.
    pub fn without_change(
        name: impl Into<String>,
        actions: Vec<String>,
        theta: Vec<Vec<Formula>>,
        relations: Vec<Partition>,
    ) -> Result<Self, UpdateError> {
        let k = actions.len();
        Self::new(name, actions, theta, vec![BTreeMap::new(); k], relations)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(&self, name: impl Into<String>) -> Result<Self, UpdateError> {
        let name = name.into();
        if !valid_label(&name) {
            return Err(UpdateError::InvalidName(name));
        }
        Ok(UpdateModel { name, ..self.clone() })
    }

    pub fn agent_count(&self) -> usize {
        self.relations.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, e: usize) -> &str {
        &self.actions[e]
    }

    pub fn action(&self, name: &str) -> Result<usize, UpdateError> {
        self.actions.iter().position(|a| a == name).ok_or_else(|| UpdateError::UnknownAction(name.to_string()))
    }

    /// `ϑ_i(e)`.
    pub fn theta(&self, e: usize, i: AgentId) -> &Formula {
        &self.theta[e][i.0]
    }

    /// `σ(e)(p)`, which is `p` itself unless overridden.
    pub fn sigma(&self, e: usize, p: PropId) -> Formula {
        self.sigma[e].get(&p).cloned().unwrap_or(Formula::Atom(p))
    }

    pub fn overrides(&self, e: usize) -> &BTreeMap<PropId, Formula> {
        &self.sigma[e]
    }

    pub fn has_factual_change(&self) -> bool {
        self.sigma.iter().any(|m| !m.is_empty())
    }

    pub fn relation(&self, i: AgentId) -> &Partition {
        &self.relations[i.0]
    }

    /// `c(U)`: the largest complexity among hope update formulas and
    /// substitution overrides.
    pub fn complexity(&self) -> u128 {
        self.complexity
    }

    pub(crate) fn max_payload_depth(&self) -> usize {
        self.payload().map(Formula::dynamic_depth).max().unwrap_or(0)
    }

    pub(crate) fn payload_size(&self) -> usize {
        self.payload().map(Formula::size).sum()
    }

    fn payload(&self) -> impl Iterator<Item = &Formula> {
        self.theta.iter().flatten().chain(self.sigma.iter().flat_map(|m| m.values()))
    }

    pub(crate) fn collect(&self, props: &mut BTreeSet<PropId>, agents: &mut BTreeSet<AgentId>) {
        for f in self.payload() {
            f.collect(props, agents);
        }
        for p in self.sigma.iter().flat_map(|m| m.keys()) {
            props.insert(*p);
        }
    }

    pub fn point(self: &Arc<Self>, action: &str) -> Result<PointedUpdate, UpdateError> {
        Ok(PointedUpdate { model: self.clone(), action: self.action(action)? })
    }
}

impl fmt::Debug for UpdateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UpdateModel").field("name", &self.name).field("actions", &self.actions).finish()
    }
}

/// A pointed hope update model `(U, e)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointedUpdate {
    model: Arc<UpdateModel>,
    action: usize,
}

impl PointedUpdate {
    pub fn new(model: Arc<UpdateModel>, action: usize) -> Result<Self, UpdateError> {
        if action >= model.action_count() {
            return Err(UpdateError::UnknownAction(format!("#{action}")));
        }
        Ok(PointedUpdate { model, action })
    }

    pub fn model(&self) -> &Arc<UpdateModel> {
        &self.model
    }

    pub fn action(&self) -> usize {
        self.action
    }

    pub fn with_action(&self, action: usize) -> Self {
        assert!(action < self.model.action_count());
        PointedUpdate { model: self.model.clone(), action }
    }
}

/// `M^φ⃗`: worlds, valuation and knowledge stay; agent `i` becomes correct
/// exactly where `φ_i` held in `M`.
pub fn apply_public(model: &KripkeModel, updates: &[Formula]) -> Result<KripkeModel, EvalError> {
    let n = model.signature().agent_count();
    if updates.len() != n {
        return Err(EvalError::Arity { expected: n, got: updates.len() });
    }
    let correct = updates.iter().map(|f| extension(model, f)).collect::<Result<Vec<_>, _>>()?;
    Ok(model.with_correct_sets(correct))
}

/// A product model together with the factor each world came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductModel {
    pub model: KripkeModel,
    /// `provenance[x] = (w, e)` for product world `x`.
    pub provenance: Vec<(usize, usize)>,
    pub action_count: usize,
}

impl ProductModel {
    pub fn world_of(&self, w: usize, e: usize) -> usize {
        w * self.action_count + e
    }
}

fn check_agents(model: &KripkeModel, update: &UpdateModel) -> Result<(), EvalError> {
    let n = model.signature().agent_count();
    if update.agent_count() != n {
        return Err(EvalError::Arity { expected: n, got: update.agent_count() });
    }
    Ok(())
}

/// `M ⊗ U`: the full product (no preconditions). World `(w, e)` is named
/// `w::e`; valuation follows `σ(e)`, knowledge is the pairwise product and
/// agent `i` is correct at `(w, e)` iff `M, w ⊨ ϑ_i(e)`.
pub fn product(model: &KripkeModel, update: &UpdateModel) -> Result<ProductModel, EvalError> {
    check_agents(model, update)?;
    let sig = model.signature().clone();
    let (nw, ne) = (model.world_count(), update.action_count());
    let size = nw * ne;

    let mut names = Vec::with_capacity(size);
    let mut provenance = Vec::with_capacity(size);
    for w in 0..nw {
        for e in 0..ne {
            names.push(format!("{}::{}", model.world_name(w), update.action_name(e)));
            provenance.push((w, e));
        }
    }

    let mut valuation = vec![WorldSet::with_capacity(size); sig.prop_count()];
    for e in 0..ne {
        for p in sig.props() {
            let truth = match update.overrides(e).get(&p) {
                Some(f) => extension(model, f)?,
                None => model.valuation(p).clone(),
            };
            for w in truth.ones() {
                valuation[p.0].insert(w * ne + e);
            }
        }
    }

    let knowledge = sig.agents().map(|i| model.knowledge(i).product(update.relation(i))).collect();

    let mut correct = vec![WorldSet::with_capacity(size); sig.agent_count()];
    for e in 0..ne {
        for i in sig.agents() {
            for w in extension(model, update.theta(e, i))?.ones() {
                correct[i.0].insert(w * ne + e);
            }
        }
    }

    let model = KripkeModel::new(sig, names, valuation, knowledge, correct)
        .expect("product of a valid model is well-formed");
    Ok(ProductModel { model, provenance, action_count: ne })
}

/// The product built literally from the relational definition, as an
/// unchecked candidate. Used to confirm that the product lands in KH.
pub fn product_relations(model: &KripkeModel, update: &UpdateModel) -> Result<RawModel, EvalError> {
    check_agents(model, update)?;
    let sig = model.signature().clone();
    let (nw, ne) = (model.world_count(), update.action_count());
    let pair = |x: usize| (x / ne, x % ne);

    let mut valuation = Vec::new();
    for p in sig.props() {
        let mut set = WorldSet::with_capacity(nw * ne);
        for e in 0..ne {
            let truth = extension(model, &update.sigma(e, p))?;
            set.extend(truth.ones().map(|w| w * ne + e));
        }
        valuation.push(set);
    }

    let mut knowledge = Vec::new();
    let mut hope = Vec::new();
    for i in sig.agents() {
        let k_i = model.knowledge_relation(i);
        let ku_i = update.relation(i).pairs();
        let theta: Vec<WorldSet> =
            (0..ne).map(|e| extension(model, update.theta(e, i))).collect::<Result<_, _>>()?;
        let mut k = Relation::new();
        let mut h = Relation::new();
        for x in 0..nw * ne {
            for y in 0..nw * ne {
                let ((w, e), (v, f)) = (pair(x), pair(y));
                if k_i.contains(&(w, v)) && ku_i.contains(&(e, f)) {
                    k.insert((x, y));
                    if theta[e].contains(w) && theta[f].contains(v) {
                        h.insert((x, y));
                    }
                }
            }
        }
        knowledge.push(k);
        hope.push(h);
    }
    let worlds = (0..nw * ne)
        .map(|x| format!("{}::{}", model.world_name(x / ne), update.action_name(x % ne)))
        .collect();
    Ok(RawModel { sig, worlds, valuation, knowledge, hope })
}

/// The public update built literally from its relational definition.
pub fn public_relations(model: &KripkeModel, updates: &[Formula]) -> Result<RawModel, EvalError> {
    let n = model.signature().agent_count();
    if updates.len() != n {
        return Err(EvalError::Arity { expected: n, got: updates.len() });
    }
    let mut raw = model.to_raw();
    for (i, chi) in updates.iter().enumerate() {
        let truth = extension(model, chi)?;
        raw.hope[i] = raw.knowledge[i]
            .iter()
            .copied()
            .filter(|&(w, v)| truth.contains(w) && truth.contains(v))
            .collect();
    }
    Ok(raw)
}

/// The singleton update model `({e}, ϑ, {(e,e)})` with `ϑ_i(e) = φ_i`.
pub fn embed_public(updates: &[Formula], agent_count: usize) -> Result<PointedUpdate, UpdateError> {
    if updates.len() != agent_count {
        return Err(UpdateError::Arity { expected: agent_count, got: updates.len() });
    }
    let model = UpdateModel::without_change(
        "pub",
        vec!["e".to_string()],
        vec![updates.to_vec()],
        vec![Partition::identity(1); agent_count],
    )?;
    PointedUpdate::new(Arc::new(model), 0)
}

/// `(U ; U')`. Actions are pairs `(e,e')` in `e`-major order.
pub fn compose(first: &Arc<UpdateModel>, second: &UpdateModel) -> Result<UpdateModel, UpdateError> {
    let n = first.agent_count();
    if second.agent_count() != n {
        return Err(UpdateError::AgentMismatch { expected: n, got: second.agent_count() });
    }
    let mut actions = Vec::new();
    let mut theta = Vec::new();
    let mut sigma = Vec::new();
    for e in 0..first.action_count() {
        let at = PointedUpdate { model: first.clone(), action: e };
        for e2 in 0..second.action_count() {
            actions.push(format!("({},{})", first.action_name(e), second.action_name(e2)));
            theta.push(
                (0..n).map(|i| Formula::update(at.clone(), second.theta(e2, AgentId(i)).clone())).collect(),
            );
            let mut overrides: BTreeMap<PropId, Formula> = first.overrides(e).clone();
            for (p, f) in second.overrides(e2) {
                overrides.insert(*p, Formula::update(at.clone(), f.clone()));
            }
            sigma.push(overrides);
        }
    }
    let relations = (0..n).map(|i| first.relations[i].product(&second.relations[i])).collect();
    UpdateModel::new(format!("{};{}", first.name(), second.name()), actions, theta, sigma, relations)
}
