//! Truth evaluation, validity in a model, KH axiom instances, and a bounded
//! countermodel probe.
//!
//! Evaluation is global: a formula is mapped to the set of worlds where it
//! holds. Dynamic operators build the updated model and evaluate there.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{Formula, Printer};
use crate::gen;
use crate::kripke::{AgentId, KripkeModel, ModelError, PropId, Signature, WorldId, WorldSet};
use crate::partition::Partition;
use crate::translate::{translate, TranslateError};
use crate::update::{apply_public, product};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("proposition #{0} is not in the model's signature")]
    UnknownProp(usize),
    #[error("agent #{0} is not in the model's signature")]
    UnknownAgent(usize),
    #[error("expected {expected} agents, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("direct evaluation and translation disagree on `{formula}` at world {world}")]
    CrossCheck { formula: String, world: String },
}

/// The set of worlds of `model` where `f` holds.
pub fn extension(model: &KripkeModel, f: &Formula) -> Result<WorldSet, EvalError> {
    EvalContext::new(model).extension(f)
}

/// `M, w ⊨ φ`.
pub fn eval(model: &KripkeModel, w: WorldId, f: &Formula) -> Result<bool, EvalError> {
    if w.0 >= model.world_count() {
        return Err(ModelError::UnknownWorld(format!("#{}", w.0)).into());
    }
    Ok(extension(model, f)?.contains(w.0))
}

/// `M ⊨ φ`. Returns the first world where `φ` fails, if any.
pub fn valid_in_model(model: &KripkeModel, f: &Formula) -> Result<Option<WorldId>, EvalError> {
    let ext = extension(model, f)?;
    Ok((0..model.world_count()).find(|&w| !ext.contains(w)).map(WorldId))
}

/// Evaluation over one model with an optional cache of subformula
/// extensions and an optional translation cross-check.
pub struct EvalContext<'m> {
    model: &'m KripkeModel,
    memo: Option<HashMap<Formula, WorldSet>>,
    cross_check: bool,
}

impl<'m> EvalContext<'m> {
    pub fn new(model: &'m KripkeModel) -> Self {
        EvalContext { model, memo: None, cross_check: false }
    }

    pub fn with_memo(model: &'m KripkeModel) -> Self {
        EvalContext { model, memo: Some(HashMap::new()), cross_check: false }
    }

    /// Also evaluates the translation of every top-level query and reports a
    /// disagreement as an error. Caching is off in this mode.
    pub fn cross_checked(model: &'m KripkeModel) -> Self {
        EvalContext { model, memo: None, cross_check: true }
    }

    pub fn model(&self) -> &KripkeModel {
        self.model
    }

    pub fn eval(&mut self, w: WorldId, f: &Formula) -> Result<bool, EvalError> {
        if w.0 >= self.model.world_count() {
            return Err(ModelError::UnknownWorld(format!("#{}", w.0)).into());
        }
        Ok(self.extension(f)?.contains(w.0))
    }

    pub fn extension(&mut self, f: &Formula) -> Result<WorldSet, EvalError> {
        let direct = self.ext(f)?;
        if self.cross_check && !f.is_static() {
            let t = translate(f)?.formula;
            let via = EvalContext::new(self.model).ext(&t)?;
            if via != direct {
                let w = (0..self.model.world_count()).find(|&w| via.contains(w) != direct.contains(w)).unwrap();
                return Err(EvalError::CrossCheck {
                    formula: Printer::new(self.model.signature()).print(f),
                    world: self.model.world_name(w).to_string(),
                });
            }
        }
        Ok(direct)
    }

    fn ext(&mut self, f: &Formula) -> Result<WorldSet, EvalError> {
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(f)) {
            return Ok(hit.clone());
        }
        let out = self.compute(f)?;
        if let Some(memo) = self.memo.as_mut() {
            if !matches!(f, Formula::Top | Formula::Atom(_)) {
                memo.insert(f.clone(), out.clone());
            }
        }
        Ok(out)
    }

    fn agent(&self, i: AgentId) -> Result<AgentId, EvalError> {
        if i.0 < self.model.signature().agent_count() {
            Ok(i)
        } else {
            Err(EvalError::UnknownAgent(i.0))
        }
    }

    fn compute(&mut self, f: &Formula) -> Result<WorldSet, EvalError> {
        let m = self.model;
        let n = m.world_count();
        Ok(match f {
            Formula::Top => m.all_worlds(),
            Formula::Atom(p) => {
                if p.0 >= m.signature().prop_count() {
                    return Err(EvalError::UnknownProp(p.0));
                }
                m.valuation(*p).clone()
            }
            Formula::Not(a) => {
                let mut s = self.ext(a)?;
                s.toggle_range(..);
                s
            }
            Formula::And(a, b) => {
                let mut s = self.ext(a)?;
                s.intersect_with(&self.ext(b)?);
                s
            }
            Formula::Know(i, a) => {
                let i = self.agent(*i)?;
                let s = self.ext(a)?;
                let mut out = WorldSet::with_capacity(n);
                for class in m.knowledge(i).classes() {
                    if class.iter().all(|&v| s.contains(v)) {
                        out.extend(class.iter().copied());
                    }
                }
                out
            }
            Formula::Hope(i, a) => {
                let i = self.agent(*i)?;
                let s = self.ext(a)?;
                let c = m.correct_set(i);
                // faulty worlds have no hope successors and satisfy every H_i φ
                let mut out = c.clone();
                out.toggle_range(..);
                for class in m.knowledge(i).classes() {
                    if class.iter().all(|&v| !c.contains(v) || s.contains(v)) {
                        out.extend(class.iter().copied().filter(|&v| c.contains(v)));
                    }
                }
                out
            }
            Formula::Public(v, body) => {
                let updated = apply_public(m, v)?;
                let mut inner = EvalContext { model: &updated, memo: self.memo.as_ref().map(|_| HashMap::new()), cross_check: false };
                inner.ext(body)?
            }
            Formula::Update(point, body) => {
                let u = point.model();
                let prod = product(m, u)?;
                let mut inner = EvalContext { model: &prod.model, memo: self.memo.as_ref().map(|_| HashMap::new()), cross_check: false };
                let s = inner.ext(body)?;
                let e = point.action();
                let mut out = WorldSet::with_capacity(n);
                out.extend((0..n).filter(|&w| s.contains(prod.world_of(w, e))));
                out
            }
        })
    }
}

/// Instances of the axiom schemas of the static system, each valid on every
/// KH model.
pub mod axioms {
    use super::*;

    pub const SCHEMAS: &[&str] = &["P", "T", "K", "4", "5", "H-correct", "KH"];

    /// A propositional tautology built from `a` and `b`; `k` selects the shape.
    pub fn tautology(k: usize, a: Formula, b: Formula) -> Formula {
        match k % 6 {
            0 => Formula::or(a.clone(), Formula::not(a)),
            1 => Formula::implies(a.clone(), Formula::implies(b, a)),
            2 => Formula::implies(Formula::and(a.clone(), b), a),
            3 => Formula::iff(Formula::not(Formula::not(a.clone())), a),
            4 => Formula::iff(
                Formula::not(Formula::and(a.clone(), b.clone())),
                Formula::or(Formula::not(a), Formula::not(b)),
            ),
            _ => Formula::implies(Formula::implies(Formula::not(a.clone()), a.clone()), a),
        }
    }

    pub fn instance(schema: &str, i: AgentId, a: Formula, b: Formula, k: usize) -> Formula {
        match schema {
            "P" => tautology(k, a, b),
            "T" => Formula::implies(Formula::know(i, a.clone()), a),
            "K" => Formula::implies(
                Formula::and(Formula::know(i, Formula::implies(a.clone(), b.clone())), Formula::know(i, a)),
                Formula::know(i, b),
            ),
            "4" => Formula::implies(Formula::know(i, a.clone()), Formula::know(i, Formula::know(i, a))),
            "5" => Formula::implies(
                Formula::not(Formula::know(i, a.clone())),
                Formula::know(i, Formula::not(Formula::know(i, a))),
            ),
            "H-correct" => Formula::hope(i, Formula::correct(i)),
            "KH" => Formula::iff(
                Formula::hope(i, a.clone()),
                Formula::implies(Formula::correct(i), Formula::know(i, Formula::implies(Formula::correct(i), a))),
            ),
            other => panic!("unknown axiom schema {other}"),
        }
    }

    /// A random instance of a random schema, with static subformulas of the
    /// given depth. Returns the schema name along with the instance.
    pub fn random_instance<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> (&'static str, Formula) {
        let schema = SCHEMAS[rng.gen_range(0..SCHEMAS.len())];
        let i = AgentId(rng.gen_range(0..sig.agent_count()));
        let a = gen::random_static(rng, sig, depth);
        let b = gen::random_static(rng, sig, depth);
        let k = rng.gen_range(0..6);
        (schema, instance(schema, i, a, b, k))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Largest model examined.
    pub max_worlds: usize,
    /// Models up to this many worlds are enumerated exhaustively before sampling.
    pub exhaustive_worlds: usize,
    pub max_agents: usize,
    /// Total number of models examined, exhaustive and sampled together.
    pub max_models: usize,
    pub seed: u64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds { max_worlds: 4, exhaustive_worlds: 2, max_agents: 3, max_models: 20_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("{agents} agents exceed the bound of {bound}")]
    TooManyAgents { agents: usize, bound: usize },
    #[error("bounds must be positive")]
    EmptyBounds,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// A model and world falsifying the formula.
    pub countermodel: Option<(KripkeModel, WorldId)>,
    pub models_examined: usize,
    /// True if every model up to `exhaustive_worlds` worlds was enumerated.
    pub exhaustive_complete: bool,
}

/// All set partitions of `0..n`, as restricted growth strings.
fn all_partitions(n: usize) -> Vec<Partition> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix));
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            go(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

fn subsets(n: usize) -> impl Iterator<Item = WorldSet> + Clone {
    (0u64..1 << n).map(move |bits| {
        let mut s = WorldSet::with_capacity(n);
        s.extend((0..n).filter(|&w| bits >> w & 1 == 1));
        s
    })
}

/// Odometer over per-slot choice counts.
fn advance(digits: &mut [usize], radix: &[usize]) -> bool {
    for (d, &r) in digits.iter_mut().zip(radix) {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}

/// Searches for a KH model and world where `f` is false. Small models are
/// enumerated completely (valuations range only over the propositions that
/// occur in `f`), then random models are sampled from the seed. Finding
/// nothing does not establish validity.
pub fn find_countermodel(f: &Formula, sig: &Arc<Signature>, bounds: &SearchBounds) -> Result<SearchOutcome, SearchError> {
    let n = sig.agent_count();
    if n > bounds.max_agents {
        return Err(SearchError::TooManyAgents { agents: n, bound: bounds.max_agents });
    }
    if bounds.max_worlds == 0 || bounds.max_models == 0 {
        return Err(SearchError::EmptyBounds);
    }
    let relevant: Vec<PropId> = f.props().into_iter().collect();
    let mut examined = 0;
    let check = |m: KripkeModel, examined: &mut usize| -> Result<Option<(KripkeModel, WorldId)>, SearchError> {
        *examined += 1;
        Ok(valid_in_model(&m, f)?.map(|w| (m, w)))
    };

    for size in 1..=bounds.exhaustive_worlds.min(bounds.max_worlds) {
        let parts = all_partitions(size);
        let sets: Vec<WorldSet> = subsets(size).collect();
        let names: Vec<String> = (0..size).map(|w| format!("w{w}")).collect();
        // one digit per agent partition, per agent correct-set, per relevant prop
        let mut radix = vec![parts.len(); n];
        radix.extend(std::iter::repeat_n(sets.len(), n + relevant.len()));
        let mut digits = vec![0; radix.len()];
        loop {
            if examined >= bounds.max_models {
                return Ok(SearchOutcome { countermodel: None, models_examined: examined, exhaustive_complete: false });
            }
            let mut valuation = vec![WorldSet::with_capacity(size); sig.prop_count()];
            for (k, p) in relevant.iter().enumerate() {
                valuation[p.0] = sets[digits[2 * n + k]].clone();
            }
            let m = KripkeModel::new(
                sig.clone(),
                names.clone(),
                valuation,
                (0..n).map(|i| parts[digits[i]].clone()).collect(),
                (0..n).map(|i| sets[digits[n + i]].clone()).collect(),
            )
            .expect("enumerated model is well-formed");
            if let Some(found) = check(m, &mut examined)? {
                return Ok(SearchOutcome { countermodel: Some(found), models_examined: examined, exhaustive_complete: false });
            }
            if !advance(&mut digits, &radix) {
                break;
            }
        }
    }
    let exhaustive_complete = true;

    let mut rng = ChaCha8Rng::seed_from_u64(bounds.seed);
    let low = (bounds.exhaustive_worlds + 1).min(bounds.max_worlds);
    while examined < bounds.max_models {
        let size = rng.gen_range(low..=bounds.max_worlds);
        let m = gen::random_model_over(&mut rng, sig, size, &relevant);
        if let Some(found) = check(m, &mut examined)? {
            return Ok(SearchOutcome { countermodel: Some(found), models_examined: examined, exhaustive_complete });
        }
    }
    Ok(SearchOutcome { countermodel: None, models_examined: examined, exhaustive_complete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, UpdateRegistry};
    use crate::kripke::fixtures::base_model;

    fn f(m: &KripkeModel, text: &str) -> Formula {
        parse(text, m.signature(), &UpdateRegistry::new()).unwrap()
    }

    fn at(m: &KripkeModel, w: &str, text: &str) -> bool {
        eval(m, WorldId(m.world(w).unwrap()), &f(m, text)).unwrap()
    }

    #[test]
    fn opening_facts() {
        let m = base_model();
        assert!(!at(&m, "00", "K{a} ~H{a} false"));
        assert!(at(&m, "00", "~H{a} false"));
        assert!(!at(&m, "00", "~H{b} false"));
        assert!(at(&m, "00", "[~H{a} false | K{b} H{a} false]{a} K{a} ~H{a} false"));
        assert!(at(&m, "10", "[K{a} H{a} false]{a} K{a} ~H{a} false"));
        for w in ["00", "10", "01", "11"] {
            assert!(at(&m, w, "true"));
        }
    }

    #[test]
    fn correctness_agrees_with_formula() {
        let m = base_model();
        for i in m.signature().agents() {
            let ext = extension(&m, &Formula::correct(i)).unwrap();
            assert_eq!(&ext, m.correct_set(i));
        }
    }

    #[test]
    fn validity_witness() {
        let m = base_model();
        let w = valid_in_model(&m, &f(&m, "~H{a} false")).unwrap().unwrap();
        assert_ne!(m.world_name(w.0), "00");
        assert_eq!(valid_in_model(&m, &f(&m, "p_a | ~p_a")).unwrap(), None);
    }

    #[test]
    fn memo_is_transparent() {
        let m = base_model();
        let g = f(&m, "[~H{a} false | K{b} H{a} false]{a} (K{a} ~H{a} false & K{a} ~H{a} false | H{b} p_a)");
        assert_eq!(EvalContext::with_memo(&m).extension(&g).unwrap(), extension(&m, &g).unwrap());
    }

    #[test]
    fn unknown_symbols() {
        let m = base_model();
        assert_eq!(extension(&m, &Formula::Atom(PropId(7))), Err(EvalError::UnknownProp(7)));
        assert_eq!(extension(&m, &Formula::know(AgentId(3), Formula::Top)), Err(EvalError::UnknownAgent(3)));
        assert!(eval(&m, WorldId(9), &Formula::Top).is_err());
    }

    #[test]
    fn axiom_instances_hold_on_base() {
        let m = base_model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (schema, inst) = axioms::random_instance(&mut rng, m.signature(), 2);
            assert_eq!(valid_in_model(&m, &inst).unwrap(), None, "{schema}");
        }
    }

    #[test]
    fn partitions_are_counted_by_bell_numbers() {
        assert_eq!(all_partitions(1).len(), 1);
        assert_eq!(all_partitions(3).len(), 5);
        assert_eq!(all_partitions(4).len(), 15);
    }

    #[test]
    fn countermodel_for_knowing_own_correctness() {
        let m = base_model();
        let g = f(&m, "~H{a} false -> K{a} ~H{a} false");
        let out = find_countermodel(&g, m.signature(), &SearchBounds::default()).unwrap();
        let (cm, w) = out.countermodel.unwrap();
        assert!(!eval(&cm, w, &g).unwrap());
    }

    #[test]
    fn no_countermodel_for_an_axiom() {
        let m = base_model();
        let g = f(&m, "H{a} ~H{a} false");
        let bounds = SearchBounds { max_models: 2_000, ..SearchBounds::default() };
        let out = find_countermodel(&g, m.signature(), &bounds).unwrap();
        assert!(out.countermodel.is_none());
        assert!(out.exhaustive_complete);
        assert_eq!(out.models_examined, 2_000);
    }
}
