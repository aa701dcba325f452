//! Translation of dynamic formulas into the static language by reduction
//! axioms, applied top-down. Every rewrite step is recorded together with the
//! complexity of both sides, and a step that does not strictly decrease the
//! complexity is an error.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checker::{extension, EvalError};
use crate::formula::{complexity, Formula, Printer};
use crate::gen;
use crate::kripke::{AgentId, KripkeModel};
use crate::update::{compose, embed_public, PointedUpdate, UpdateError, UpdateModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("rewrite `{rule}` at {position} does not decrease complexity ({before} -> {after})")]
    NotDecreasing { rule: Rule, position: String, before: u128, after: u128 },
    #[error(transparent)]
    Update(#[from] UpdateError),
}

/// The reduction axioms, read left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    PubAtom,
    PubTop,
    PubNot,
    PubAnd,
    PubKnow,
    PubHope,
    PubPub,
    PubUpdate,
    UpdAtom,
    UpdTop,
    UpdNot,
    UpdAnd,
    UpdKnow,
    UpdHope,
    UpdUpd,
    UpdPub,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::PubAtom => "pub-atom",
            Rule::PubTop => "pub-top",
            Rule::PubNot => "pub-not",
            Rule::PubAnd => "pub-and",
            Rule::PubKnow => "pub-know",
            Rule::PubHope => "pub-hope",
            Rule::PubPub => "pub-pub",
            Rule::PubUpdate => "pub-update",
            Rule::UpdAtom => "update-atom",
            Rule::UpdTop => "update-top",
            Rule::UpdNot => "update-not",
            Rule::UpdAnd => "update-and",
            Rule::UpdKnow => "update-know",
            Rule::UpdHope => "update-hope",
            Rule::UpdUpd => "update-update",
            Rule::UpdPub => "update-pub",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: Rule,
    /// Child indices from the root of the formula being rewritten at the
    /// time of the step; `root` for the root.
    pub position: String,
    pub before: u128,
    pub after: u128,
}

#[derive(Clone, Debug)]
pub struct Translation {
    pub formula: Formula,
    pub trace: Vec<Step>,
}

/// Composition of update models, reusing earlier results so that repeated
/// rewrites of the same redex share one composed model.
#[derive(Default)]
struct Compositions {
    cache: HashMap<(usize, usize), (Arc<UpdateModel>, Arc<UpdateModel>, Arc<UpdateModel>)>,
}

impl Compositions {
    fn get(&mut self, a: &Arc<UpdateModel>, b: &Arc<UpdateModel>) -> Result<Arc<UpdateModel>, UpdateError> {
        let key = (Arc::as_ptr(a) as usize, Arc::as_ptr(b) as usize);
        if let Some((_, _, c)) = self.cache.get(&key) {
            return Ok(c.clone());
        }
        let c = Arc::new(compose(a, b)?);
        // the inputs are kept alive so their addresses stay unique
        self.cache.insert(key, (a.clone(), b.clone(), c.clone()));
        Ok(c)
    }
}

/// One left-to-right application of a reduction axiom to a formula whose
/// root is a dynamic operator. Returns `None` for any other formula.
fn rewrite(f: &Formula, comps: &mut Compositions) -> Result<Option<(Rule, Formula)>, UpdateError> {
    Ok(Some(match f {
        Formula::Public(v, body) => {
            let under = |g: &Formula| Formula::Public(v.clone(), Arc::new(g.clone()));
            match &**body {
                Formula::Atom(_) => (Rule::PubAtom, (**body).clone()),
                Formula::Top => (Rule::PubTop, Formula::Top),
                Formula::Not(a) => (Rule::PubNot, Formula::not(under(a))),
                Formula::And(a, b) => (Rule::PubAnd, Formula::and(under(a), under(b))),
                Formula::Know(i, a) => (Rule::PubKnow, Formula::know(*i, under(a))),
                Formula::Hope(i, a) => {
                    let phi = &v[i.0];
                    (
                        Rule::PubHope,
                        Formula::implies(phi.clone(), Formula::know(*i, Formula::implies(phi.clone(), under(a)))),
                    )
                }
                Formula::Public(w, inner) => {
                    let merged = w.iter().map(under).collect();
                    (Rule::PubPub, Formula::public(merged, (**inner).clone()))
                }
                Formula::Update(point, inner) => {
                    let first = embed_public(v, v.len())?;
                    let c = comps.get(first.model(), point.model())?;
                    (Rule::PubUpdate, Formula::update(PointedUpdate::new(c, point.action())?, (**inner).clone()))
                }
            }
        }
        Formula::Update(point, body) => {
            let u = point.model();
            let e = point.action();
            let at = |f: usize, g: &Formula| Formula::Update(point.with_action(f), Arc::new(g.clone()));
            match &**body {
                Formula::Atom(p) => (Rule::UpdAtom, u.sigma(e, *p)),
                Formula::Top => (Rule::UpdTop, Formula::Top),
                Formula::Not(a) => (Rule::UpdNot, Formula::not(at(e, a))),
                Formula::And(a, b) => (Rule::UpdAnd, Formula::and(at(e, a), at(e, b))),
                Formula::Know(i, a) => (
                    Rule::UpdKnow,
                    Formula::conj_all(u.relation(*i).class(e).iter().map(|&f| Formula::know(*i, at(f, a)))),
                ),
                Formula::Hope(i, a) => {
                    let rhs = Formula::conj_all(u.relation(*i).class(e).iter().map(|&f| {
                        Formula::know(*i, Formula::implies(u.theta(f, *i).clone(), at(f, a)))
                    }));
                    (Rule::UpdHope, Formula::implies(u.theta(e, *i).clone(), rhs))
                }
                Formula::Update(second, inner) => {
                    let c = comps.get(u, second.model())?;
                    let pair = e * second.model().action_count() + second.action();
                    (Rule::UpdUpd, Formula::update(PointedUpdate::new(c, pair)?, (**inner).clone()))
                }
                Formula::Public(w, inner) => {
                    let second = embed_public(w, w.len())?;
                    let c = comps.get(u, second.model())?;
                    (Rule::UpdPub, Formula::update(PointedUpdate::new(c, e)?, (**inner).clone()))
                }
            }
        }
        _ => return Ok(None),
    }))
}

struct Translator {
    comps: Compositions,
    memo: HashMap<Formula, Formula>,
    trace: Vec<Step>,
}

fn position(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

impl Translator {
    fn t(&mut self, f: &Formula, path: &mut Vec<usize>) -> Result<Formula, TranslateError> {
        let mut child = |me: &mut Self, k: usize, g: &Formula| {
            path.push(k);
            let out = me.t(g, path);
            path.pop();
            out
        };
        Ok(match f {
            Formula::Top | Formula::Atom(_) => f.clone(),
            Formula::Not(a) => Formula::not(child(self, 0, a)?),
            Formula::And(a, b) => {
                let a = child(self, 0, a)?;
                Formula::and(a, child(self, 1, b)?)
            }
            Formula::Know(i, a) => Formula::know(*i, child(self, 0, a)?),
            Formula::Hope(i, a) => Formula::hope(*i, child(self, 0, a)?),
            Formula::Public(..) | Formula::Update(..) => {
                if let Some(done) = self.memo.get(f) {
                    return Ok(done.clone());
                }
                let (rule, rhs) = rewrite(f, &mut self.comps)?.expect("dynamic root");
                let (before, after) = (complexity(f), complexity(&rhs));
                if after >= before {
                    return Err(TranslateError::NotDecreasing { rule, position: position(path), before, after });
                }
                self.trace.push(Step { rule, position: position(path), before, after });
                let out = self.t(&rhs, path)?;
                self.memo.insert(f.clone(), out.clone());
                out
            }
        })
    }
}

/// Translates `f` into an equivalent formula without dynamic operators.
pub fn translate(f: &Formula) -> Result<Translation, TranslateError> {
    let mut tr = Translator { comps: Compositions::default(), memo: HashMap::new(), trace: Vec::new() };
    let formula = tr.t(f, &mut Vec::new())?;
    Ok(Translation { formula, trace: tr.trace })
}

/// The eighteen reduction-axiom schemas checked by [`check_reduction_axioms`]:
/// six for public updates, six for update models without factual change and
/// six for update models with factual change.
pub const AXIOM_SCHEMAS: [(&str, Rule); 18] = [
    ("pub:atom", Rule::PubAtom),
    ("pub:not", Rule::PubNot),
    ("pub:and", Rule::PubAnd),
    ("pub:know", Rule::PubKnow),
    ("pub:hope", Rule::PubHope),
    ("pub:compose", Rule::PubPub),
    ("priv:atom", Rule::UpdAtom),
    ("priv:not", Rule::UpdNot),
    ("priv:and", Rule::UpdAnd),
    ("priv:know", Rule::UpdKnow),
    ("priv:hope", Rule::UpdHope),
    ("priv:compose", Rule::UpdUpd),
    ("fact:atom", Rule::UpdAtom),
    ("fact:not", Rule::UpdNot),
    ("fact:and", Rule::UpdAnd),
    ("fact:know", Rule::UpdKnow),
    ("fact:hope", Rule::UpdHope),
    ("fact:compose", Rule::UpdUpd),
];

#[derive(Clone, Debug)]
pub struct Discrepancy {
    pub schema: &'static str,
    pub instance: String,
    pub world: String,
}

#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    /// Instances checked per schema, in [`AXIOM_SCHEMAS`] order.
    pub checked: Vec<(&'static str, usize)>,
    pub discrepancies: Vec<Discrepancy>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// A random instance `(lhs, rhs)` of one schema.
pub fn axiom_instance<R: Rng>(
    rng: &mut R,
    model: &KripkeModel,
    schema: &str,
    depth: usize,
) -> Result<(Formula, Formula), TranslateError> {
    let sig = model.signature();
    let (family, shape) = schema.split_once(':').expect("schema names have a family prefix");
    let i = AgentId(rng.gen_range(0..sig.agent_count()));
    let psi = gen::random_static(rng, sig, depth);
    let chi = gen::random_static(rng, sig, depth);
    let body = match shape {
        "atom" => match sig.prop_count() {
            0 => Formula::Top,
            k => Formula::Atom(crate::kripke::PropId(rng.gen_range(0..k))),
        },
        "not" => Formula::not(psi),
        "and" => Formula::and(psi, chi),
        "know" => Formula::know(i, psi),
        "hope" => Formula::hope(i, psi),
        _ => psi,
    };
    let point = |rng: &mut R, name: &str| {
        let actions = rng.gen_range(1..=3);
        let u = gen::random_update_model(rng, sig, name, actions, depth, family == "fact");
        PointedUpdate::new(Arc::new(u), rng.gen_range(0..actions)).expect("action in range")
    };
    let lhs = match (family, shape) {
        ("pub", "compose") => {
            Formula::public(gen::random_vector(rng, sig, depth), Formula::public(gen::random_vector(rng, sig, depth), body))
        }
        ("pub", _) => Formula::public(gen::random_vector(rng, sig, depth), body),
        (_, "compose") => {
            let first = point(rng, "U");
            Formula::update(first, Formula::update(point(rng, "V"), body))
        }
        _ => Formula::update(point(rng, "U"), body),
    };
    let (_, rhs) = rewrite(&lhs, &mut Compositions::default())?.expect("dynamic root");
    Ok((lhs, rhs))
}

/// Checks `samples` random instances of each reduction-axiom schema on
/// `model`: both sides must hold at exactly the same worlds.
pub fn check_reduction_axioms(model: &KripkeModel, samples: usize, seed: u64) -> Result<AxiomReport, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let printer = Printer::new(model.signature());
    let mut report = AxiomReport::default();
    for (schema, _) in AXIOM_SCHEMAS {
        for _ in 0..samples {
            let (lhs, rhs) = axiom_instance(&mut rng, model, schema, 2)?;
            let (l, r) = (extension(model, &lhs)?, extension(model, &rhs)?);
            if let Some(w) = (0..model.world_count()).find(|&w| l.contains(w) != r.contains(w)) {
                report.discrepancies.push(Discrepancy {
                    schema,
                    instance: format!("{}  <->  {}", printer.print(&lhs), printer.print(&rhs)),
                    world: model.world_name(w).to_string(),
                });
            }
        }
        report.checked.push((schema, samples));
    }
    Ok(report)
}
