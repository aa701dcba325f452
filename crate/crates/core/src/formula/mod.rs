//! Formulas of the static language with knowledge and hope, extended with
//! public hope updates `[φ1, ..., φn] ψ` and pointed hope update models
//! `[U, e] ψ` (with optional factual change).

mod derived;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::kripke::{AgentId, PropId};
use crate::update::PointedUpdate;

pub use derived::{DerivedForm, ExpansionError, DEFAULT_EXPANSION_BOUND};
pub use parse::{parse, parse_open, ParseError, ParseErrorKind, UpdateRegistry};
pub use print::Printer;

/// A formula. `⊤` is primitive; `⊥` is `¬⊤` and every other connective is
/// expanded into negation, conjunction and the modalities on construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Atom(PropId),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Know(AgentId, Arc<Formula>),
    Hope(AgentId, Arc<Formula>),
    /// Public hope update; the vector holds one hope update formula per agent.
    Public(Arc<[Formula]>, Arc<Formula>),
    Update(PointedUpdate, Arc<Formula>),
}

impl Formula {
    pub fn top() -> Self {
        Formula::Top
    }

    pub fn bot() -> Self {
        Formula::not(Formula::Top)
    }

    pub fn atom(p: PropId) -> Self {
        Formula::Atom(p)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Arc::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a → b` as `¬(a ∧ ¬b)`.
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    pub fn know(i: AgentId, f: Formula) -> Self {
        Formula::Know(i, Arc::new(f))
    }

    pub fn hope(i: AgentId, f: Formula) -> Self {
        Formula::Hope(i, Arc::new(f))
    }

    pub fn k_hat(i: AgentId, f: Formula) -> Self {
        Formula::not(Formula::know(i, Formula::not(f)))
    }

    pub fn h_hat(i: AgentId, f: Formula) -> Self {
        Formula::not(Formula::hope(i, Formula::not(f)))
    }

    /// `B_i φ := K_i(¬H_i⊥ → φ)`.
    pub fn belief(i: AgentId, f: Formula) -> Self {
        Formula::know(i, Formula::implies(Formula::correct(i), f))
    }

    /// `¬H_i⊥`: agent `i` is correct.
    pub fn correct(i: AgentId) -> Self {
        Formula::not(Formula::faulty(i))
    }

    /// `H_i⊥`: agent `i` is faulty.
    pub fn faulty(i: AgentId) -> Self {
        Formula::hope(i, Formula::bot())
    }

    pub fn public(updates: Vec<Formula>, body: Formula) -> Self {
        Formula::Public(updates.into(), Arc::new(body))
    }

    pub fn update(point: PointedUpdate, body: Formula) -> Self {
        Formula::Update(point, Arc::new(body))
    }

    /// Right-nested conjunction; the empty conjunction is `⊤`.
    pub fn conj_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let items: Vec<Formula> = items.into_iter().collect();
        let mut iter = items.into_iter().rev();
        match iter.next() {
            None => Formula::Top,
            Some(last) => iter.fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Right-nested disjunction; the empty disjunction is `⊥`.
    pub fn disj_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let items: Vec<Formula> = items.into_iter().collect();
        let mut iter = items.into_iter().rev();
        match iter.next() {
            None => Formula::bot(),
            Some(last) => iter.fold(last, |acc, f| Formula::or(f, acc)),
        }
    }

    /// True if no public or private update occurs anywhere in the formula.
    pub fn is_static(&self) -> bool {
        match self {
            Formula::Top | Formula::Atom(_) => true,
            Formula::Not(a) | Formula::Know(_, a) | Formula::Hope(_, a) => a.is_static(),
            Formula::And(a, b) => a.is_static() && b.is_static(),
            Formula::Public(..) | Formula::Update(..) => false,
        }
    }

    /// Maximum nesting of dynamic operators along any path, counting the
    /// formulas inside update vectors and update models.
    pub fn dynamic_depth(&self) -> usize {
        match self {
            Formula::Top | Formula::Atom(_) => 0,
            Formula::Not(a) | Formula::Know(_, a) | Formula::Hope(_, a) => a.dynamic_depth(),
            Formula::And(a, b) => a.dynamic_depth().max(b.dynamic_depth()),
            Formula::Public(v, b) => {
                1 + v.iter().map(Formula::dynamic_depth).max().unwrap_or(0).max(b.dynamic_depth())
            }
            Formula::Update(p, b) => 1 + p.model().max_payload_depth().max(b.dynamic_depth()),
        }
    }

    /// Number of nodes, counting update-model payloads once per occurrence.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Atom(_) => 1,
            Formula::Not(a) | Formula::Know(_, a) | Formula::Hope(_, a) => 1 + a.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Public(v, b) => 1 + v.iter().map(Formula::size).sum::<usize>() + b.size(),
            Formula::Update(p, b) => 1 + p.model().payload_size() + b.size(),
        }
    }

    pub fn props(&self) -> BTreeSet<PropId> {
        let mut out = BTreeSet::new();
        self.collect(&mut out, &mut BTreeSet::new());
        out
    }

    pub fn agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        self.collect(&mut BTreeSet::new(), &mut out);
        out
    }

    pub(crate) fn collect(&self, props: &mut BTreeSet<PropId>, agents: &mut BTreeSet<AgentId>) {
        match self {
            Formula::Top => {}
            Formula::Atom(p) => {
                props.insert(*p);
            }
            Formula::Not(a) => a.collect(props, agents),
            Formula::And(a, b) => {
                a.collect(props, agents);
                b.collect(props, agents);
            }
            Formula::Know(i, a) | Formula::Hope(i, a) => {
                agents.insert(*i);
                a.collect(props, agents);
            }
            Formula::Public(v, b) => {
                for f in v.iter() {
                    f.collect(props, agents);
                }
                b.collect(props, agents);
            }
            Formula::Update(p, b) => {
                p.model().collect(props, agents);
                b.collect(props, agents);
            }
        }
    }
}

/// The complexity measure that strictly decreases along every reduction
/// axiom, read left to right.
///
/// `c(p) = c(⊤) = 1`, `c(¬φ) = c(φ)+1`, `c(φ∧ψ) = max+1`, `c(K_i φ) = c(φ)+1`,
/// `c(H_i φ) = c(φ)+4`, `c([φ⃗]ψ) = (max_i c(φ_i) + 1)·c(ψ)` and
/// `c([U,e]ψ) = (c(U) + |E|)·c(ψ)`, where `c(U)` is the maximum complexity of
/// the hope update formulas and substitution overrides of `U`.
pub fn complexity(f: &Formula) -> u128 {
    match f {
        Formula::Top | Formula::Atom(_) => 1,
        Formula::Not(a) | Formula::Know(_, a) => complexity(a) + 1,
        Formula::And(a, b) => complexity(a).max(complexity(b)) + 1,
        Formula::Hope(_, a) => complexity(a) + 4,
        Formula::Public(v, b) => (vector_complexity(v) + 1) * complexity(b),
        Formula::Update(p, b) => {
            let u = p.model();
            (u.complexity() + u.action_count() as u128) * complexity(b)
        }
    }
}

pub fn vector_complexity(v: &[Formula]) -> u128 {
    v.iter().map(complexity).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: PropId = PropId(0);
    const Q: PropId = PropId(1);
    const A: AgentId = AgentId(0);

    #[test]
    fn complexity_of_basic_shapes() {
        assert_eq!(complexity(&Formula::atom(P)), 1);
        assert_eq!(complexity(&Formula::Top), 1);
        assert_eq!(complexity(&Formula::hope(A, Formula::atom(P))), 5);
        assert_eq!(complexity(&Formula::know(A, Formula::atom(P))), 2);
        // [p, p] q with two agents
        let f = Formula::public(vec![Formula::atom(P), Formula::atom(P)], Formula::atom(Q));
        assert_eq!(complexity(&f), 2);
        // H_a⊥ = H_a ¬⊤
        assert_eq!(complexity(&Formula::faulty(A)), 6);
        assert_eq!(complexity(&Formula::correct(A)), 7);
    }

    #[test]
    fn complexity_is_monotone_for_static_connectives() {
        let base = Formula::and(Formula::atom(P), Formula::hope(A, Formula::atom(Q)));
        let c = complexity(&base);
        for wrapped in [
            Formula::not(base.clone()),
            Formula::know(A, base.clone()),
            Formula::hope(A, base.clone()),
            Formula::and(base.clone(), Formula::Top),
            Formula::and(Formula::Top, base.clone()),
        ] {
            assert!(complexity(&wrapped) > c);
        }
    }

    #[test]
    fn big_connectives_nest_to_the_right() {
        let f = Formula::conj_all([Formula::atom(P), Formula::atom(Q), Formula::Top]);
        assert_eq!(f, Formula::and(Formula::atom(P), Formula::and(Formula::atom(Q), Formula::Top)));
        assert_eq!(Formula::conj_all([]), Formula::Top);
        assert_eq!(Formula::disj_all([]), Formula::bot());
        assert_eq!(Formula::disj_all([Formula::atom(P)]), Formula::atom(P));
    }

    #[test]
    fn static_detection() {
        assert!(Formula::belief(A, Formula::atom(P)).is_static());
        let f = Formula::not(Formula::public(vec![Formula::Top], Formula::atom(P)));
        assert!(!f.is_static());
        assert_eq!(f.dynamic_depth(), 1);
    }
}
