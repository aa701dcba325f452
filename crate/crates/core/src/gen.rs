//! Seeded random generation of KH models, formulas and update models, used
//! by the property tests, the countermodel probe and the CLI.
//!
//! Any KH model is determined by a partition and a correct-set per agent plus
//! a valuation, so sampling those three independently reaches every shape.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::Formula;
use crate::kripke::{AgentId, KripkeModel, PropId, Signature, WorldSet};
use crate::partition::Partition;
use crate::update::{PointedUpdate, UpdateModel};

fn random_subset<R: Rng>(rng: &mut R, n: usize) -> WorldSet {
    let mut s = WorldSet::with_capacity(n);
    match rng.gen_range(0..8) {
        0 => {}
        1 => s.insert_range(..),
        _ => s.extend((0..n).filter(|_| rng.gen_bool(0.5))),
    }
    s
}

pub fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Partition {
    let blocks = rng.gen_range(1..=n.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
    Partition::from_labels(&labels)
}

/// A random model with `worlds` worlds where every proposition is random.
pub fn random_model<R: Rng>(rng: &mut R, sig: &Arc<Signature>, worlds: usize) -> KripkeModel {
    let props: Vec<PropId> = sig.props().collect();
    random_model_over(rng, sig, worlds, &props)
}

/// A random model whose valuation is random on `props` and false elsewhere.
pub fn random_model_over<R: Rng>(rng: &mut R, sig: &Arc<Signature>, worlds: usize, props: &[PropId]) -> KripkeModel {
    let mut valuation = vec![WorldSet::with_capacity(worlds); sig.prop_count()];
    for p in props {
        valuation[p.0].extend((0..worlds).filter(|_| rng.gen_bool(0.5)));
    }
    let knowledge = sig.agents().map(|_| random_partition(rng, worlds)).collect();
    let correct = sig.agents().map(|_| random_subset(rng, worlds)).collect();
    KripkeModel::new(sig.clone(), (0..worlds).map(|w| format!("w{w}")).collect(), valuation, knowledge, correct)
        .expect("generated model is well-formed")
}

fn random_leaf<R: Rng>(rng: &mut R, sig: &Signature) -> Formula {
    let n = sig.agent_count();
    match rng.gen_range(0..10) {
        0 => Formula::Top,
        1 => Formula::bot(),
        2 | 3 if n > 0 => Formula::correct(AgentId(rng.gen_range(0..n))),
        _ if sig.prop_count() > 0 => Formula::Atom(PropId(rng.gen_range(0..sig.prop_count()))),
        _ => Formula::Top,
    }
}

/// A random formula of the static language with modal depth at most `depth`.
pub fn random_static<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> Formula {
    if depth == 0 || rng.gen_range(0..5) == 0 {
        return random_leaf(rng, sig);
    }
    let i = AgentId(rng.gen_range(0..sig.agent_count()));
    match rng.gen_range(0..8) {
        0 => Formula::not(random_static(rng, sig, depth - 1)),
        1 => Formula::and(random_static(rng, sig, depth - 1), random_static(rng, sig, depth - 1)),
        2 => Formula::or(random_static(rng, sig, depth - 1), random_static(rng, sig, depth - 1)),
        3 => Formula::implies(random_static(rng, sig, depth - 1), random_static(rng, sig, depth - 1)),
        4 => Formula::know(i, random_static(rng, sig, depth - 1)),
        5 => Formula::hope(i, random_static(rng, sig, depth - 1)),
        6 => Formula::belief(i, random_static(rng, sig, depth - 1)),
        _ => Formula::k_hat(i, random_static(rng, sig, depth - 1)),
    }
}

/// A public update vector of static formulas. Each position is either the
/// trivial `¬H_i⊥`, a correction `¬H_i⊥ ∨ φ`, or an arbitrary formula.
pub fn random_vector<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> Vec<Formula> {
    sig.agents()
        .map(|i| match rng.gen_range(0..4) {
            0 => Formula::correct(i),
            1 => Formula::or(Formula::correct(i), random_static(rng, sig, depth)),
            _ => random_static(rng, sig, depth),
        })
        .collect()
}

/// A random update model with `actions` actions. With `factual`, each
/// action overrides a random subset of the propositions.
pub fn random_update_model<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    name: &str,
    actions: usize,
    payload_depth: usize,
    factual: bool,
) -> UpdateModel {
    let names: Vec<String> = (0..actions).map(|e| format!("e{e}")).collect();
    let theta = (0..actions).map(|_| random_vector(rng, sig, payload_depth)).collect();
    let sigma = (0..actions)
        .map(|_| {
            let mut m = BTreeMap::new();
            if factual {
                for p in sig.props() {
                    if rng.gen_bool(0.5) {
                        m.insert(p, random_static(rng, sig, payload_depth));
                    }
                }
            }
            m
        })
        .collect();
    let relations = sig.agents().map(|_| random_partition(rng, actions)).collect();
    UpdateModel::new(name, names, theta, sigma, relations).expect("generated update model is well-formed")
}

/// Settings for random formulas with dynamic operators.
#[derive(Clone, Debug)]
pub struct DynamicGen {
    /// Depth of static connectives between dynamic operators.
    pub depth: usize,
    /// Maximum nesting of dynamic operators.
    pub dynamic_depth: usize,
    pub payload_depth: usize,
    pub max_actions: usize,
    pub factual: bool,
    next: usize,
}

impl DynamicGen {
    pub fn new(depth: usize, dynamic_depth: usize) -> Self {
        DynamicGen { depth, dynamic_depth, payload_depth: 1, max_actions: 3, factual: true, next: 0 }
    }

    fn fresh_name(&mut self) -> String {
        self.next += 1;
        format!("U{}", self.next)
    }

    pub fn pointed_update<R: Rng>(&mut self, rng: &mut R, sig: &Signature) -> PointedUpdate {
        let actions = rng.gen_range(1..=self.max_actions);
        let factual = self.factual && rng.gen_bool(0.5);
        let name = self.fresh_name();
        let u = Arc::new(random_update_model(rng, sig, &name, actions, self.payload_depth, factual));
        PointedUpdate::new(u, rng.gen_range(0..actions)).expect("action in range")
    }

    /// A formula containing at least one dynamic operator. Directly nested
    /// dynamic operators appear often, so composition gets exercised.
    pub fn formula<R: Rng>(&mut self, rng: &mut R, sig: &Signature) -> Formula {
        let f = self.build(rng, sig, self.depth, self.dynamic_depth);
        if f.is_static() {
            self.wrap(rng, sig, f)
        } else {
            f
        }
    }

    fn wrap<R: Rng>(&mut self, rng: &mut R, sig: &Signature, body: Formula) -> Formula {
        if rng.gen_bool(0.5) {
            Formula::public(random_vector(rng, sig, self.payload_depth), body)
        } else {
            Formula::update(self.pointed_update(rng, sig), body)
        }
    }

    fn build<R: Rng>(&mut self, rng: &mut R, sig: &Signature, depth: usize, dynamic: usize) -> Formula {
        if dynamic > 0 && rng.gen_range(0..3) == 0 {
            let body = self.build(rng, sig, depth, dynamic - 1);
            return self.wrap(rng, sig, body);
        }
        if depth == 0 {
            return random_leaf(rng, sig);
        }
        let i = AgentId(rng.gen_range(0..sig.agent_count()));
        let sub = |g: &mut Self, rng: &mut R| g.build(rng, sig, depth - 1, dynamic);
        match rng.gen_range(0..6) {
            0 => Formula::not(sub(self, rng)),
            1 => {
                let a = sub(self, rng);
                Formula::and(a, sub(self, rng))
            }
            2 => Formula::know(i, sub(self, rng)),
            3 => Formula::hope(i, sub(self, rng)),
            4 => random_leaf(rng, sig),
            _ => {
                let a = sub(self, rng);
                Formula::or(a, sub(self, rng))
            }
        }
    }
}

/// A random signature-preserving relabelling of worlds, for isomorphism tests.
pub fn shuffled<R: Rng>(rng: &mut R, m: &KripkeModel) -> KripkeModel {
    let mut order: Vec<usize> = (0..m.world_count()).collect();
    order.shuffle(rng);
    let names = order.iter().map(|&w| format!("{}'", m.world_name(w))).collect();
    m.reordered(&order, names).expect("permutation of a valid model")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generation_is_deterministic_and_valid() {
        let sig = Arc::new(Signature::new(["a", "b", "c"], ["p", "q"]).unwrap());
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_model(&mut r1, &sig, 5);
            assert_eq!(m, random_model(&mut r2, &sig, 5));
            assert!(validate(&m.to_raw()).is_empty());
        }
    }

    #[test]
    fn dynamic_formulas_are_dynamic() {
        let sig = Signature::new(["a", "b"], ["p"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = DynamicGen::new(2, 3);
        for _ in 0..100 {
            let f = g.formula(&mut rng, &sig);
            assert!(!f.is_static());
            assert!(f.dynamic_depth() <= 3);
        }
    }
}
