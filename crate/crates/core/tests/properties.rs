use std::collections::BTreeSet;
use std::sync::Arc;

use hopelogic::checker::EvalContext;
use hopelogic::formula::DerivedForm;
use hopelogic::gen::{self, DynamicGen};
use hopelogic::iso::{equal_under_renaming, find_isomorphism, is_isomorphism};
use hopelogic::kripke::{Relation, WorldSet};
use hopelogic::{
    apply_public, compose, embed_public, extension, find_countermodel, parse, product, validate, AgentId, Formula,
    KripkeModel, Printer, RawModel, SearchBounds, Signature, UpdateRegistry,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sig() -> Arc<Signature> {
    Arc::new(Signature::new(["a", "b"], ["p", "q"]).unwrap())
}

/// A second evaluator working pointwise on explicit relations, sharing no
/// code with the library's semantics.
struct Oracle {
    worlds: usize,
    valuation: Vec<BTreeSet<usize>>,
    knowledge: Vec<Relation>,
    hope: Vec<Relation>,
}

impl Oracle {
    fn from_model(m: &KripkeModel) -> Self {
        let raw = m.to_raw();
        Oracle {
            worlds: raw.worlds.len(),
            valuation: raw.valuation.iter().map(|s| s.ones().collect()).collect(),
            knowledge: raw.knowledge,
            hope: raw.hope,
        }
    }

    fn succ(rel: &Relation, w: usize) -> Vec<usize> {
        rel.iter().filter(|(x, _)| *x == w).map(|&(_, y)| y).collect()
    }

    fn holds(&self, f: &Formula, w: usize) -> bool {
        match f {
            Formula::Top => true,
            Formula::Atom(p) => self.valuation[p.0].contains(&w),
            Formula::Not(a) => !self.holds(a, w),
            Formula::And(a, b) => self.holds(a, w) && self.holds(b, w),
            Formula::Know(i, a) => Self::succ(&self.knowledge[i.0], w).into_iter().all(|v| self.holds(a, v)),
            Formula::Hope(i, a) => Self::succ(&self.hope[i.0], w).into_iter().all(|v| self.holds(a, v)),
            Formula::Public(v, body) => {
                let hope = self
                    .knowledge
                    .iter()
                    .zip(v.iter())
                    .map(|(k, phi)| k.iter().copied().filter(|&(x, y)| self.holds(phi, x) && self.holds(phi, y)).collect())
                    .collect();
                let next = Oracle {
                    worlds: self.worlds,
                    valuation: self.valuation.clone(),
                    knowledge: self.knowledge.clone(),
                    hope,
                };
                next.holds(body, w)
            }
            Formula::Update(point, body) => {
                let u = point.model();
                let ne = u.action_count();
                let pair = |x: usize| (x / ne, x % ne);
                let size = self.worlds * ne;
                let valuation = (0..self.valuation.len())
                    .map(|p| {
                        (0..size)
                            .filter(|&x| {
                                let (v, e) = pair(x);
                                self.holds(&u.sigma(e, hopelogic::PropId(p)), v)
                            })
                            .collect()
                    })
                    .collect();
                let mut knowledge = vec![Relation::new(); self.knowledge.len()];
                let mut hope = vec![Relation::new(); self.knowledge.len()];
                for i in 0..self.knowledge.len() {
                    let a = AgentId(i);
                    for x in 0..size {
                        for y in 0..size {
                            let ((v, e), (v2, e2)) = (pair(x), pair(y));
                            if self.knowledge[i].contains(&(v, v2)) && u.relation(a).related(e, e2) {
                                knowledge[i].insert((x, y));
                                if self.holds(u.theta(e, a), v) && self.holds(u.theta(e2, a), v2) {
                                    hope[i].insert((x, y));
                                }
                            }
                        }
                    }
                }
                let next = Oracle { worlds: size, valuation, knowledge, hope };
                next.holds(body, w * ne + point.action())
            }
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn model(r: &mut ChaCha8Rng, s: &Arc<Signature>, max: usize) -> KripkeModel {
    let n = r.gen_range(1..=max);
    gen::random_model(r, s, n)
}

/// Update models mentioned anywhere in `f`, for printing and re-parsing.
fn registry(f: &Formula, reg: &mut UpdateRegistry) {
    match f {
        Formula::Top | Formula::Atom(_) => {}
        Formula::Not(a) | Formula::Know(_, a) | Formula::Hope(_, a) => registry(a, reg),
        Formula::And(a, b) => {
            registry(a, reg);
            registry(b, reg);
        }
        Formula::Public(v, body) => {
            v.iter().for_each(|x| registry(x, reg));
            registry(body, reg);
        }
        Formula::Update(p, body) => {
            reg.insert(p.model().clone());
            let u = p.model();
            for e in 0..u.action_count() {
                for i in 0..u.agent_count() {
                    registry(u.theta(e, AgentId(i)), reg);
                }
                u.overrides(e).values().for_each(|x| registry(x, reg));
            }
            registry(body, reg);
        }
    }
}

/// Brute-force KH check straight from the definitions.
fn brute_force_kh(raw: &RawModel) -> bool {
    let n = raw.worlds.len();
    let all = 0..n;
    raw.knowledge.iter().zip(&raw.hope).all(|(k, h)| {
        let reflexive = all.clone().all(|w| k.contains(&(w, w)));
        let symmetric = k.iter().all(|&(w, v)| k.contains(&(v, w)));
        let transitive = k.iter().all(|&(w, v)| k.iter().filter(|(x, _)| *x == v).all(|&(_, u)| k.contains(&(w, u))));
        let shift_serial = h.iter().all(|&(_, v)| h.iter().any(|(x, _)| *x == v));
        let h_in_k = h.is_subset(k);
        let correct = |w: usize| h.iter().any(|(x, _)| *x == w);
        let one_h = k.iter().all(|&(w, v)| !(correct(w) && correct(v)) || h.contains(&(w, v)));
        n > 0 && reflexive && symmetric && transitive && shift_serial && h_in_k && one_h
    })
}

fn random_raw(r: &mut ChaCha8Rng, s: &Arc<Signature>) -> RawModel {
    let m = model(r, s, 4);
    let mut raw = m.to_raw();
    let n = raw.worlds.len();
    // perturb some relations so that both outcomes occur
    for rel in raw.knowledge.iter_mut().chain(raw.hope.iter_mut()) {
        if r.gen_bool(0.4) {
            let (x, y) = (r.gen_range(0..n), r.gen_range(0..n));
            if !rel.remove(&(x, y)) {
                rel.insert((x, y));
            }
        }
    }
    raw
}

fn ones(s: &WorldSet) -> Vec<usize> {
    s.ones().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evaluation_matches_relational_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 3);
        let mut g = DynamicGen::new(2, 2);
        g.max_actions = 2;
        let f = if r.gen_bool(0.3) { gen::random_static(&mut r, &s, 3) } else { g.formula(&mut r, &s) };
        let oracle = Oracle::from_model(&m);
        let ext = extension(&m, &f).unwrap();
        for w in 0..m.world_count() {
            prop_assert_eq!(ext.contains(w), oracle.holds(&f, w));
        }
    }

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let f = if r.gen_bool(0.5) { gen::random_static(&mut r, &s, 4) } else { DynamicGen::new(2, 2).formula(&mut r, &s) };
        let mut reg = UpdateRegistry::new();
        registry(&f, &mut reg);
        let text = Printer::new(&s).print(&f);
        prop_assert_eq!(parse(&text, &s, &reg).unwrap(), f, "{}", text);
    }

    #[test]
    fn updates_stay_in_kh(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 5);
        let v = gen::random_vector(&mut r, &s, 2);
        let u = gen::random_update_model(&mut r, &s, "U", 3, 2, true);
        prop_assert!(validate(&apply_public(&m, &v).unwrap().to_raw()).is_empty());
        prop_assert!(validate(&hopelogic::update::product_relations(&m, &u).unwrap()).is_empty());
    }

    #[test]
    fn validate_agrees_with_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = random_raw(&mut r, &sig());
        prop_assert_eq!(validate(&raw).is_empty(), brute_force_kh(&raw));
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 3);
        let u = Arc::new(gen::random_update_model(&mut r, &s, "U", 2, 1, true));
        let v = Arc::new(gen::random_update_model(&mut r, &s, "V", 2, 1, true));
        let w = gen::random_update_model(&mut r, &s, "W", 2, 1, true);
        let left = compose(&Arc::new(compose(&u, &v).unwrap()), &w).unwrap();
        let right = compose(&u, &compose(&v, &w).unwrap()).unwrap();
        let a = product(&m, &left).unwrap().model;
        let b = product(&m, &right).unwrap().model;
        prop_assert!(equal_under_renaming(&a, &b));
    }

    #[test]
    fn public_update_is_a_singleton_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 4);
        let v = gen::random_vector(&mut r, &s, 2);
        let point = embed_public(&v, 2).unwrap();
        let via_product = product(&m, point.model()).unwrap().model;
        prop_assert!(equal_under_renaming(&via_product, &apply_public(&m, &v).unwrap()));
        let body = gen::random_static(&mut r, &s, 2);
        prop_assert_eq!(
            extension(&m, &Formula::public(v, body.clone())).unwrap(),
            extension(&m, &Formula::update(point, body)).unwrap()
        );
    }

    #[test]
    fn cache_does_not_change_results(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 4);
        let mut cached = EvalContext::with_memo(&m);
        let mut g = DynamicGen::new(2, 2);
        for _ in 0..5 {
            let f = g.formula(&mut r, &s);
            prop_assert_eq!(cached.extension(&f).unwrap(), extension(&m, &f).unwrap());
            prop_assert_eq!(cached.extension(&f).unwrap(), extension(&m, &f).unwrap());
        }
    }

    #[test]
    fn belief_is_knowledge_among_correct_worlds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = sig();
        let m = model(&mut r, &s, 5);
        let phi = gen::random_static(&mut r, &s, 2);
        let i = AgentId(r.gen_range(0..2));
        let ext = extension(&m, &phi).unwrap();
        let expected: Vec<usize> = (0..m.world_count())
            .filter(|&w| m.knowledge(i).class(w).iter().all(|&v| !m.correct_set(i).contains(v) || ext.contains(v)))
            .collect();
        prop_assert_eq!(ones(&extension(&m, &Formula::belief(i, phi)).unwrap()), expected);
    }

    #[test]
    fn shuffled_models_are_isomorphic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = model(&mut r, &sig(), 6);
        let t = gen::shuffled(&mut r, &m);
        let map = find_isomorphism(&m, &t).expect("isomorphic");
        prop_assert!(is_isomorphism(&m, &t, &map));
    }
}

#[test]
fn weakened_byz_threshold_has_countermodel() {
    // with one update formula fewer required than Byz_f needs, it can fail
    let s = Arc::new(Signature::new(["a", "b"], ["x_0", "x_1"]).unwrap());
    let x: Vec<Formula> = (0..2).map(|i| Formula::Atom(hopelogic::PropId(i))).collect();
    let byz0 = DerivedForm::Byz(0).expand(2).unwrap();
    let one = DerivedForm::Threshold(x.clone(), 1).expand(2).unwrap();
    let f = Formula::implies(one, Formula::public(x, byz0));
    let out = find_countermodel(&f, &s, &SearchBounds::default()).unwrap();
    assert!(out.countermodel.is_some());
}

#[test]
fn factual_change_reads_the_source_model() {
    // swapping p and q simultaneously must use the old values of both
    let s = sig();
    let mut r = rng(11);
    let m = model(&mut r, &s, 4);
    let (p, q) = (hopelogic::PropId(0), hopelogic::PropId(1));
    let sigma = vec![[(p, Formula::Atom(q)), (q, Formula::Atom(p))].into_iter().collect()];
    let theta = vec![vec![Formula::correct(AgentId(0)), Formula::correct(AgentId(1))]];
    let u = hopelogic::UpdateModel::new(
        "swap",
        vec!["e".into()],
        theta,
        sigma,
        vec![hopelogic::partition::Partition::identity(1); 2],
    )
    .unwrap();
    let after = product(&m, &u).unwrap().model;
    assert_eq!(ones(after.valuation(p)), ones(m.valuation(q)));
    assert_eq!(ones(after.valuation(q)), ones(m.valuation(p)));
}
