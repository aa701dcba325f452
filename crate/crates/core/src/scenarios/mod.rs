//! Worked scenarios: fixed models, updates and truth assertions that can be
//! run as checks.
//!
//! Every assertion is stored as formula text and goes through the parser, so
//! running a scenario also exercises the concrete syntax.

mod abp;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use abp::{abp_fault_and_recover, abp_run, abp_step, AbpError, AbpState};

use crate::checker::{EvalContext, EvalError};
use crate::formula::{parse, Formula, ParseError, UpdateRegistry};
use crate::kripke::{validate, world_set, KripkeModel, ModelError, Signature, WorldId};
use crate::partition::Partition;
use crate::update::{apply_public, product, UpdateModel};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("formula `{text}`: {source}")]
    Parse { text: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One truth claim about the initial model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub world: String,
    pub formula: String,
    pub expected: bool,
    /// What the claim says in words.
    pub note: String,
}

/// How the pictured updated model is obtained from the initial one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// A public hope update, one formula per agent.
    Public(Vec<String>),
    /// The full product with a registered update model.
    Product(String),
}

/// The expected correct sets after one update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Figure {
    pub step: Step,
    /// Agent name to the worlds where that agent is correct afterwards.
    pub correct: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub summary: String,
    pub model: KripkeModel,
    pub updates: UpdateRegistry,
    pub figure: Option<Figure>,
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Semantic evaluation with a shared cache.
    Direct,
    /// Every assertion is also checked against its translation.
    CrossCheck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionOutcome {
    pub assertion: Assertion,
    pub actual: bool,
}

impl AssertionOutcome {
    pub fn passed(&self) -> bool {
        self.actual == self.assertion.expected
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureOutcome {
    pub agent: String,
    pub expected: Vec<String>,
    pub actual: Vec<String>,
}

impl FigureOutcome {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub name: String,
    pub assertions: Vec<AssertionOutcome>,
    pub figure: Vec<FigureOutcome>,
    /// Number of KH violations in the initial and updated models.
    pub violations: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.assertions.iter().all(AssertionOutcome::passed)
            && self.figure.iter().all(FigureOutcome::passed)
    }
}

impl Scenario {
    pub fn parse(&self, text: &str) -> Result<Formula, ScenarioError> {
        parse(text, self.model.signature(), &self.updates)
            .map_err(|source| ScenarioError::Parse { text: text.to_string(), source })
    }

    /// The model the figure pictures, if the scenario has one.
    pub fn updated_model(&self) -> Result<Option<KripkeModel>, ScenarioError> {
        let Some(figure) = &self.figure else { return Ok(None) };
        let model = match &figure.step {
            Step::Public(texts) => {
                let v = texts.iter().map(|t| self.parse(t)).collect::<Result<Vec<_>, _>>()?;
                apply_public(&self.model, &v)?
            }
            Step::Product(name) => {
                let u = self.updates.get(name).ok_or_else(|| ScenarioError::Unknown(name.clone()))?;
                product(&self.model, u)?.model
            }
        };
        Ok(Some(model))
    }

    pub fn run(&self, mode: Mode) -> Result<Report, ScenarioError> {
        let mut ctx = match mode {
            Mode::Direct => EvalContext::with_memo(&self.model),
            Mode::CrossCheck => EvalContext::cross_checked(&self.model),
        };
        let mut assertions = Vec::with_capacity(self.assertions.len());
        for a in &self.assertions {
            let f = self.parse(&a.formula)?;
            let w = self.model.world(&a.world)?;
            let actual = ctx.eval(WorldId(w), &f)?;
            assertions.push(AssertionOutcome { assertion: a.clone(), actual });
        }

        let mut violations = validate(&self.model.to_raw()).violations.len();
        let mut figure = Vec::new();
        if let (Some(fig), Some(updated)) = (&self.figure, self.updated_model()?) {
            violations += validate(&updated.to_raw()).violations.len();
            for (agent, expected) in &fig.correct {
                let i = updated.agent(agent)?;
                let mut expected = expected.clone();
                expected.sort();
                let mut actual: Vec<String> =
                    updated.correct_set(i).ones().map(|w| updated.world_name(w).to_string()).collect();
                actual.sort();
                figure.push(FigureOutcome { agent: agent.clone(), expected, actual });
            }
        }
        Ok(Report { name: self.name.clone(), assertions, figure, violations })
    }
}

/// All built-in scenarios, in a fixed order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        conditional_correction(),
        diagnosed_by_peer(),
        self_correction(),
        fail_safe(),
        belief_correction(),
        private_correction(),
        uncertain_self_correction(),
        uncertain_recovery_source(),
        abp_fault_and_recover(),
    ]
}

pub fn scenario(name: &str) -> Result<Scenario, ScenarioError> {
    builtin_scenarios().into_iter().find(|s| s.name == name).ok_or_else(|| ScenarioError::Unknown(name.to_string()))
}

/// Builds a model from world names. `holds(w, p)` gives the valuation,
/// `view(w, i)` a label that agent `i` sees at `w` (equal labels are
/// indistinguishable) and `correct[i]` lists where agent `i` is correct.
pub(crate) fn build_model<L: Eq + std::hash::Hash>(
    agents: &[&str],
    props: &[&str],
    worlds: &[&str],
    holds: impl Fn(&str, usize) -> bool,
    view: impl Fn(&str, usize) -> L,
    correct: &[&[&str]],
) -> KripkeModel {
    let sig = Arc::new(Signature::new(agents.iter().copied(), props.iter().copied()).expect("valid signature"));
    let n = worlds.len();
    let index = |w: &str| worlds.iter().position(|x| *x == w).expect("listed world");
    let valuation = (0..props.len()).map(|p| world_set(n, (0..n).filter(|&w| holds(worlds[w], p)))).collect();
    let knowledge = (0..agents.len())
        .map(|i| Partition::from_labels(&worlds.iter().map(|w| view(w, i)).collect::<Vec<_>>()))
        .collect();
    let correct = correct.iter().map(|c| world_set(n, c.iter().map(|w| index(w)))).collect();
    KripkeModel::new(sig, worlds.iter().map(|w| w.to_string()).collect(), valuation, knowledge, correct)
        .expect("well-formed scenario model")
}

/// Parses formula text that is part of the built-in data.
pub(crate) fn formula(sig: &Signature, text: &str) -> Formula {
    parse(text, sig, &UpdateRegistry::new()).unwrap_or_else(|e| panic!("built-in formula `{text}`: {e}"))
}

pub(crate) fn claim(world: &str, formula: &str, expected: bool, note: &str) -> Assertion {
    Assertion { world: world.into(), formula: formula.into(), expected, note: note.into() }
}

pub(crate) fn correct_map(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    entries.iter().map(|(a, ws)| (a.to_string(), ws.iter().map(|w| w.to_string()).collect())).collect()
}

/// Two agents. World `ij` makes `p_a` true iff `i = 1` and `p_b` iff `j = 1`;
/// each agent sees only its own bit. a is correct only at 00, b everywhere
/// except 00.
pub fn two_agent_model() -> KripkeModel {
    build_model(
        &["a", "b"],
        &["p_a", "p_b"],
        &["00", "10", "01", "11"],
        |w, p| w.as_bytes()[p] == b'1',
        |w, i| w.as_bytes()[i],
        &[&["00"], &["10", "01", "11"]],
    )
}

fn public_scenario(
    name: &str,
    summary: &str,
    vector: [&str; 2],
    correct: &[(&str, &[&str])],
    assertions: Vec<Assertion>,
) -> Scenario {
    Scenario {
        name: name.into(),
        summary: summary.into(),
        model: two_agent_model(),
        updates: UpdateRegistry::new(),
        figure: Some(Figure {
            step: Step::Public(vector.iter().map(|s| s.to_string()).collect()),
            correct: correct_map(correct),
        }),
        assertions,
    }
}

const OK_A: &str = "~H{a} false";
const OK_B: &str = "~H{b} false";

fn conditional_correction() -> Scenario {
    let u = "[~H{a} false | p_b, ~H{b} false]";
    public_scenario(
        "conditional-correction",
        "a is made correct wherever p_b holds; b keeps its status",
        ["~H{a} false | p_b", OK_B],
        &[("a", &["00", "01", "11"]), ("b", &["10", "01", "11"])],
        vec![
            claim("00", "~H{a} false & ~K{a} ~H{a} false", true, "a is correct at 00 without knowing it"),
            claim("00", &format!("{u} K{{a}} ~H{{a}} false"), true, "afterwards a knows it is correct"),
            claim("01", &format!("{u} ~H{{a}} false"), true, "a becomes correct where p_b holds"),
            claim("10", &format!("{u} H{{a}} false"), true, "a stays faulty where p_b fails"),
        ],
    )
}

fn diagnosed_by_peer() -> Scenario {
    let u = "[~H{a} false | K{b} H{a} false]{a}";
    public_scenario(
        "diagnosed-by-peer",
        "a is corrected wherever b knows a is faulty",
        ["~H{a} false | K{b} H{a} false", OK_B],
        &[("a", &["00", "01", "11"]), ("b", &["10", "01", "11"])],
        vec![
            claim("00", &format!("{u} ~H{{a}} false"), true, "a stays correct"),
            claim("00", &format!("{u} K{{a}} ~H{{a}} false"), true, "a comes to know it is correct"),
            claim("10", &format!("{u} H{{a}} false"), true, "a stays faulty"),
            claim("10", &format!("{u} Kh{{a}} ~H{{a}} false"), true, "a now allows that it is correct"),
            claim("10", &format!("{u} K{{b}} Kh{{a}} ~H{{a}} false"), true, "b knows a allows that it is correct"),
        ],
    )
}

fn self_correction() -> Scenario {
    let u = "[~H{a} false | p_b & K{a} H{a} false]{a}";
    public_scenario(
        "self-correction",
        "a corrects itself when it knows it is faulty and p_b holds",
        ["~H{a} false | p_b & K{a} H{a} false", OK_B],
        &[("a", &["00", "11"]), ("b", &["10", "01", "11"])],
        vec![
            claim("00", &format!("{u} ~H{{a}} false"), true, "a stays correct"),
            claim("00", &format!("{u} Kh{{a}} H{{a}} false"), true, "a still allows that it is faulty"),
            claim("10", &format!("{u} H{{a}} false"), true, "a stays faulty"),
            claim("10", &format!("{u} Kh{{a}} ~H{{a}} false"), true, "a now allows that it is correct"),
            claim("10", &format!("{u} K{{b}} Kh{{a}} ~H{{a}} false"), true, "b knows a allows that it is correct"),
            claim("01", &format!("{u} H{{a}} false"), true, "a does not know it is faulty at 01, so stays faulty"),
        ],
    )
}

fn fail_safe() -> Scenario {
    let u = "[K{a} H{a} false]{a}";
    public_scenario(
        "fail-safe",
        "a is correct afterwards exactly where it knew it was faulty; elsewhere it halts as faulty",
        ["K{a} H{a} false", OK_B],
        &[("a", &["10", "11"]), ("b", &["10", "01", "11"])],
        vec![
            claim("00", &format!("{u} H{{a}} false"), true, "a fails itself"),
            claim("00", &format!("{u} K{{a}} H{{a}} false"), true, "a knows it has failed"),
            claim("10", &format!("{u} ~H{{a}} false"), true, "a becomes correct"),
            claim("10", &format!("{u} K{{a}} ~H{{a}} false"), true, "a knows it is correct"),
            claim("10", &format!("{u} Kh{{b}} K{{a}} ~H{{a}} false"), true, "b allows that a knows it is correct"),
        ],
    )
}

fn belief_correction() -> Scenario {
    let u = "[~H{b} false | B{a} H{b} false]{b}";
    public_scenario(
        "belief-correction",
        "b is corrected wherever a believes b is faulty",
        [OK_A, "~H{b} false | B{a} H{b} false"],
        &[("a", &["00"]), ("b", &["00", "10", "01", "11"])],
        vec![
            claim("00", "B{a} H{b} false", true, "before the update a believes b is faulty at 00"),
            claim("00", &format!("{u} ~H{{b}} false"), true, "b becomes correct"),
            claim("00", &format!("{u} K{{b}} ~H{{b}} false"), true, "b knows it is correct"),
            claim("00", &format!("{u} ~B{{a}} H{{b}} false"), true, "a stops believing b is faulty"),
            claim("01", &format!("{u} K{{a}} ~H{{b}} false"), true, "a knows b is correct"),
            claim("01", &format!("{u} K{{b}} K{{a}} ~H{{b}} false"), true, "b knows that a knows b is correct"),
        ],
    )
}

fn private_correction() -> Scenario {
    let model = two_agent_model();
    let u = "[U:c_pb]";
    let mut s = Scenario {
        name: "private-correction".into(),
        summary: "a is corrected where p_b holds while b cannot tell whether the correction happened".into(),
        model,
        updates: UpdateRegistry::new(),
        figure: Some(Figure {
            step: Step::Product("U".into()),
            correct: correct_map(&[
                ("a", &["00::c_pb", "01::c_pb", "11::c_pb", "00::noc"]),
                ("b", &["10::c_pb", "01::c_pb", "11::c_pb", "10::noc", "01::noc", "11::noc"]),
            ]),
        }),
        assertions: vec![
            claim("01", &format!("{u} (~H{{a}} false & K{{a}} ~H{{a}} false)"), true, "a is correct and knows it"),
            claim("01", &format!("{u} ~K{{b}} K{{a}} ~H{{a}} false"), true, "b does not know that a knows it"),
            claim(
                "01",
                &format!("{u} ~(K{{b}} H{{a}} false | K{{b}} ~H{{a}} false)"),
                true,
                "b does not know whether a is correct",
            ),
        ],
    };
    s.updates.insert(Arc::new(private_update(&s.model)));
    s
}

fn private_update(model: &KripkeModel) -> UpdateModel {
    let sig = model.signature();
    UpdateModel::without_change(
        "U",
        vec!["c_pb".into(), "noc".into()],
        vec![
            vec![formula(sig, "~H{a} false | p_b"), formula(sig, OK_B)],
            vec![formula(sig, OK_A), formula(sig, OK_B)],
        ],
        vec![Partition::identity(2), Partition::universal(2)],
    )
    .expect("valid update model")
}

fn uncertain_self_correction() -> Scenario {
    let agents = ["a", "b", "c"];
    let worlds = ["000", "100", "010", "110", "001", "101", "011", "111"];
    let model = build_model(
        &agents,
        &["p_a", "p_b", "p_c"],
        &worlds,
        |w, p| w.as_bytes()[p] == b'1',
        |w, i| w.as_bytes()[i],
        &[
            &["000", "010", "001", "011"],
            &["000", "100", "001", "101"],
            &["000", "100", "010", "110"],
        ],
    );
    let sig = model.signature().clone();
    let theta = (0..3)
        .map(|e| {
            (0..3)
                .map(|j| {
                    let a = agents[j];
                    if j == e {
                        formula(&sig, &format!("~H{{{a}}} false | true & K{{{a}}} H{{{a}}} false"))
                    } else {
                        formula(&sig, &format!("~H{{{a}}} false"))
                    }
                })
                .collect()
        })
        .collect();
    // e_i and e_k look alike to j iff i = j = k or j is in neither
    let relations = (0..3).map(|j| Partition::from_labels(&(0..3).map(|e| e == j).collect::<Vec<_>>())).collect();
    let u = UpdateModel::without_change("S", vec!["e_a".into(), "e_b".into(), "e_c".into()], theta, relations)
        .expect("valid update model");
    Scenario {
        name: "uncertain-self-correction".into(),
        summary: "one of three agents corrects itself and the others cannot tell which one".into(),
        model,
        updates: [Arc::new(u)].into_iter().collect(),
        figure: None,
        assertions: vec![
            claim("111", "[S:e_a] ~H{a} false", true, "a corrects itself"),
            claim("111", "[S:e_a] H{b} false", true, "b stays faulty"),
            claim("111", "[S:e_a] K{a} ~H{a} false", true, "a knows it is correct"),
            claim("111", "[S:e_a] (~K{b} ~H{a} false & ~K{b} H{a} false)", true, "b cannot tell whether a is correct"),
            claim("111", "[S:e_a] (Kh{b} ~H{c} false & Kh{b} ~H{a} false)", true, "b allows either a or c corrected itself"),
            claim("111", "[S:e_b] K{a} H{a} false", true, "a knows it stays faulty when b corrects itself"),
        ],
    }
}

fn uncertain_recovery_source() -> Scenario {
    let model = build_model(
        &["a", "b", "c"],
        &["recv_b", "recv_c"],
        &["00", "10", "01", "11"],
        |w, p| w.as_bytes()[p] == b'1',
        |w, i| if i == 0 { String::new() } else { w.to_string() },
        &[&[], &["00", "10", "01", "11"], &["00", "10", "01", "11"]],
    );
    let sig = model.signature().clone();
    let theta = ["recv_b", "recv_c"]
        .iter()
        .map(|r| {
            vec![
                formula(&sig, &format!("~H{{a}} false | {r} & K{{a}} H{{a}} false")),
                formula(&sig, OK_B),
                formula(&sig, "~H{c} false"),
            ]
        })
        .collect();
    let relations = vec![Partition::identity(2), Partition::universal(2), Partition::universal(2)];
    let u = UpdateModel::without_change("R", vec!["e_b".into(), "e_c".into()], theta, relations)
        .expect("valid update model");
    Scenario {
        name: "uncertain-recovery-source".into(),
        summary: "a recovers using state from b or from c; only a knows which".into(),
        model,
        updates: [Arc::new(u)].into_iter().collect(),
        figure: None,
        assertions: vec![
            claim("10", "[R:e_b] ~H{a} false", true, "recovery from b succeeds where b's data arrived"),
            claim("10", "[R:e_c] H{a} false", true, "recovery from c fails where c's data is missing"),
            claim("10", "[R:e_b] Kh{b} H{a} false", true, "b allows that a is still faulty"),
            claim("10", "[R:e_b] Kh{a} H{a} false", true, "a allows that it is still faulty"),
            claim("11", "[R:e_c] K{b} ~H{a} false", true, "b knows a recovered when both sources are available"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_passes_in_both_modes() {
        for s in builtin_scenarios() {
            for mode in [Mode::Direct, Mode::CrossCheck] {
                let r = s.run(mode).unwrap();
                assert!(r.passed(), "{} {:?}: {:#?}", s.name, mode, r);
            }
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        assert!(n >= 8);
    }

    #[test]
    fn wrong_expectation_is_reported() {
        let mut s = scenario("fail-safe").unwrap();
        s.assertions[0].expected = false;
        assert!(!s.run(Mode::Direct).unwrap().passed());
    }
}
