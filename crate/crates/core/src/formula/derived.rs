use itertools::Itertools;

use super::Formula;
use crate::kripke::AgentId;

/// Largest agent count for which the subset-indexed forms are expanded.
/// Their size grows as `binomial(n, k)`.
pub const DEFAULT_EXPANSION_BOUND: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpansionError {
    #[error("threshold {k} is out of range for {n} agents")]
    OutOfRange { k: usize, n: usize },
    #[error("{n} agents exceeds the expansion bound {bound}")]
    TooManyAgents { n: usize, bound: usize },
    #[error("expected {expected} formulas, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("agent index {0} out of range")]
    UnknownAgent(usize),
}

/// Abbreviations that expand into core formulas over a fixed set of `n` agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedForm {
    /// At most `f` of the agents are faulty.
    Byz(usize),
    /// Some `k` agents all believe `ψ`.
    BAtLeast(usize, Formula),
    /// At least `k` of the formulas hold.
    Threshold(Vec<Formula>, usize),
    /// `E_G φ`: everybody in `G` knows `φ`.
    MutualKnow(Vec<AgentId>, Formula),
    /// `[φ]_i ψ`: agent `i` is updated with `φ`, all others keep their hope.
    UpdSingle(AgentId, Formula, Formula),
    /// `[φ]_G ψ`: every agent in `G` is updated with `φ`, all others keep their hope.
    UpdGroup(Vec<AgentId>, Formula, Formula),
}

fn subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n).combinations(k)
}

fn check(n: usize, k: usize, bound: usize) -> Result<(), ExpansionError> {
    if n > bound {
        return Err(ExpansionError::TooManyAgents { n, bound });
    }
    if k > n {
        return Err(ExpansionError::OutOfRange { k, n });
    }
    Ok(())
}

impl DerivedForm {
    pub fn expand(&self, n: usize) -> Result<Formula, ExpansionError> {
        self.expand_bounded(n, DEFAULT_EXPANSION_BOUND)
    }

    pub fn expand_bounded(&self, n: usize, bound: usize) -> Result<Formula, ExpansionError> {
        match self {
            DerivedForm::Byz(f) => {
                check(n, *f, bound)?;
                Ok(Formula::disj_all(
                    subsets(n, n - f).map(|g| Formula::conj_all(g.into_iter().map(|i| Formula::correct(AgentId(i))))),
                ))
            }
            DerivedForm::BAtLeast(k, psi) => {
                check(n, *k, bound)?;
                Ok(Formula::disj_all(subsets(n, *k).map(|g| {
                    Formula::conj_all(g.into_iter().map(|i| Formula::belief(AgentId(i), psi.clone())))
                })))
            }
            DerivedForm::Threshold(v, k) => {
                check(n, *k, bound)?;
                if v.len() != n {
                    return Err(ExpansionError::Arity { expected: n, got: v.len() });
                }
                Ok(Formula::disj_all(
                    subsets(n, *k).map(|g| Formula::conj_all(g.into_iter().map(|i| v[i].clone()))),
                ))
            }
            DerivedForm::MutualKnow(g, phi) => {
                if let Some(bad) = g.iter().find(|i| i.0 >= n) {
                    return Err(ExpansionError::UnknownAgent(bad.0));
                }
                Ok(Formula::conj_all(g.iter().map(|&i| Formula::know(i, phi.clone()))))
            }
            DerivedForm::UpdSingle(i, phi, body) => {
                DerivedForm::UpdGroup(vec![*i], phi.clone(), body.clone()).expand_bounded(n, bound)
            }
            DerivedForm::UpdGroup(g, phi, body) => {
                if let Some(bad) = g.iter().find(|i| i.0 >= n) {
                    return Err(ExpansionError::UnknownAgent(bad.0));
                }
                Ok(Formula::public(trivial_vector_except(n, g, phi), body.clone()))
            }
        }
    }
}

/// The update vector with `φ` at each position in `group` and `¬H_j⊥` elsewhere.
pub(crate) fn trivial_vector_except(n: usize, group: &[AgentId], phi: &Formula) -> Vec<Formula> {
    (0..n)
        .map(|j| if group.contains(&AgentId(j)) { phi.clone() } else { Formula::correct(AgentId(j)) })
        .collect()
}
