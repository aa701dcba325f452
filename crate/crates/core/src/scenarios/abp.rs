//! The alternating bit protocol as a state machine, and the receiver's
//! self-correction with state recovery as a scenario.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{build_model, claim, correct_map, formula, Figure, Scenario, Step};
use crate::partition::Partition;
use crate::update::UpdateModel;

/// Local variables of sender and receiver. `phase` is the phase the next
/// step performs, in `1..=6`; `packet` counts packets already delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AbpState {
    pub q_s: bool,
    pub q_r: bool,
    pub p_s: bool,
    pub p_r: bool,
    pub phase: u8,
    pub packet: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbpError {
    #[error("protocol stalls in phase {phase} at {state}")]
    Stalled { phase: u8, state: AbpState },
    #[error("phase {0} is out of range")]
    BadPhase(u8),
}

impl AbpState {
    /// Sender about to start a packet: `(q_s, q_r) = (0, 0)`, `(p_s, p_r) = (1, 1)`.
    pub fn initial() -> Self {
        AbpState { q_s: false, q_r: false, p_s: true, p_r: true, phase: 1, packet: 0 }
    }

    /// The receiver's backup disagrees with its sequence number.
    pub fn receiver_consistent(&self) -> bool {
        self.p_r != self.q_r
    }

    /// Same variables, ignoring phase and packet count.
    pub fn same_variables(&self, other: &AbpState) -> bool {
        (self.q_s, self.q_r, self.p_s, self.p_r) == (other.q_s, other.q_r, other.p_s, other.p_r)
    }

    /// The receiver recovers its sequence number from the backup if they agree.
    pub fn recover_receiver(mut self) -> Self {
        if self.p_r == self.q_r {
            self.q_r = !self.p_r;
        }
        self
    }

    /// Name of the matching world in the epistemic model, `p_s q_s.p_r q_r`.
    pub fn world_name(&self) -> String {
        let b = |x: bool| if x { '1' } else { '0' };
        format!("{}{}.{}{}", b(self.p_s), b(self.q_s), b(self.p_r), b(self.q_r))
    }
}

impl fmt::Display for AbpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |x: bool| x as u8;
        write!(
            f,
            "(q_s,q_r)=({},{}) (p_s,p_r)=({},{}) phase {}",
            b(self.q_s),
            b(self.q_r),
            b(self.p_s),
            b(self.p_r),
            self.phase
        )
    }
}

/// Performs one phase. Phases 1 and 4 start a packet, 2 and 5 deliver it,
/// 3 and 6 deliver the acknowledgement.
pub fn abp_step(s: AbpState) -> Result<AbpState, AbpError> {
    let stalled = Err(AbpError::Stalled { phase: s.phase, state: s });
    let mut next = s;
    match s.phase {
        1 | 4 => {
            if s.q_s == s.p_s {
                return stalled;
            }
            next.p_s = s.q_s;
        }
        2 | 5 => {
            // the message carries p_s and is accepted if it matches q_r
            if s.p_s != s.q_r {
                return stalled;
            }
            next.q_r = !s.q_r;
            next.p_r = !s.p_r;
        }
        3 | 6 => {
            // the acknowledgement carries the receiver's previous q_r
            if !s.q_r != s.p_s {
                return stalled;
            }
            next.q_s = !s.p_s;
            next.packet += 1;
        }
        p => return Err(AbpError::BadPhase(p)),
    }
    next.phase = s.phase % 6 + 1;
    Ok(next)
}

/// Runs the protocol from [`AbpState::initial`] for `packets` packets. The
/// trace starts with the initial state and has one entry per phase.
pub fn abp_run(packets: u64) -> Result<Vec<AbpState>, AbpError> {
    let mut trace = vec![AbpState::initial()];
    let mut s = AbpState::initial();
    for _ in 0..packets * 3 {
        s = abp_step(s)?;
        trace.push(s);
    }
    Ok(trace)
}

/// Four worlds coded `p_s q_s.p_r q_r`. Each agent sees its own two bits;
/// the sender is correct everywhere and the receiver exactly where
/// `p_r ≠ q_r`. The update lets the receiver correct itself and reset `q_r`
/// to `¬p_r`, privately from the sender.
pub fn abp_fault_and_recover() -> Scenario {
    let worlds = ["00.00", "00.01", "01.00", "01.01"];
    let model = build_model(
        &["s", "r"],
        &["p_s", "q_s", "p_r", "q_r"],
        &worlds,
        |w, p| w.as_bytes()[[0, 1, 3, 4][p]] == b'1',
        |w, i| if i == 0 { w[..2].to_string() } else { w[3..].to_string() },
        &[&worlds, &["00.01", "01.01"]],
    );
    let sig = model.signature().clone();
    let q_r = sig.prop("q_r").expect("q_r");
    let sigma = vec![BTreeMap::from([(q_r, formula(&sig, "~p_r"))]), BTreeMap::new()];
    let ok_s = formula(&sig, "~H{s} false");
    let u = UpdateModel::new(
        "U",
        vec!["scr".into(), "noscr".into()],
        vec![
            vec![ok_s.clone(), formula(&sig, "~H{r} false | (p_r <-> q_r)")],
            vec![ok_s, formula(&sig, "~H{r} false")],
        ],
        sigma,
        vec![Partition::universal(2), Partition::identity(2)],
    )
    .expect("valid update model");

    let mut assertions = vec![
        claim("00.00", "[U:scr] (~H{r} false & K{r} q_r)", true, "r is correct and knows the recovered q_r"),
        claim("00.00", "[U:scr] K{r} ~H{r} false", true, "r is sure it is correct"),
        claim("00.00", "[U:scr] (~K{r} q_s & ~K{r} ~q_s)", true, "r still does not know q_s"),
        claim("00.00", "[U:scr] Kh{s} H{r} false", true, "s allows that r is still faulty"),
    ];
    for w in worlds {
        assertions.push(claim(w, "H{r} false <-> (p_r <-> q_r)", true, "r is faulty exactly where p_r and q_r agree"));
    }
    let all: Vec<String> = worlds.iter().flat_map(|w| [format!("{w}::scr"), format!("{w}::noscr")]).collect();
    let all: Vec<&str> = all.iter().map(String::as_str).collect();
    Scenario {
        name: "abp-recovery".into(),
        summary: "the receiver of the alternating bit protocol detects p_r = q_r, corrects itself and resets q_r; \
                  the sender cannot tell whether this happened"
            .into(),
        model,
        updates: [Arc::new(u)].into_iter().collect(),
        figure: Some(Figure {
            step: Step::Product("U".into()),
            correct: correct_map(&[
                ("s", &all),
                ("r", &["00.00::scr", "00.01::scr", "01.00::scr", "01.01::scr", "00.01::noscr", "01.01::noscr"]),
            ]),
        }),
        assertions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::Mode;

    #[test]
    fn phases_match_the_table() {
        let t = abp_run(2).unwrap();
        let vars = |s: &AbpState| (s.q_s as u8, s.q_r as u8, s.p_s as u8, s.p_r as u8);
        let expected = [(0, 0, 1, 1), (0, 0, 0, 1), (0, 1, 0, 0), (1, 1, 0, 0), (1, 1, 1, 0), (1, 0, 1, 1), (0, 0, 1, 1)];
        assert_eq!(t.iter().map(vars).collect::<Vec<_>>(), expected);
        assert_eq!(t[6].packet, 2);
        assert!(t.iter().all(AbpState::receiver_consistent));
    }

    #[test]
    fn flipped_sender_bit_deadlocks() {
        let t = abp_run(1).unwrap();
        let mut s = *t.last().unwrap();
        s.q_s = !s.q_s;
        assert!(matches!(abp_step(s), Err(AbpError::Stalled { phase: 4, .. })));
    }

    #[test]
    fn receiver_recovers_from_flip() {
        let t = abp_run(1).unwrap();
        let mut s = t[2];
        s.q_r = !s.q_r;
        assert!(!s.receiver_consistent());
        assert!(abp_step(s).is_err());
        let s = s.recover_receiver();
        assert_eq!(s, t[2]);
        assert!(abp_step(s).is_ok());
    }

    #[test]
    fn faulty_receiver_worlds_are_the_inconsistent_states() {
        let sc = abp_fault_and_recover();
        let r = sc.model.agent("r").unwrap();
        for s in abp_run(2).unwrap() {
            if let Ok(w) = sc.model.world(&s.world_name()) {
                assert!(sc.model.correct_set(r).contains(w));
            }
        }
        assert!(sc.run(Mode::CrossCheck).unwrap().passed());
    }
}
