use std::fmt;

use super::Formula;
use crate::kripke::{AgentId, Signature};

/// Renders formulas in the text syntax accepted by [`super::parse`].
///
/// Derived shapes produced by the constructors (`|`, `->`, `<->`, `false`,
/// the duals, `B{i}` and agent-indexed updates) are recognised and printed
/// back in their short form, so printing then parsing yields the same tree.
#[derive(Clone, Copy)]
pub struct Printer<'a> {
    sig: &'a Signature,
}

// binding strength, loosest first
const IFF: u8 = 1;
const IMP: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const UNARY: u8 = 5;

fn as_not(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Not(a) => Some(a),
        _ => None,
    }
}

fn is_bot(f: &Formula) -> bool {
    matches!(as_not(f), Some(Formula::Top))
}

/// `¬(a ∧ ¬b)` as `(a, b)`.
fn as_implies(f: &Formula) -> Option<(&Formula, &Formula)> {
    match as_not(f)? {
        Formula::And(a, nb) => Some((a, as_not(nb)?)),
        _ => None,
    }
}

fn as_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match as_not(f)? {
        Formula::And(na, nb) => Some((as_not(na)?, as_not(nb)?)),
        _ => None,
    }
}

fn as_iff(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::And(l, r) => {
            let (a, b) = as_implies(l)?;
            let (b2, a2) = as_implies(r)?;
            (a == a2 && b == b2).then_some((a, b))
        }
        _ => None,
    }
}

fn is_correct(f: &Formula, i: AgentId) -> bool {
    matches!(as_not(f), Some(Formula::Hope(j, b)) if *j == i && is_bot(b))
}

/// `K_i(¬H_i⊥ → φ)` as `(i, φ)`.
fn as_belief(f: &Formula) -> Option<(AgentId, &Formula)> {
    match f {
        Formula::Know(i, body) => {
            let (c, phi) = as_implies(body)?;
            is_correct(c, *i).then_some((*i, phi))
        }
        _ => None,
    }
}

impl<'a> Printer<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Printer { sig }
    }

    pub fn print(&self, f: &Formula) -> String {
        let mut out = String::new();
        self.write(&mut out, f, IFF);
        out
    }

    pub fn display<'f>(&self, f: &'f Formula) -> impl fmt::Display + 'f
    where
        'a: 'f,
    {
        Shown { printer: *self, formula: f }
    }

    fn agent(&self, i: AgentId) -> &str {
        self.sig.agent_name(i)
    }

    fn level(f: &Formula) -> u8 {
        if as_iff(f).is_some() {
            IFF
        } else if matches!(f, Formula::And(..)) {
            AND
        } else if is_bot(f) || matches!(as_not(f), Some(Formula::Hope(..) | Formula::Know(..))) {
            UNARY
        } else if as_or(f).is_some() && !matches!(as_not(f), Some(Formula::And(l, _)) if as_implies(l).is_some()) {
            OR
        } else if as_implies(f).is_some() {
            IMP
        } else {
            UNARY
        }
    }

    fn write(&self, out: &mut String, f: &Formula, min: u8) {
        if Self::level(f) < min {
            out.push('(');
            self.write(out, f, IFF);
            out.push(')');
        } else {
            self.write_bare(out, f);
        }
    }

    fn binary(&self, out: &mut String, a: &Formula, op: &str, b: &Formula, level: u8) {
        self.write(out, a, level + 1);
        out.push_str(op);
        self.write(out, b, level);
    }

    fn prefix(&self, out: &mut String, op: &str, i: AgentId, body: &Formula) {
        out.push_str(op);
        out.push('{');
        out.push_str(self.agent(i));
        out.push_str("} ");
        self.write(out, body, UNARY);
    }

    fn write_bare(&self, out: &mut String, f: &Formula) {
        if let Some((a, b)) = as_iff(f) {
            return self.binary(out, a, " <-> ", b, IFF);
        }
        match f {
            Formula::Top => out.push_str("true"),
            Formula::Atom(p) => out.push_str(self.sig.prop_name(*p)),
            Formula::And(a, b) => self.binary(out, a, " & ", b, AND),
            Formula::Know(i, body) => match as_belief(f) {
                Some((_, phi)) => self.prefix(out, "B", *i, phi),
                None => self.prefix(out, "K", *i, body),
            },
            Formula::Hope(i, body) => self.prefix(out, "H", *i, body),
            Formula::Not(a) => self.write_negation(out, a),
            Formula::Public(v, body) => {
                out.push('[');
                match self.group_form(v) {
                    Some((phi, group)) => {
                        self.write(out, phi, IFF);
                        out.push_str("]{");
                        let names: Vec<&str> = group.iter().map(|&i| self.agent(i)).collect();
                        out.push_str(&names.join(","));
                        out.push('}');
                    }
                    None => {
                        for (k, phi) in v.iter().enumerate() {
                            if k > 0 {
                                out.push_str(", ");
                            }
                            self.write(out, phi, IFF);
                        }
                        out.push(']');
                    }
                }
                out.push(' ');
                self.write(out, body, UNARY);
            }
            Formula::Update(point, body) => {
                let u = point.model();
                out.push('[');
                out.push_str(u.name());
                out.push(':');
                out.push_str(u.action_name(point.action()));
                out.push_str("] ");
                self.write(out, body, UNARY);
            }
        }
    }

    fn write_negation(&self, out: &mut String, a: &Formula) {
        let f = Formula::Not(a.clone().into());
        match a {
            Formula::Top => return out.push_str("false"),
            Formula::Hope(i, b) if is_bot(b) => return self.prefix(out, "~H", *i, b),
            Formula::Know(i, b) => {
                if let Some(inner) = as_not(b) {
                    return self.prefix(out, "Kh", *i, inner);
                }
            }
            Formula::Hope(i, b) => {
                if let Some(inner) = as_not(b) {
                    return self.prefix(out, "Hh", *i, inner);
                }
            }
            _ => {}
        }
        // `¬(¬x ∧ ¬y)` reads as `x | y` unless `¬x` is itself an implication
        let left_is_implication = matches!(a, Formula::And(l, _) if as_implies(l).is_some());
        if let Some((x, y)) = as_or(&f).filter(|_| !left_is_implication) {
            return self.binary(out, x, " | ", y, OR);
        }
        if let Some((x, y)) = as_implies(&f) {
            // `->` groups to the right, so a nested implication on the left needs parentheses
            self.write(out, x, OR);
            out.push_str(" -> ");
            return self.write(out, y, IMP);
        }
        out.push('~');
        self.write(out, a, UNARY);
    }

    /// Recognises `[φ]_G`: the positions outside `G` hold `¬H_j⊥`, those in
    /// `G` all hold the same `φ`, and `G` is a non-empty proper subset.
    fn group_form<'f>(&self, v: &'f [Formula]) -> Option<(&'f Formula, Vec<AgentId>)> {
        let group: Vec<AgentId> =
            (0..v.len()).map(AgentId).filter(|&i| !is_correct(&v[i.0], i)).collect();
        let first = v.get(group.first()?.0)?;
        if group.len() == v.len() || group.iter().any(|i| &v[i.0] != first) {
            return None;
        }
        Some((first, group))
    }
}

struct Shown<'a> {
    printer: Printer<'a>,
    formula: &'a Formula,
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.printer.print(self.formula))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, UpdateRegistry};

    fn round_trip(text: &str) -> String {
        let sig = Signature::new(["a", "b"], ["p", "q"]).unwrap();
        let reg = UpdateRegistry::new();
        let f = parse(text, &sig, &reg).unwrap();
        let printed = Printer::new(&sig).print(&f);
        assert_eq!(parse(&printed, &sig, &reg).unwrap(), f, "{printed}");
        printed
    }

    #[test]
    fn short_forms_survive() {
        assert_eq!(round_trip("~H{a} false"), "~H{a} false");
        assert_eq!(round_trip("p | q"), "p | q");
        assert_eq!(round_trip("p -> q"), "p -> q");
        assert_eq!(round_trip("p <-> q"), "p <-> q");
        assert_eq!(round_trip("B{a} p"), "B{a} p");
        assert_eq!(round_trip("Kh{b} ~p"), "Kh{b} ~p");
        assert_eq!(round_trip("Hh{b} p"), "Hh{b} p");
        assert_eq!(round_trip("[p]{a} q"), "[p]{a} q");
        assert_eq!(round_trip("[p, q] K{a} q"), "[p, q] K{a} q");
    }

    #[test]
    fn parentheses_where_needed() {
        assert_eq!(round_trip("(p -> q) -> p"), "(p -> q) -> p");
        assert_eq!(round_trip("(p & q) & p"), "(p & q) & p");
        assert_eq!(round_trip("p & q & p"), "p & q & p");
        assert_eq!(round_trip("~(p & q)"), "~(p & q)");
        assert_eq!(round_trip("K{a} (p | q)"), "K{a} (p | q)");
        assert_eq!(round_trip("(p <-> q) <-> p"), "(p <-> q) <-> p");
        assert_eq!(round_trip("~~p"), "~~p");
        assert_eq!(round_trip("~(p | q)"), "~(p | q)");
    }
}
