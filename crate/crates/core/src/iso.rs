//! Isomorphism of KH models.
//!
//! Two checks are offered: structural equality after renaming the worlds of
//! one model (for products, whose canonical numbering already lines up), and
//! a backtracking search for an arbitrary isomorphism on small models.

use crate::kripke::{KripkeModel, ModelError};

/// Largest model handled by [`find_isomorphism`].
pub const MAX_ISO_WORLDS: usize = 64;

/// The same model with worlds renamed in place.
pub fn renamed(m: &KripkeModel, names: Vec<String>) -> Result<KripkeModel, ModelError> {
    let order: Vec<usize> = (0..m.world_count()).collect();
    m.reordered(&order, names)
}

/// Structural equality once the worlds of `a` take the names of `b`.
pub fn equal_under_renaming(a: &KripkeModel, b: &KripkeModel) -> bool {
    a.world_count() == b.world_count()
        && renamed(a, b.world_names().to_vec()).is_ok_and(|r| &r == b)
}

/// True if `map` sends `a` onto `b` preserving valuation, correctness and
/// every knowledge relation.
pub fn is_isomorphism(a: &KripkeModel, b: &KripkeModel, map: &[usize]) -> bool {
    let n = a.world_count();
    if a.signature() != b.signature() || n != b.world_count() || map.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &y in map {
        if y >= n || std::mem::replace(&mut seen[y], true) {
            return false;
        }
    }
    let sig = a.signature();
    (0..n).all(|x| {
        sig.props().all(|p| a.valuation(p).contains(x) == b.valuation(p).contains(map[x]))
            && sig.agents().all(|i| {
                a.correct_set(i).contains(x) == b.correct_set(i).contains(map[x])
                    && (0..n).all(|z| a.knowledge(i).related(x, z) == b.knowledge(i).related(map[x], map[z]))
            })
    })
}

/// Local invariant of a world that any isomorphism must preserve.
fn profile(m: &KripkeModel, w: usize) -> Vec<usize> {
    let sig = m.signature();
    let mut out: Vec<usize> = sig.props().map(|p| m.valuation(p).contains(w) as usize).collect();
    for i in sig.agents() {
        out.push(m.correct_set(i).contains(w) as usize);
        out.push(m.knowledge(i).class(w).len());
        out.push(m.knowledge(i).class(w).iter().filter(|&&v| m.correct_set(i).contains(v)).count());
    }
    out
}

/// Searches for a bijection `f` on worlds with `f(x)` in `b` matching `x` in
/// `a` on valuation, correctness and every knowledge relation. Returns
/// `None` if the signatures differ, the models are too large, or no
/// isomorphism exists.
pub fn find_isomorphism(a: &KripkeModel, b: &KripkeModel) -> Option<Vec<usize>> {
    let n = a.world_count();
    if a.signature() != b.signature() || n != b.world_count() || n > MAX_ISO_WORLDS {
        return None;
    }
    let pa: Vec<Vec<usize>> = (0..n).map(|w| profile(a, w)).collect();
    let pb: Vec<Vec<usize>> = (0..n).map(|w| profile(b, w)).collect();
    let mut sorted_a = pa.clone();
    let mut sorted_b = pb.clone();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return None;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn go(
        x: usize,
        a: &KripkeModel,
        b: &KripkeModel,
        pa: &[Vec<usize>],
        pb: &[Vec<usize>],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if x == map.len() {
            return true;
        }
        for y in 0..map.len() {
            if used[y] || pa[x] != pb[y] {
                continue;
            }
            let consistent = (0..x).all(|z| {
                a.signature()
                    .agents()
                    .all(|i| a.knowledge(i).related(x, z) == b.knowledge(i).related(y, map[z]))
            });
            if !consistent {
                continue;
            }
            map[x] = y;
            used[y] = true;
            if go(x + 1, a, b, pa, pb, map, used) {
                return true;
            }
            used[y] = false;
        }
        map[x] = usize::MAX;
        false
    }
    go(0, a, b, &pa, &pb, &mut map, &mut used).then_some(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::kripke::fixtures::base_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shuffled_models_are_isomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sig = base_model().signature().clone();
        for _ in 0..30 {
            let m = gen::random_model(&mut rng, &sig, 6);
            let s = gen::shuffled(&mut rng, &m);
            let f = find_isomorphism(&m, &s).expect("isomorphic");
            assert!(is_isomorphism(&m, &s, &f));
        }
    }

    #[test]
    fn correctness_change_breaks_isomorphism() {
        let m = base_model();
        let mut c = m.correct_sets().to_vec();
        c[0].insert(1);
        assert!(find_isomorphism(&m, &m.with_correct_sets(c)).is_none());
        assert!(equal_under_renaming(&m, &m));
    }
}
