//! Equivalence relations over `0..len`, stored as a canonical partition.

use std::collections::{BTreeSet, HashMap};

/// A partition of `0..len` into disjoint non-empty classes.
///
/// Classes are numbered in order of their least element and each class lists
/// its members in increasing order, so two partitions describing the same
/// equivalence relation compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("element {0} is out of range")]
    OutOfRange(usize),
    #[error("element {0} occurs in more than one class")]
    Overlap(usize),
    #[error("element {0} is not covered by any class")]
    Uncovered(usize),
    #[error("empty class")]
    EmptyClass,
}

impl Partition {
    /// Builds the partition induced by an arbitrary labelling: two elements
    /// are equivalent iff they carry the same label.
    pub fn from_labels<L: Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut ids: HashMap<&L, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(labels.len());
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (x, label) in labels.iter().enumerate() {
            let next = classes.len();
            let id = *ids.entry(label).or_insert(next);
            if id == next {
                classes.push(Vec::new());
            }
            classes[id].push(x);
            class_of.push(id);
        }
        Partition { class_of, classes }
    }

    pub fn from_classes(len: usize, classes: &[Vec<usize>]) -> Result<Self, PartitionError> {
        let mut label = vec![usize::MAX; len];
        for (c, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(PartitionError::EmptyClass);
            }
            for &x in class {
                if x >= len {
                    return Err(PartitionError::OutOfRange(x));
                }
                if label[x] != usize::MAX {
                    return Err(PartitionError::Overlap(x));
                }
                label[x] = c;
            }
        }
        if let Some(x) = label.iter().position(|&l| l == usize::MAX) {
            return Err(PartitionError::Uncovered(x));
        }
        Ok(Self::from_labels(&label))
    }

    pub fn identity(len: usize) -> Self {
        Self::from_labels(&(0..len).collect::<Vec<_>>())
    }

    pub fn universal(len: usize) -> Self {
        Self::from_labels(&vec![0u8; len])
    }

    /// Pairwise product: `(a, b) ~ (a', b')` iff `a ~ a'` and `b ~ b'`.
    /// The pair `(a, b)` is encoded as `a * right.len() + b`.
    pub fn product(&self, right: &Partition) -> Self {
        let mut labels = Vec::with_capacity(self.len() * right.len());
        for a in 0..self.len() {
            for b in 0..right.len() {
                labels.push((self.class_of[a], right.class_of[b]));
            }
        }
        Self::from_labels(&labels)
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_index(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn class(&self, x: usize) -> &[usize] {
        &self.classes[self.class_of[x]]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.class_of[x] == self.class_of[y]
    }

    /// The relation as an explicit set of pairs.
    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        self.classes
            .iter()
            .flat_map(|c| c.iter().flat_map(move |&x| c.iter().map(move |&y| (x, y))))
            .collect()
    }

    /// Relabels elements: element `x` of the result corresponds to `order[x]` here.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let labels: Vec<usize> = order.iter().map(|&x| self.class_of[x]).collect();
        Self::from_labels(&labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_canonical() {
        let a = Partition::from_labels(&['x', 'y', 'x', 'z']);
        let b = Partition::from_labels(&[7, 1, 7, 0]);
        assert_eq!(a, b);
        assert_eq!(a.classes(), &[vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn from_classes_rejects_bad_covers() {
        assert_eq!(
            Partition::from_classes(3, &[vec![0, 1], vec![1, 2]]),
            Err(PartitionError::Overlap(1))
        );
        assert_eq!(
            Partition::from_classes(3, &[vec![0, 1]]),
            Err(PartitionError::Uncovered(2))
        );
        assert_eq!(
            Partition::from_classes(2, &[vec![0, 5]]),
            Err(PartitionError::OutOfRange(5))
        );
    }

    #[test]
    fn product_of_identity_and_universal() {
        let p = Partition::identity(2).product(&Partition::universal(2));
        assert_eq!(p.classes(), &[vec![0, 1], vec![2, 3]]);
        assert!(p.related(2, 3));
        assert!(!p.related(1, 2));
    }
}
