//! Constraint stores.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::Atom;

/// A multiset of ground atoms, kept sorted so equal multisets compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store(Vec<Atom>);

impl Store {
    pub fn new() -> Self {
        Store(Vec::new())
    }

    pub fn from_atoms(mut atoms: Vec<Atom>) -> Self {
        atoms.sort();
        Store(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Atom> {
        self.0.iter()
    }

    pub fn insert(&mut self, a: Atom) {
        let pos = self.0.partition_point(|x| x <= &a);
        self.0.insert(pos, a);
    }

    /// Removes one copy of `a`; false if absent.
    pub fn remove_one(&mut self, a: &Atom) -> bool {
        match self.0.binary_search(a) {
            Ok(i) => {
                self.0.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn union(&self, other: &Store) -> Store {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Store::from_atoms(v)
    }

    /// Multiset difference `self - other`, or `None` if `other` is not contained in `self`.
    pub fn difference(&self, other: &Store) -> Option<Store> {
        let mut out = self.clone();
        for a in &other.0 {
            if !out.remove_one(a) {
                return None;
            }
        }
        Some(out)
    }

    pub fn contains_all(&self, other: &Store) -> bool {
        self.difference(other).is_some()
    }

    /// Atoms whose predicate satisfies `keep`.
    pub fn filter_pred(&self, keep: impl Fn(&str) -> bool) -> Store {
        Store(self.0.iter().filter(|a| keep(&a.pred)).cloned().collect())
    }
}

impl FromIterator<Atom> for Store {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Store::from_atoms(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Store {
    type Item = &'a Atom;
    type IntoIter = core::slice::Iter<'a, Atom>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

pub type Label = u64;

/// Atoms tagged with unique labels. Labels come from a counter starting at 1
/// and are never reused, even after removal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledStore {
    atoms: BTreeMap<Label, Atom>,
    next: Label,
}

impl Default for LabeledStore {
    fn default() -> Self {
        LabeledStore {
            atoms: BTreeMap::new(),
            next: 1,
        }
    }
}

impl LabeledStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `a` under a fresh label.
    pub fn insert(&mut self, a: Atom) -> Label {
        let n = self.next;
        self.next += 1;
        self.atoms.insert(n, a);
        n
    }

    pub fn remove(&mut self, n: Label) -> Option<Atom> {
        self.atoms.remove(&n)
    }

    pub fn get(&self, n: Label) -> Option<&Atom> {
        self.atoms.get(&n)
    }

    pub fn contains(&self, n: Label) -> bool {
        self.atoms.contains_key(&n)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The label the next insertion will receive.
    pub fn next_label(&self) -> Label {
        self.next
    }

    /// Entries in label order.
    pub fn iter(&self) -> impl Iterator<Item = (Label, &Atom)> + '_ {
        self.atoms.iter().map(|(n, a)| (*n, a))
    }

    pub fn drop_labels(&self) -> Store {
        self.atoms.values().cloned().collect()
    }
}

impl fmt::Display for LabeledStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, a)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}#{n}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;
    use alloc::vec;

    fn p(n: i64) -> Atom {
        Atom::new("p", vec![Term::Int(n)])
    }

    #[test]
    fn store_equality_ignores_insertion_order() {
        assert_eq!(
            Store::from_atoms(vec![p(2), p(1)]),
            Store::from_atoms(vec![p(1), p(2)])
        );
    }

    #[test]
    fn difference_is_multiset_aware() {
        let s = Store::from_atoms(vec![p(1), p(1), p(2)]);
        assert_eq!(
            s.difference(&Store::from_atoms(vec![p(1)])),
            Some(Store::from_atoms(vec![p(1), p(2)]))
        );
        assert_eq!(s.difference(&Store::from_atoms(vec![p(3)])), None);
    }

    #[test]
    fn labels_start_at_one_and_are_never_reused() {
        let mut ls = LabeledStore::new();
        assert_eq!(ls.insert(p(1)), 1);
        ls.insert(p(2));
        ls.insert(p(3));
        assert_eq!(ls.next_label(), 4);
        ls.remove(3);
        assert_eq!(ls.insert(p(4)), 4);
    }
}
