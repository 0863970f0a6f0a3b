//! Binary min-heap with a position index, so arbitrary entries can be found,
//! modified in place, and re-sifted in `O(log n)`.

use std::hash::Hash;

use rustc_hash::FxHashMap;

/// Items stored in an [`IndexedMinHeap`] expose the key they are indexed by.
pub trait Keyed {
    type Key: Copy + Eq + Hash;
    fn key(&self) -> Self::Key;
}

/// Entries live in heap order in `items`. Each one also owns a stable slot;
/// the key map points at slots and `pos` maps slots to heap positions, so
/// sifting touches only plain vectors.
#[derive(Debug, Clone)]
pub struct IndexedMinHeap<T: Keyed> {
    items: Vec<T>,
    slot_of: Vec<u32>,
    pos: Vec<u32>,
    free: Vec<u32>,
    slots: FxHashMap<T::Key, u32>,
}

impl<T: Keyed + Ord> Default for IndexedMinHeap<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Keyed + Ord> IndexedMinHeap<T> {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(cap: usize) -> Self {
        IndexedMinHeap {
            items: Vec::with_capacity(cap),
            slot_of: Vec::with_capacity(cap),
            pos: Vec::with_capacity(cap),
            free: Vec::new(),
            slots: FxHashMap::with_capacity_and_hasher(cap, Default::default()),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, key: &T::Key) -> bool {
        self.slots.contains_key(key)
    }

    pub fn get(&self, key: &T::Key) -> Option<&T> {
        self.slots.get(key).map(|&s| &self.items[self.pos[s as usize] as usize])
    }

    pub fn peek(&self) -> Option<&T> {
        self.items.first()
    }

    /// Entries in heap (array) order.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Inserts `item`. Returns `false` without inserting if its key is present.
    pub fn push(&mut self, item: T) -> bool {
        let key = item.key();
        if self.slots.contains_key(&key) {
            return false;
        }
        let i = self.items.len();
        let slot = match self.free.pop() {
            Some(s) => {
                self.pos[s as usize] = i as u32;
                s
            }
            None => {
                self.pos.push(i as u32);
                (self.pos.len() - 1) as u32
            }
        };
        self.items.push(item);
        self.slot_of.push(slot);
        self.slots.insert(key, slot);
        self.sift_up(i);
        true
    }

    pub fn pop(&mut self) -> Option<T> {
        if self.items.is_empty() {
            return None;
        }
        Some(self.remove_at(0))
    }

    pub fn remove(&mut self, key: &T::Key) -> Option<T> {
        let s = *self.slots.get(key)?;
        Some(self.remove_at(self.pos[s as usize] as usize))
    }

    /// Applies `f` to the entry for `key` and restores heap order. Returns
    /// whatever `f` returns, or `None` if the key is absent.
    pub fn modify<R>(&mut self, key: &T::Key, f: impl FnOnce(&mut T) -> R) -> Option<R> {
        let s = *self.slots.get(key)?;
        let i = self.pos[s as usize] as usize;
        let r = f(&mut self.items[i]);
        debug_assert!(self.items[i].key() == *key, "modify must not change the key");
        let i = self.sift_up(i);
        self.sift_down(i);
        Some(r)
    }

    /// Checks the heap property and index consistency by full scan.
    pub fn check_invariants(&self) -> bool {
        if self.slots.len() != self.items.len() || self.slot_of.len() != self.items.len() {
            return false;
        }
        for (i, item) in self.items.iter().enumerate() {
            let Some(&s) = self.slots.get(&item.key()) else {
                return false;
            };
            if self.slot_of[i] != s || self.pos[s as usize] as usize != i {
                return false;
            }
            if i > 0 && self.items[(i - 1) / 2] > *item {
                return false;
            }
        }
        true
    }

    fn remove_at(&mut self, i: usize) -> T {
        let last = self.items.len() - 1;
        self.swap(i, last);
        let item = self.items.pop().expect("non-empty");
        let slot = self.slot_of.pop().expect("non-empty");
        self.free.push(slot);
        self.slots.remove(&item.key());
        if i < self.items.len() {
            let i = self.sift_up(i);
            self.sift_down(i);
        }
        item
    }

    fn swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.items.swap(i, j);
        self.slot_of.swap(i, j);
        self.pos[self.slot_of[i] as usize] = i as u32;
        self.pos[self.slot_of[j] as usize] = j as u32;
    }

    fn sift_up(&mut self, mut i: usize) -> usize {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.items[i] < self.items[parent] {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
        i
    }

    fn sift_down(&mut self, mut i: usize) -> usize {
        let n = self.items.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                return i;
            }
            let r = l + 1;
            let child = if r < n && self.items[r] < self.items[l] { r } else { l };
            if self.items[child] < self.items[i] {
                self.swap(i, child);
                i = child;
            } else {
                return i;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
    struct Item {
        prio: i64,
        id: u32,
    }

    impl Keyed for Item {
        type Key = u32;
        fn key(&self) -> u32 {
            self.id
        }
    }

    #[test]
    fn pop_in_order() {
        let mut h = IndexedMinHeap::new();
        for (id, prio) in [(1, 5), (2, 3), (3, 9), (4, 1)] {
            assert!(h.push(Item { prio, id }));
        }
        assert!(!h.push(Item { prio: 0, id: 2 }));
        let order: Vec<u32> = std::iter::from_fn(|| h.pop().map(|it| it.id)).collect();
        assert_eq!(order, vec![4, 2, 1, 3]);
    }

    #[test]
    fn remove_root_restores_min() {
        let mut h = IndexedMinHeap::new();
        for (id, prio) in [(1, 2), (2, 7), (3, 4)] {
            h.push(Item { prio, id });
        }
        h.remove(&1);
        assert_eq!(h.peek().unwrap().id, 3);
        assert!(h.check_invariants());
    }

    proptest! {
        #[test]
        fn random_ops_keep_invariants(ops in prop::collection::vec((0u8..4, 0u32..40, -100i64..100), 1..300)) {
            let mut h = IndexedMinHeap::new();
            let mut shadow: std::collections::BTreeMap<u32, i64> = Default::default();
            for (op, id, prio) in ops {
                match op {
                    0 | 1 => {
                        let fresh = h.push(Item { prio, id });
                        prop_assert_eq!(fresh, !shadow.contains_key(&id));
                        shadow.entry(id).or_insert(prio);
                    }
                    2 => {
                        let got = h.remove(&id).map(|it| it.prio);
                        prop_assert_eq!(got, shadow.remove(&id));
                    }
                    _ => {
                        let hit = h.modify(&id, |it| it.prio = prio).is_some();
                        prop_assert_eq!(hit, shadow.contains_key(&id));
                        if hit { shadow.insert(id, prio); }
                    }
                }
                prop_assert!(h.check_invariants());
                let min = shadow.iter().map(|(&id, &p)| (p, id)).min();
                prop_assert_eq!(h.peek().map(|it| (it.prio, it.id)), min);
            }
        }
    }
}
