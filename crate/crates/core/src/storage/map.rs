use rustc_hash::FxHashMap;

use super::StorageError;

const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone)]
enum Index {
    // Single-column keys over dense ids: slot per key value.
    Dense(Vec<u32>),
    Hashed(FxHashMap<Box<[u32]>, u32>),
}

/// Multimap from key tuples to value tuples, values kept in insertion order.
#[derive(Debug, Clone)]
pub struct MapRelation {
    key_arity: usize,
    value_arity: usize,
    index: Index,
    slots: Vec<Vec<u32>>,
    rows: usize,
}

/// Snapshot over the values of one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MapCursor {
    pub slot: u32,
    pub pos: u32,
    pub end: u32,
}

impl MapCursor {
    pub const EMPTY: MapCursor = MapCursor {
        slot: 0,
        pos: 0,
        end: 0,
    };

    pub fn is_done(&self) -> bool {
        self.pos >= self.end
    }
}

impl MapRelation {
    pub fn new(key_arity: usize, value_arity: usize) -> Self {
        assert!(value_arity > 0, "map relations need at least one value column");
        let index = if key_arity == 1 {
            Index::Dense(Vec::new())
        } else {
            Index::Hashed(FxHashMap::default())
        };
        MapRelation {
            key_arity,
            value_arity,
            index,
            slots: Vec::new(),
            rows: 0,
        }
    }

    pub fn key_arity(&self) -> usize {
        self.key_arity
    }

    pub fn value_arity(&self) -> usize {
        self.value_arity
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Number of distinct keys.
    pub fn keys(&self) -> usize {
        self.slots.len()
    }

    pub fn insert(&mut self, key: &[u32], value: &[u32]) -> Result<(), StorageError> {
        if key.len() != self.key_arity {
            return Err(StorageError::ArityMismatch {
                expected: self.key_arity,
                got: key.len(),
            });
        }
        if value.len() != self.value_arity {
            return Err(StorageError::ArityMismatch {
                expected: self.value_arity,
                got: value.len(),
            });
        }
        self.push(key, value);
        Ok(())
    }

    #[inline]
    pub fn push(&mut self, key: &[u32], value: &[u32]) {
        debug_assert_eq!(key.len(), self.key_arity);
        debug_assert_eq!(value.len(), self.value_arity);
        let next = self.slots.len() as u32;
        let slot = match &mut self.index {
            Index::Dense(v) => {
                let k = key[0] as usize;
                if k >= v.len() {
                    v.resize((k + 1).max(v.len() * 2), NO_SLOT);
                }
                if v[k] == NO_SLOT {
                    v[k] = next;
                }
                v[k]
            }
            Index::Hashed(m) => match m.get(key) {
                Some(&s) => s,
                None => {
                    m.insert(key.into(), next);
                    next
                }
            },
        };
        if slot == next {
            self.slots.push(Vec::new());
        }
        self.slots[slot as usize].extend_from_slice(value);
        self.rows += 1;
    }

    #[inline]
    fn slot_of(&self, key: &[u32]) -> Option<u32> {
        match &self.index {
            Index::Dense(v) => v.get(key[0] as usize).copied().filter(|&s| s != NO_SLOT),
            Index::Hashed(m) => m.get(key).copied(),
        }
    }

    #[inline]
    pub fn cursor_for(&self, key: &[u32]) -> MapCursor {
        match self.slot_of(key) {
            Some(slot) => MapCursor {
                slot,
                pos: 0,
                end: self.slots[slot as usize].len() as u32,
            },
            None => MapCursor::EMPTY,
        }
    }

    #[inline]
    pub fn next<'a>(&'a self, c: &mut MapCursor) -> Option<&'a [u32]> {
        if c.pos >= c.end {
            return None;
        }
        let start = c.pos as usize;
        c.pos += self.value_arity as u32;
        Some(&self.slots[c.slot as usize][start..start + self.value_arity])
    }

    /// The values a cursor has left, as one flat slice.
    #[inline]
    pub fn remaining(&self, c: &MapCursor) -> &[u32] {
        if c.pos >= c.end {
            return &[];
        }
        &self.slots[c.slot as usize][c.pos as usize..c.end as usize]
    }

    /// Calls `f(key, value)` for every stored pair, grouped by key.
    pub fn for_each(&self, mut f: impl FnMut(&[u32], &[u32])) {
        let mut visit = |key: &[u32], slot: u32| {
            for v in self.slots[slot as usize].chunks_exact(self.value_arity) {
                f(key, v);
            }
        };
        match &self.index {
            Index::Dense(v) => {
                for (k, &slot) in v.iter().enumerate() {
                    if slot != NO_SLOT {
                        visit(&[k as u32], slot);
                    }
                }
            }
            Index::Hashed(m) => {
                for (k, &slot) in m {
                    visit(k, slot);
                }
            }
        }
    }

    /// Number of values stored under `key`.
    pub fn count(&self, key: &[u32]) -> usize {
        let c = self.cursor_for(key);
        (c.end as usize) / self.value_arity
    }

    pub fn bytes(&self) -> usize {
        let index = match &self.index {
            Index::Dense(v) => v.capacity() * 4,
            Index::Hashed(m) => {
                m.capacity() * (std::mem::size_of::<(Box<[u32]>, u32)>() + 1) + m.len() * self.key_arity * 4
            }
        };
        std::mem::size_of::<Self>()
            + index
            + self.slots.capacity() * std::mem::size_of::<Vec<u32>>()
            + self.slots.iter().map(|s| s.capacity() * 4).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(m: &MapRelation, key: &[u32]) -> Vec<Vec<u32>> {
        let mut c = m.cursor_for(key);
        let mut out = Vec::new();
        while let Some(v) = m.next(&mut c) {
            out.push(v.to_vec());
        }
        out
    }

    #[test]
    fn values_in_insertion_order() {
        let mut m = MapRelation::new(1, 1);
        m.insert(&[1], &[2]).unwrap();
        m.insert(&[1], &[3]).unwrap();
        m.insert(&[7], &[1]).unwrap();
        assert_eq!(values(&m, &[1]), vec![vec![2], vec![3]]);
        assert!(values(&m, &[5]).is_empty());
        assert!(values(&m, &[1_000_000]).is_empty());
        assert_eq!(m.len(), 3);
        assert_eq!(m.keys(), 2);
    }

    #[test]
    fn composite_keys() {
        let mut m = MapRelation::new(2, 2);
        m.insert(&[1, 2], &[3, 4]).unwrap();
        m.insert(&[2, 1], &[5, 6]).unwrap();
        assert_eq!(values(&m, &[1, 2]), vec![vec![3, 4]]);
        assert_eq!(values(&m, &[2, 1]), vec![vec![5, 6]]);
        assert!(m.insert(&[1], &[1, 1]).is_err());
    }

    #[test]
    fn snapshot_under_insertion() {
        let mut m = MapRelation::new(1, 1);
        m.push(&[1], &[10]);
        let mut c = m.cursor_for(&[1]);
        m.push(&[1], &[11]);
        let mut seen = Vec::new();
        while let Some(v) = m.next(&mut c) {
            seen.push(v[0]);
            m.push(&[1], &[12]);
        }
        assert_eq!(seen, vec![10]);
        assert_eq!(m.count(&[1]), 3);
    }
}
