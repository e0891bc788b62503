use super::StorageError;

/// Words per data page (4096 bytes).
pub const PAGE_WORDS: usize = 1024;

/// Append-only tuple list stored in fixed-size pages.
///
/// Tuples never straddle a page boundary. Arity 0 is allowed and only counts
/// rows.
#[derive(Debug, Clone)]
pub struct ListRelation {
    arity: usize,
    per_page: usize,
    pages: Vec<Box<[u32]>>,
    rows: usize,
}

/// A snapshot over a list: yields rows `pos..end` fixed when it was opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ListCursor {
    pub pos: u32,
    pub end: u32,
}

impl ListCursor {
    pub fn is_done(&self) -> bool {
        self.pos >= self.end
    }
}

impl ListRelation {
    pub fn new(arity: usize) -> Self {
        ListRelation {
            arity,
            per_page: PAGE_WORDS.checked_div(arity).map_or(usize::MAX, |n| n.max(1)),
            pages: Vec::new(),
            rows: 0,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn insert(&mut self, t: &[u32]) -> Result<(), StorageError> {
        if t.len() != self.arity {
            return Err(StorageError::ArityMismatch {
                expected: self.arity,
                got: t.len(),
            });
        }
        self.push(t);
        Ok(())
    }

    /// Appends without an arity check beyond a debug assertion.
    #[inline]
    pub fn push(&mut self, t: &[u32]) {
        debug_assert_eq!(t.len(), self.arity);
        if self.arity > 0 {
            let slot = self.rows % self.per_page;
            if slot == 0 {
                let words = self.per_page * self.arity;
                self.pages.push(vec![0u32; words.max(PAGE_WORDS)].into_boxed_slice());
            }
            let page = self.pages.last_mut().unwrap_or_else(|| unreachable!());
            page[slot * self.arity..(slot + 1) * self.arity].copy_from_slice(t);
        }
        self.rows += 1;
    }

    /// Rows `from..` up to `to` or the end of `from`'s page, whichever comes
    /// first, as one flat slice.
    #[inline]
    pub fn run(&self, from: usize, to: usize) -> &[u32] {
        if from >= to || self.arity == 0 {
            return &[];
        }
        let slot = from % self.per_page;
        let n = (to - from).min(self.per_page - slot);
        &self.pages[from / self.per_page][slot * self.arity..(slot + n) * self.arity]
    }

    #[inline]
    pub fn get(&self, row: usize) -> &[u32] {
        if self.arity == 0 {
            assert!(row < self.rows);
            return &[];
        }
        let page = &self.pages[row / self.per_page];
        let slot = row % self.per_page;
        &page[slot * self.arity..(slot + 1) * self.arity]
    }

    pub fn cursor(&self) -> ListCursor {
        ListCursor {
            pos: 0,
            end: self.rows as u32,
        }
    }

    /// Cursor over the rows in `from..to`, clamped to the current length.
    pub fn range_cursor(&self, from: usize, to: usize) -> ListCursor {
        let end = to.min(self.rows);
        ListCursor {
            pos: from.min(end) as u32,
            end: end as u32,
        }
    }

    #[inline]
    pub fn next<'a>(&'a self, c: &mut ListCursor) -> Option<&'a [u32]> {
        if c.pos >= c.end {
            return None;
        }
        let t = self.get(c.pos as usize);
        c.pos += 1;
        Some(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.rows).map(move |r| self.get(r))
    }

    pub fn bytes(&self) -> usize {
        std::mem::size_of::<Self>()
            + self.pages.capacity() * std::mem::size_of::<Box<[u32]>>()
            + self.pages.iter().map(|p| p.len() * 4).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order() {
        let mut l = ListRelation::new(2);
        l.insert(&[1, 2]).unwrap();
        l.insert(&[3, 4]).unwrap();
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![&[1, 2][..], &[3, 4][..]]);
        assert!(l.insert(&[1]).is_err());
    }

    #[test]
    fn cursor_is_a_snapshot() {
        let mut l = ListRelation::new(2);
        l.push(&[1, 2]);
        l.push(&[3, 4]);
        let mut c = l.cursor();
        l.push(&[5, 6]);
        let mut seen = Vec::new();
        while let Some(t) = l.next(&mut c) {
            seen.push(t.to_vec());
        }
        assert_eq!(seen, vec![vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn spans_pages_without_straddling() {
        let mut l = ListRelation::new(3);
        for i in 0..5000u32 {
            l.push(&[i, i + 1, i + 2]);
        }
        assert_eq!(l.len(), 5000);
        assert_eq!(l.pages.len(), 5000usize.div_ceil(PAGE_WORDS / 3));
        for (i, t) in l.iter().enumerate() {
            let i = i as u32;
            assert_eq!(t, &[i, i + 1, i + 2]);
        }
    }

    #[test]
    fn zero_arity_counts_rows() {
        let mut l = ListRelation::new(0);
        l.push(&[]);
        l.push(&[]);
        assert_eq!(l.len(), 2);
        assert_eq!(l.iter().count(), 2);
    }

    #[test]
    fn empty_list_bytes_is_fixed_overhead() {
        let l = ListRelation::new(2);
        assert_eq!(l.bytes(), std::mem::size_of::<ListRelation>());
        let mut l = ListRelation::new(2);
        for i in 0..50_000 {
            l.push(&[i, i]);
        }
        assert!(l.bytes() >= 50_000 * 2 * 4);
    }
}
