use super::hash::hash_tuple;
use super::StorageError;

/// Which duplicate-check structure to use for a set relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetImpl {
    Bitmap,
    DynHash,
    FixedHash,
}

impl SetImpl {
    pub fn name(self) -> &'static str {
        match self {
            SetImpl::Bitmap => "bitmap",
            SetImpl::DynHash => "dynhash",
            SetImpl::FixedHash => "fixedhash",
        }
    }
}

impl std::str::FromStr for SetImpl {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bitmap" => Ok(SetImpl::Bitmap),
            "dynhash" => Ok(SetImpl::DynHash),
            "fixedhash" => Ok(SetImpl::FixedHash),
            _ => Err(format!("unknown set implementation `{s}`")),
        }
    }
}

/// Set of tuples with one of three implementations.
#[derive(Debug, Clone)]
pub enum SetRelation {
    Bitmap(BitmapSet),
    DynHash(DynHashSet),
    FixedHash(FixedHashSet),
}

impl SetRelation {
    pub fn new(kind: SetImpl, arity: usize, domains: &[usize]) -> Result<Self, StorageError> {
        Ok(match kind {
            SetImpl::Bitmap => SetRelation::Bitmap(BitmapSet::new(domains)?),
            SetImpl::DynHash => SetRelation::DynHash(DynHashSet::new(arity)),
            SetImpl::FixedHash => SetRelation::FixedHash(FixedHashSet::new(arity)),
        })
    }

    pub fn kind(&self) -> SetImpl {
        match self {
            SetRelation::Bitmap(_) => SetImpl::Bitmap,
            SetRelation::DynHash(_) => SetImpl::DynHash,
            SetRelation::FixedHash(_) => SetImpl::FixedHash,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SetRelation::Bitmap(s) => s.arity(),
            SetRelation::DynHash(s) => s.arity,
            SetRelation::FixedHash(s) => s.arity,
        }
    }

    /// Inserts `t`; true if it was not present before.
    #[inline(always)]
    pub fn insert_if_new(&mut self, t: &[u32]) -> Result<bool, StorageError> {
        match self {
            SetRelation::Bitmap(s) => s.insert_if_new(t),
            SetRelation::DynHash(s) => Ok(s.insert_if_new(t)),
            SetRelation::FixedHash(s) => Ok(s.insert_if_new(t)),
        }
    }

    #[inline]
    pub fn contains(&self, t: &[u32]) -> bool {
        match self {
            SetRelation::Bitmap(s) => s.contains(t),
            SetRelation::DynHash(s) => s.contains(t),
            SetRelation::FixedHash(s) => s.contains(t),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SetRelation::Bitmap(s) => s.len(),
            SetRelation::DynHash(s) => s.len(),
            SetRelation::FixedHash(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored tuple; insertion order for the hash sets, ascending for
    /// bitmaps.
    pub fn tuples(&self) -> Vec<Vec<u32>> {
        match self {
            SetRelation::Bitmap(s) => s.tuples(),
            SetRelation::DynHash(s) => s.iter().map(<[u32]>::to_vec).collect(),
            SetRelation::FixedHash(s) => s.iter().map(<[u32]>::to_vec).collect(),
        }
    }

    pub fn bytes(&self) -> usize {
        match self {
            SetRelation::Bitmap(s) => s.bytes(),
            SetRelation::DynHash(s) => s.bytes(),
            SetRelation::FixedHash(s) => s.bytes(),
        }
    }
}

/// Array of bitmaps: for arity 2 one row of bits per first-column value.
#[derive(Debug, Clone)]
pub struct BitmapSet {
    domains: Vec<usize>,
    d0: usize,
    d1: usize,
    row_words: usize,
    row_bits: usize,
    words: Vec<u64>,
    count: usize,
}

/// Bitmaps larger than this many bits are refused.
pub const BITMAP_MAX_BITS: usize = 1 << 32;

impl BitmapSet {
    /// `domains[i]` is the number of distinct values of column `i`.
    pub fn new(domains: &[usize]) -> Result<Self, StorageError> {
        if domains.len() > 2 {
            return Err(StorageError::BitmapArity(domains.len()));
        }
        let bits: usize = domains
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d.max(1)))
            .filter(|&b| b <= BITMAP_MAX_BITS)
            .ok_or(StorageError::BitmapTooLarge)?;
        let row_words = match domains {
            [_, d1] => d1.div_ceil(64).max(1),
            _ => bits.div_ceil(64),
        };
        let rows = if domains.len() == 2 { domains[0] } else { 1 };
        Ok(BitmapSet {
            domains: domains.to_vec(),
            d0: domains.first().copied().unwrap_or(0),
            d1: domains.get(1).copied().unwrap_or(0),
            row_words,
            row_bits: row_words * 64,
            words: vec![0; rows * row_words],
            count: 0,
        })
    }

    pub fn fits(domains: &[usize], max_bits: usize) -> bool {
        domains.len() <= 2
            && domains
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d.max(1)))
                .is_some_and(|b| b <= max_bits)
    }

    pub fn arity(&self) -> usize {
        self.domains.len()
    }

    #[inline]
    fn bit(&self, t: &[u32]) -> Result<usize, StorageError> {
        debug_assert_eq!(t.len(), self.domains.len());
        match *t {
            [a, b] if (a as usize) < self.d0 && (b as usize) < self.d1 => Ok(a as usize * self.row_bits + b as usize),
            [a] if (a as usize) < self.d0 => Ok(a as usize),
            [] => Ok(0),
            _ => Err(self.violation(t)),
        }
    }

    #[cold]
    fn violation(&self, t: &[u32]) -> StorageError {
        for (col, (&v, &d)) in t.iter().zip(&self.domains).enumerate() {
            if v as usize >= d {
                return StorageError::DomainViolation {
                    column: col,
                    value: v,
                    domain: d,
                };
            }
        }
        StorageError::BitmapArity(t.len())
    }

    #[inline]
    pub fn insert_if_new(&mut self, t: &[u32]) -> Result<bool, StorageError> {
        let bit = self.bit(t)?;
        let (w, m) = (bit / 64, 1u64 << (bit % 64));
        if self.words[w] & m != 0 {
            return Ok(false);
        }
        self.words[w] |= m;
        self.count += 1;
        Ok(true)
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        match self.bit(t) {
            Ok(bit) => self.words[bit / 64] & (1 << (bit % 64)) != 0,
            Err(_) => false,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.words.capacity() * 8
    }

    pub fn tuples(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.count);
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let bit = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out.push(match self.domains.len() {
                    0 => vec![],
                    1 => vec![bit as u32],
                    _ => {
                        let row = self.row_words * 64;
                        vec![(bit / row) as u32, (bit % row) as u32]
                    }
                });
            }
        }
        out
    }
}

/// Open-addressing hash set that doubles its table when the load factor
/// would exceed 0.75. Tuples are kept in insertion order in a flat arena.
#[derive(Debug, Clone)]
pub struct DynHashSet {
    arity: usize,
    // 0 = empty; otherwise (hash high bits << 32) | (entry index + 1).
    table: Vec<u64>,
    arena: Vec<u32>,
    count: usize,
    growths: usize,
}

const DYN_INITIAL: usize = 16;

impl DynHashSet {
    pub fn new(arity: usize) -> Self {
        DynHashSet {
            arity,
            table: vec![0; DYN_INITIAL],
            arena: Vec::new(),
            count: 0,
            growths: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn buckets(&self) -> usize {
        self.table.len()
    }

    pub fn growths(&self) -> usize {
        self.growths
    }

    #[inline]
    fn entry(&self, i: usize) -> &[u32] {
        &self.arena[i * self.arity..(i + 1) * self.arity]
    }

    // Slot holding `t`, or the empty slot where it would go.
    #[inline]
    fn probe(&self, t: &[u32], h: u64) -> (usize, bool) {
        let mask = self.table.len() - 1;
        let tag = h >> 32;
        let mut i = h as usize & mask;
        loop {
            let e = self.table[i];
            if e == 0 {
                return (i, false);
            }
            if e >> 32 == tag && self.entry((e as u32 - 1) as usize) == t {
                return (i, true);
            }
            i = (i + 1) & mask;
        }
    }

    #[inline]
    pub fn insert_if_new(&mut self, t: &[u32]) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        let h = hash_tuple(t);
        let (slot, found) = self.probe(t, h);
        if found {
            return false;
        }
        self.arena.extend_from_slice(t);
        self.count += 1;
        self.table[slot] = (h >> 32) << 32 | self.count as u64;
        if self.count * 4 > self.table.len() * 3 {
            self.grow();
        }
        true
    }

    fn grow(&mut self) {
        let size = self.table.len() * 2;
        let mut table = vec![0u64; size];
        let mask = size - 1;
        for i in 0..self.count {
            let h = hash_tuple(self.entry(i));
            let mut s = h as usize & mask;
            while table[s] != 0 {
                s = (s + 1) & mask;
            }
            table[s] = (h >> 32) << 32 | (i as u64 + 1);
        }
        self.table = table;
        self.growths += 1;
    }

    #[inline]
    pub fn contains(&self, t: &[u32]) -> bool {
        t.len() == self.arity && self.probe(t, hash_tuple(t)).1
    }

    /// Stored tuples in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.count).map(move |i| self.entry(i))
    }

    pub fn bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.table.capacity() * 8 + self.arena.capacity() * 4
    }
}

/// Hash set with a fixed number of buckets and chained collisions.
#[derive(Debug, Clone)]
pub struct FixedHashSet {
    arity: usize,
    // Index + 1 of the first entry in each bucket; 0 = empty.
    heads: Vec<u32>,
    next: Vec<u32>,
    arena: Vec<u32>,
}

pub const FIXED_DEFAULT_BUCKETS: usize = 1 << 20;

impl FixedHashSet {
    pub fn new(arity: usize) -> Self {
        Self::with_buckets(arity, FIXED_DEFAULT_BUCKETS)
    }

    /// `buckets` is rounded up to a power of two.
    pub fn with_buckets(arity: usize, buckets: usize) -> Self {
        FixedHashSet {
            arity,
            heads: vec![0; buckets.max(1).next_power_of_two()],
            next: Vec::new(),
            arena: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    pub fn buckets(&self) -> usize {
        self.heads.len()
    }

    #[inline]
    fn find(&self, t: &[u32], bucket: usize) -> bool {
        let mut e = self.heads[bucket];
        while e != 0 {
            let i = (e - 1) as usize;
            if &self.arena[i * self.arity..(i + 1) * self.arity] == t {
                return true;
            }
            e = self.next[i];
        }
        false
    }

    #[inline]
    pub fn insert_if_new(&mut self, t: &[u32]) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        let bucket = hash_tuple(t) as usize & (self.heads.len() - 1);
        if self.find(t, bucket) {
            return false;
        }
        self.arena.extend_from_slice(t);
        self.next.push(self.heads[bucket]);
        self.heads[bucket] = self.next.len() as u32;
        true
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        t.len() == self.arity && self.find(t, hash_tuple(t) as usize & (self.heads.len() - 1))
    }

    /// Stored tuples in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.next.len()).map(move |i| &self.arena[i * self.arity..(i + 1) * self.arity])
    }

    pub fn bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.heads.capacity() * 4 + self.next.capacity() * 4 + self.arena.capacity() * 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(arity: usize, domains: &[usize]) -> Vec<SetRelation> {
        [SetImpl::Bitmap, SetImpl::DynHash, SetImpl::FixedHash]
            .into_iter()
            .map(|k| SetRelation::new(k, arity, domains).unwrap())
            .collect()
    }

    #[test]
    fn second_insert_is_duplicate() {
        for mut s in all(2, &[10, 10]) {
            assert!(s.insert_if_new(&[1, 2]).unwrap());
            assert!(!s.insert_if_new(&[1, 2]).unwrap());
            assert!(s.contains(&[1, 2]));
            assert!(!s.contains(&[2, 1]));
            assert_eq!(s.len(), 1);
        }
    }

    #[test]
    fn zero_and_unary_arity() {
        for mut s in all(0, &[]) {
            assert!(s.insert_if_new(&[]).unwrap());
            assert!(!s.insert_if_new(&[]).unwrap());
        }
        for mut s in all(1, &[100]) {
            assert!(s.insert_if_new(&[99]).unwrap());
            assert!(s.insert_if_new(&[0]).unwrap());
            assert!(!s.insert_if_new(&[99]).unwrap());
            assert_eq!(s.len(), 2);
        }
    }

    #[test]
    fn bitmap_domain_violation() {
        let mut s = BitmapSet::new(&[4, 4]).unwrap();
        assert!(matches!(
            s.insert_if_new(&[1, 4]),
            Err(StorageError::DomainViolation { column: 1, .. })
        ));
        assert!(BitmapSet::new(&[2, 2, 2]).is_err());
    }

    #[test]
    fn dynhash_grows_and_keeps_members() {
        let mut s = DynHashSet::new(2);
        for i in 0..10_000u32 {
            assert!(s.insert_if_new(&[i, i.wrapping_mul(7919)]));
        }
        assert!(s.growths() >= 3);
        assert!(s.len() * 4 <= s.buckets() * 3);
        for i in 0..10_000u32 {
            assert!(s.contains(&[i, i.wrapping_mul(7919)]));
            assert!(!s.contains(&[i, i.wrapping_mul(7919) + 1]));
        }
    }

    #[test]
    fn fixed_hash_chains() {
        let mut s = FixedHashSet::with_buckets(1, 4);
        for i in 0..100 {
            assert!(s.insert_if_new(&[i]));
        }
        for i in 0..100 {
            assert!(!s.insert_if_new(&[i]));
        }
        assert_eq!(s.len(), 100);
        assert_eq!(s.buckets(), 4);
    }

    #[test]
    fn tuples_round_trip() {
        for mut s in all(2, &[70, 70]) {
            let mut want = vec![vec![3, 69], vec![0, 0], vec![69, 1], vec![1, 64]];
            for t in &want {
                s.insert_if_new(t).unwrap();
            }
            let mut got = s.tuples();
            got.sort();
            want.sort();
            assert_eq!(got, want, "{}", s.kind().name());
        }
    }
}
