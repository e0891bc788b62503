use super::StorageError;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    // Edge label leading into this node, as a range of `labels`.
    start: u32,
    len: u32,
    id: u32,
    // Sorted by first label byte.
    children: Vec<(u8, u32)>,
}

/// Interns strings to dense ids `0..n` using a radix tree for the forward map.
#[derive(Debug, Clone)]
pub struct StringTable {
    nodes: Vec<Node>,
    labels: Vec<u8>,
    text: String,
    offsets: Vec<u32>,
}

impl Default for StringTable {
    fn default() -> Self {
        Self::new()
    }
}

impl StringTable {
    pub fn new() -> Self {
        StringTable {
            nodes: vec![Node {
                start: 0,
                len: 0,
                id: NONE,
                children: Vec::new(),
            }],
            labels: Vec::new(),
            text: String::new(),
            offsets: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, n: u32) -> &[u8] {
        let node = &self.nodes[n as usize];
        &self.labels[node.start as usize..(node.start + node.len) as usize]
    }

    fn child(&self, n: u32, b: u8) -> Result<u32, usize> {
        let children = &self.nodes[n as usize].children;
        children.binary_search_by_key(&b, |c| c.0).map(|i| children[i].1)
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        let mut key = s.as_bytes();
        let mut node = 0u32;
        loop {
            if key.is_empty() {
                let id = self.nodes[node as usize].id;
                return (id != NONE).then_some(id);
            }
            let c = self.child(node, key[0]).ok()?;
            let label = self.label(c);
            if !key.starts_with(label) {
                return None;
            }
            key = &key[label.len()..];
            node = c;
        }
    }

    /// Returns the id of `s`, assigning the next sequential id if it is new.
    pub fn intern(&mut self, s: &str) -> u32 {
        let mut key = s.as_bytes();
        let mut node = 0u32;
        loop {
            if key.is_empty() {
                return self.assign(node, s);
            }
            let slot = match self.child(node, key[0]) {
                Ok(c) => c,
                Err(pos) => {
                    let leaf = self.push_node(key);
                    self.nodes[node as usize].children.insert(pos, (key[0], leaf));
                    return self.assign(leaf, s);
                }
            };
            let label = self.label(slot);
            let common = label.iter().zip(key).take_while(|(a, b)| a == b).count();
            if common < label.len() {
                self.split(node, slot, common);
                let mid = self.child(node, key[0]).unwrap_or_else(|_| unreachable!());
                key = &key[common..];
                node = mid;
            } else {
                key = &key[common..];
                node = slot;
            }
        }
    }

    fn push_node(&mut self, label: &[u8]) -> u32 {
        let start = self.labels.len() as u32;
        self.labels.extend_from_slice(label);
        self.nodes.push(Node {
            start,
            len: label.len() as u32,
            id: NONE,
            children: Vec::new(),
        });
        (self.nodes.len() - 1) as u32
    }

    // Inserts a node holding the first `at` bytes of `child`'s label between
    // `parent` and `child`.
    fn split(&mut self, parent: u32, child: u32, at: usize) {
        let c = &self.nodes[child as usize];
        let (start, first) = (c.start, self.labels[c.start as usize]);
        let rest = self.labels[(c.start as usize) + at];
        let mid = self.nodes.len() as u32;
        self.nodes.push(Node {
            start,
            len: at as u32,
            id: NONE,
            children: vec![(rest, child)],
        });
        let c = &mut self.nodes[child as usize];
        c.start += at as u32;
        c.len -= at as u32;
        let siblings = &mut self.nodes[parent as usize].children;
        if let Ok(i) = siblings.binary_search_by_key(&first, |e| e.0) {
            siblings[i].1 = mid;
        }
    }

    fn assign(&mut self, node: u32, s: &str) -> u32 {
        let id = self.nodes[node as usize].id;
        if id != NONE {
            return id;
        }
        let id = self.len() as u32;
        self.nodes[node as usize].id = id;
        self.text.push_str(s);
        self.offsets.push(self.text.len() as u32);
        id
    }

    pub fn resolve(&self, id: u32) -> Result<&str, StorageError> {
        let i = id as usize;
        if i >= self.len() {
            return Err(StorageError::UnknownId { id, len: self.len() });
        }
        Ok(&self.text[self.offsets[i] as usize..self.offsets[i + 1] as usize])
    }

    /// Allocated bytes of the tree, labels and reverse array.
    pub fn bytes(&self) -> usize {
        let nodes = self.nodes.capacity() * std::mem::size_of::<Node>()
            + self
                .nodes
                .iter()
                .map(|n| n.children.capacity() * std::mem::size_of::<(u8, u32)>())
                .sum::<usize>();
        nodes + self.labels.capacity() + self.text.capacity() + self.offsets.capacity() * 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_insert_is_zero() {
        let mut t = StringTable::new();
        assert_eq!(t.intern("title"), 0);
        assert_eq!(t.intern("title"), 0);
        assert_eq!(t.intern("year"), 1);
        assert_eq!(t.resolve(1).unwrap(), "year");
    }

    #[test]
    fn prefixes_and_splits() {
        let mut t = StringTable::new();
        let words = [
            "romane", "romanus", "romulus", "rubens", "ruber", "rubicon", "r", "", "rom",
        ];
        for (i, w) in words.iter().enumerate() {
            assert_eq!(t.intern(w), i as u32, "{w}");
        }
        for (i, w) in words.iter().enumerate() {
            assert_eq!(t.get(w), Some(i as u32));
            assert_eq!(t.resolve(i as u32).unwrap(), *w);
        }
        assert_eq!(t.get("ro"), None);
        assert_eq!(t.get("romanes"), None);
    }

    #[test]
    fn out_of_range_id() {
        let mut t = StringTable::new();
        t.intern("x");
        assert!(t.resolve(1_000_000_000).is_err());
    }

    #[test]
    fn multibyte_text() {
        let mut t = StringTable::new();
        let a = t.intern("Gödel");
        let b = t.intern("Göteborg");
        assert_ne!(a, b);
        assert_eq!(t.resolve(a).unwrap(), "Gödel");
        assert_eq!(t.resolve(b).unwrap(), "Göteborg");
    }
}
