use std::fmt;

/// One line of a memory report.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MemoryEntry {
    pub name: String,
    pub kind: String,
    pub rows: usize,
    pub bytes: usize,
}

/// Per-structure row counts and allocated bytes, in registration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct MemoryReport {
    pub entries: Vec<MemoryEntry>,
}

impl MemoryReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, kind: impl Into<String>, rows: usize, bytes: usize) {
        self.entries.push(MemoryEntry {
            name: name.into(),
            kind: kind.into(),
            rows,
            bytes,
        });
    }

    pub fn get(&self, name: &str) -> Option<&MemoryEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.bytes).sum()
    }
}

impl fmt::Display for MemoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        writeln!(f, "{:width$}  {:<12} {:>12} {:>12}", "name", "kind", "rows", "KB")?;
        for e in &self.entries {
            writeln!(
                f,
                "{:width$}  {:<12} {:>12} {:>12}",
                e.name,
                e.kind,
                e.rows,
                e.bytes.div_ceil(1024)
            )?;
        }
        Ok(())
    }
}
