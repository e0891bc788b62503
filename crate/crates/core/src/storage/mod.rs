//! Main-memory relations over interned `u32` tuples.

mod hash;
mod list;
mod map;
mod memory;
mod set;
mod string_table;

pub use hash::hash_tuple;
pub use list::{ListCursor, ListRelation, PAGE_WORDS};
pub use map::{MapCursor, MapRelation};
pub use memory::{MemoryEntry, MemoryReport};
pub use set::{BitmapSet, DynHashSet, FixedHashSet, SetImpl, SetRelation, BITMAP_MAX_BITS, FIXED_DEFAULT_BUCKETS};
pub use string_table::StringTable;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("tuple arity {got} does not match relation arity {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("value {value} in column {column} is outside the bitmap domain 0..{domain}")]
    DomainViolation { column: usize, value: u32, domain: usize },
    #[error("bitmap sets support at most two columns, got {0}")]
    BitmapArity(usize),
    #[error("bitmap would exceed the size limit")]
    BitmapTooLarge,
    #[error("string id {id} is out of range (table has {len} entries)")]
    UnknownId { id: u32, len: usize },
}
