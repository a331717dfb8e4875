//! Bounded per-thread memo tables for pure geometric steps.

use std::cell::RefCell;
use std::collections::HashMap;
use std::hash::Hash;
use std::thread::LocalKey;

use crate::error::Result;

pub(crate) type Table<K, V> = RefCell<HashMap<K, V>>;

const CAP: usize = 1 << 14;

/// Looks `key` up in `table`, computing and storing it on a miss. Errors are
/// not cached. The table is dropped wholesale when it reaches its cap.
pub(crate) fn cached<K, V>(
    table: &'static LocalKey<Table<K, V>>,
    key: K,
    f: impl FnOnce() -> Result<V>,
) -> Result<V>
where
    K: Hash + Eq,
    V: Clone,
{
    if let Some(hit) = table.with(|m| m.borrow().get(&key).cloned()) {
        return Ok(hit);
    }
    let val = f()?;
    table.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= CAP {
            m.clear();
        }
        m.insert(key, val.clone());
    });
    Ok(val)
}
