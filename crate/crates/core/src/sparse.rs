use rustc_hash::FxHashMap;

use crate::graph::NodeId;

/// Entries whose magnitude falls below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// A hashed vector switches to a dense array once it holds at least this many
/// entries and covers at least `1 / DENSE_RATIO` of its id range.
const DENSE_MIN_NNZ: usize = 256;
const DENSE_RATIO: usize = 8;

#[derive(Debug, Clone)]
enum Repr {
    Hashed {
        entries: FxHashMap<NodeId, f64>,
        /// One past the largest id stored so far.
        bound: usize,
    },
    Dense {
        values: Vec<f64>,
        nnz: usize,
    },
}

impl Default for Repr {
    fn default() -> Self {
        Repr::Hashed {
            entries: FxHashMap::default(),
            bound: 0,
        }
    }
}

/// Real vector keyed by node. Exact zeros are never stored.
///
/// Small supports live in a hash map. Once the support is a sizable fraction
/// of the id range the entries move to a dense array.
#[derive(Debug, Clone, Default)]
pub struct SparseVector {
    repr: Repr,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(node: NodeId) -> Self {
        let mut v = Self::new();
        v.set(node, 1.0);
        v
    }

    #[inline]
    pub fn get(&self, node: NodeId) -> f64 {
        match &self.repr {
            Repr::Hashed { entries, .. } => entries.get(&node).copied().unwrap_or(0.0),
            Repr::Dense { values, .. } => values.get(node.index()).copied().unwrap_or(0.0),
        }
    }

    #[inline]
    pub(crate) fn prefetch(&self, node: NodeId) {
        if let Repr::Dense { values, .. } = &self.repr {
            if let Some(slot) = values.get(node.index()) {
                crate::prefetch::prefetch(slot);
            }
        }
    }

    #[inline]
    pub fn set(&mut self, node: NodeId, value: f64) {
        let value = if value.abs() < PRUNE_THRESHOLD { 0.0 } else { value };
        self.write(node, |_| value);
    }

    /// Adds `delta` to the entry and returns the new value.
    #[inline]
    pub fn add(&mut self, node: NodeId, delta: f64) -> f64 {
        self.add_with_previous(node, delta).1
    }

    /// Adds `delta` to the entry and returns the values before and after.
    #[inline]
    pub fn add_with_previous(&mut self, node: NodeId, delta: f64) -> (f64, f64) {
        self.write(node, |old| {
            let value = old + delta;
            if value.abs() < PRUNE_THRESHOLD {
                0.0
            } else {
                value
            }
        })
    }

    #[inline]
    fn write(&mut self, node: NodeId, f: impl FnOnce(f64) -> f64) -> (f64, f64) {
        let i = node.index();
        if let Repr::Dense { values, nnz } = &mut self.repr {
            if let Some(slot) = values.get_mut(i) {
                let old = *slot;
                let new = f(old);
                *slot = new;
                match (old != 0.0, new != 0.0) {
                    (false, true) => *nnz += 1,
                    (true, false) => *nnz -= 1,
                    _ => {}
                }
                return (old, new);
            }
            let new = f(0.0);
            if new == 0.0 {
                return (0.0, 0.0);
            }
            if (*nnz + 1) * DENSE_RATIO * 2 > i {
                values.resize(i + 1, 0.0);
                values[i] = new;
                *nnz += 1;
                return (0.0, new);
            }
            self.demote();
            if let Repr::Hashed { entries, bound } = &mut self.repr {
                entries.insert(node, new);
                *bound = i + 1;
            }
            return (0.0, new);
        }

        let Repr::Hashed { entries, bound } = &mut self.repr else {
            unreachable!()
        };
        let old = entries.get(&node).copied().unwrap_or(0.0);
        let new = f(old);
        if new == 0.0 {
            entries.remove(&node);
        } else {
            entries.insert(node, new);
            *bound = (*bound).max(i + 1);
            if old == 0.0
                && entries.len() >= DENSE_MIN_NNZ
                && entries.len() * DENSE_RATIO >= *bound
            {
                self.promote();
            }
        }
        (old, new)
    }

    fn promote(&mut self) {
        if let Repr::Hashed { entries, bound } = &self.repr {
            let mut values = vec![0.0; *bound];
            for (&k, &x) in entries {
                values[k.index()] = x;
            }
            self.repr = Repr::Dense {
                nnz: entries.len(),
                values,
            };
        }
    }

    fn demote(&mut self) {
        if let Repr::Dense { values, .. } = &self.repr {
            let entries: FxHashMap<NodeId, f64> = values
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (NodeId(i as u32), x))
                .collect();
            self.repr = Repr::Hashed {
                entries,
                bound: values.len(),
            };
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Hashed { entries, .. } => entries.len(),
            Repr::Dense { nnz, .. } => *nnz,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nnz() == 0
    }

    pub fn l1_norm(&self) -> f64 {
        self.sorted_entries().iter().map(|(_, x)| x.abs()).sum()
    }

    /// Nonzero entries in unspecified order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (NodeId, f64)> + '_> {
        match &self.repr {
            Repr::Hashed { entries, .. } => Box::new(entries.iter().map(|(&k, &v)| (k, v))),
            Repr::Dense { values, .. } => Box::new(
                values
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(i, &x)| (NodeId(i as u32), x)),
            ),
        }
    }

    /// Entries in ascending node order.
    pub fn sorted_entries(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<_> = self.iter().collect();
        if let Repr::Hashed { .. } = self.repr {
            out.sort_unstable_by_key(|&(k, _)| k);
        }
        out
    }

    /// Calls `f` on every nonzero entry in ascending node order.
    pub fn for_each_ascending(&self, mut f: impl FnMut(NodeId, f64)) {
        match &self.repr {
            Repr::Hashed { .. } => {
                for (k, x) in self.sorted_entries() {
                    f(k, x);
                }
            }
            Repr::Dense { values, .. } => {
                for (i, &x) in values.iter().enumerate() {
                    if x != 0.0 {
                        f(NodeId(i as u32), x);
                    }
                }
            }
        }
    }

    /// Dense copy over ids `0..len`; entries beyond `len` are dropped.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (k, v) in self.iter() {
            if k.index() < len {
                out[k.index()] = v;
            }
        }
        out
    }
}

impl PartialEq for SparseVector {
    fn eq(&self, other: &Self) -> bool {
        self.nnz() == other.nnz() && self.iter().all(|(k, x)| other.get(k) == x)
    }
}

impl FromIterator<(NodeId, f64)> for SparseVector {
    fn from_iter<I: IntoIterator<Item = (NodeId, f64)>>(iter: I) -> Self {
        let mut v = SparseVector::new();
        for (k, x) in iter {
            v.add(k, x);
        }
        v
    }
}
