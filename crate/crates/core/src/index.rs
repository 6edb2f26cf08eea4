//! Dual-variant index handles.
//!
//! Every index identity exists in exactly two variants, `true` and `false`.
//! Repeating an identity with complementary variants requests a summation;
//! repeating it with the same variant requests entrywise pairing. Handles are
//! plain `Copy` values so matching indices never needs a registry lookup.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// One variant of a globally unique index identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexHandle {
    id: u64,
    variant: bool,
}

impl IndexHandle {
    /// A new true-variant index whose identity was never handed out before.
    pub fn fresh() -> Self {
        let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
        IndexHandle { id, variant: true }
    }

    /// `n` pairwise-distinct true-variant indices.
    pub fn fresh_many(n: usize) -> Vec<Self> {
        (0..n).map(|_| Self::fresh()).collect()
    }

    pub fn id(self) -> u64 {
        self.id
    }

    pub fn variant(self) -> bool {
        self.variant
    }

    /// Same identity, flipped variant.
    pub fn complement(self) -> Self {
        IndexHandle {
            id: self.id,
            variant: !self.variant,
        }
    }

    pub fn as_true(self) -> Self {
        IndexHandle {
            id: self.id,
            variant: true,
        }
    }

    pub fn as_false(self) -> Self {
        IndexHandle {
            id: self.id,
            variant: false,
        }
    }

    pub fn with_variant(self, variant: bool) -> Self {
        IndexHandle { id: self.id, variant }
    }

    /// Identity comparison, ignoring variants.
    pub fn same_id(self, other: Self) -> bool {
        self.id == other.id
    }
}

impl std::ops::Not for IndexHandle {
    type Output = IndexHandle;

    fn not(self) -> IndexHandle {
        self.complement()
    }
}

impl fmt::Debug for IndexHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.variant {
            write!(f, "#{}", self.id)
        } else {
            write!(f, "~#{}", self.id)
        }
    }
}

impl fmt::Display for IndexHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Position of the first handle in `list` sharing `h`'s identity.
pub(crate) fn position_of(list: &[IndexHandle], h: IndexHandle) -> Option<usize> {
    list.iter().position(|x| x.same_id(h))
}

pub fn complement_all(list: &[IndexHandle]) -> Vec<IndexHandle> {
    list.iter().map(|h| h.complement()).collect()
}
