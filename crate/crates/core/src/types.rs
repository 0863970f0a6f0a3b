use std::fmt;

use serde::{Deserialize, Serialize};

/// Partition of a bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    U,
    V,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::U => Side::V,
            Side::V => Side::U,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::U => 0,
            Side::V => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::U => f.write_str("U"),
            Side::V => f.write_str("V"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub side: Side,
    pub id: u64,
}

impl NodeId {
    pub fn u(id: u64) -> Self {
        NodeId { side: Side::U, id }
    }

    pub fn v(id: u64) -> Self {
        NodeId { side: Side::V, id }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.side, self.id)
    }
}

/// A bipartite edge, always oriented U first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub u: u64,
    pub v: u64,
}

impl EdgeKey {
    pub fn new(u: u64, v: u64) -> Self {
        EdgeKey { u, v }
    }

    pub fn endpoint(&self, side: Side) -> NodeId {
        match side {
            Side::U => NodeId::u(self.u),
            Side::V => NodeId::v(self.v),
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(U{}, V{})", self.u, self.v)
    }
}

/// Unordered pair of distinct same-side nodes, stored smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub side: Side,
    pub a: u64,
    pub b: u64,
}

impl PairKey {
    /// Canonical pair for two distinct ids on `side`.
    pub fn new(side: Side, x: u64, y: u64) -> crate::Result<Self> {
        if x == y {
            return Err(crate::Error::InvalidPair);
        }
        Ok(Self::canonical(side, x, y))
    }

    pub fn from_nodes(x: NodeId, y: NodeId) -> crate::Result<Self> {
        if x.side != y.side {
            return Err(crate::Error::InvalidPair);
        }
        Self::new(x.side, x.id, y.id)
    }

    #[inline]
    pub(crate) fn canonical(side: Side, x: u64, y: u64) -> Self {
        debug_assert_ne!(x, y);
        if x < y {
            PairKey { side, a: x, b: y }
        } else {
            PairKey { side, a: y, b: x }
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{}, {}{})", self.side, self.a, self.side, self.b)
    }
}

/// One wedge's contribution to a pair's similarity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityUpdate {
    pub key: PairKey,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_key_is_canonical() {
        let a = PairKey::new(Side::U, 9, 2).unwrap();
        let b = PairKey::new(Side::U, 2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.a, a.b), (2, 9));
    }

    #[test]
    fn pair_key_rejects_self_and_mixed_sides() {
        assert!(PairKey::new(Side::V, 4, 4).is_err());
        assert!(PairKey::from_nodes(NodeId::u(1), NodeId::v(2)).is_err());
    }
}
