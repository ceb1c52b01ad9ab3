//! Binary tree over arm indices and its lazily extended leaf chains.

use std::fmt::Write as _;

use crate::error::{Result, TbpError};

/// Arm indices `(L, M, R)` of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub l: usize,
    pub m: usize,
    pub r: usize,
}

impl Triple {
    pub fn new(l: usize, r: usize) -> Self {
        Triple {
            l,
            m: (l + r) / 2,
            r,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.r == self.l + 1
    }
}

/// Ancestor record kept on a node's path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathEntry {
    pub triple: Triple,
    pub dup_count: usize,
}

/// A node of the extended tree.
///
/// `dup_count > 0` marks a copy of a leaf somewhere down its infinite chain.
/// The ancestor stack is kept explicitly so parents along the chain are
/// unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    triple: Triple,
    dup_count: usize,
    path: Vec<PathEntry>,
}

impl Node {
    pub fn triple(&self) -> Triple {
        self.triple
    }

    pub fn l(&self) -> usize {
        self.triple.l
    }

    pub fn m(&self) -> usize {
        self.triple.m
    }

    pub fn r(&self) -> usize {
        self.triple.r
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn dup_count(&self) -> usize {
        self.dup_count
    }

    pub fn path(&self) -> &[PathEntry] {
        &self.path
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.triple.is_leaf()
    }

    fn entry(&self) -> PathEntry {
        PathEntry {
            triple: self.triple,
            dup_count: self.dup_count,
        }
    }

    fn child(&self, triple: Triple, dup_count: usize) -> Node {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(self.entry());
        Node {
            triple,
            dup_count,
            path,
        }
    }

    /// `None` for leaves, whose left child is empty in the extended tree.
    pub fn left(&self) -> Option<Node> {
        if self.is_leaf() {
            return None;
        }
        let Triple { l, m, .. } = self.triple;
        Some(self.child(Triple::new(l, m), 0))
    }

    /// For leaves this is the next copy down the chain.
    pub fn right(&self) -> Node {
        if self.is_leaf() {
            return self.child(self.triple, self.dup_count + 1);
        }
        let Triple { m, r, .. } = self.triple;
        self.child(Triple::new(m, r), 0)
    }

    pub fn children(&self) -> (Option<Node>, Node) {
        (self.left(), self.right())
    }

    /// The root is its own parent.
    pub fn parent(&self) -> Node {
        match self.path.split_last() {
            None => self.clone(),
            Some((last, rest)) => Node {
                triple: last.triple,
                dup_count: last.dup_count,
                path: rest.to_vec(),
            },
        }
    }

    /// Ancestors from the root down, followed by the node itself.
    pub fn lineage(&self) -> impl DoubleEndedIterator<Item = (usize, Triple)> + '_ {
        (0..=self.path.len()).map(|d| match self.path.get(d) {
            Some(e) => (d, e.triple),
            None => (d, self.triple),
        })
    }
}

pub fn root(k: usize) -> Result<Node> {
    if k < 3 {
        return Err(TbpError::TooFewArms { min: 3, got: k });
    }
    Ok(Node {
        triple: Triple::new(1, k),
        dup_count: 0,
        path: Vec::new(),
    })
}

/// `floor(log2 K) + 1`.
pub fn max_depth(k: usize) -> usize {
    (usize::BITS - k.leading_zeros()) as usize
}

/// Nodes of the original (unextended) tree in preorder.
pub fn preorder(k: usize) -> Result<Vec<Node>> {
    let mut out = Vec::with_capacity(2 * k);
    let mut stack = vec![root(k)?];
    while let Some(node) = stack.pop() {
        if let Some(left) = node.left() {
            stack.push(node.right());
            stack.push(left);
        }
        out.push(node);
    }
    Ok(out)
}

/// One `depth,L,M,R,leaf_flag` line per original-tree node, preorder.
pub fn dump(k: usize) -> Result<String> {
    let mut s = String::new();
    for node in preorder(k)? {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            node.depth(),
            node.l(),
            node.m(),
            node.r(),
            u8::from(node.is_leaf())
        );
    }
    Ok(s)
}
