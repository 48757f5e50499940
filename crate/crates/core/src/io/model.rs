//! GRFM trained-forest files.
//!
//! ```text
//! "GRFM" | version u32 = 1 | K u32 | dim u32 | n_trees u32 |
//! per tree, nodes in preorder:
//!     tag u8 = 0: leaf, K × u32 class counts
//!     tag u8 = 1: internal, feature u32, threshold f32 (left subtree, then right)
//! crc32 u32 over everything after the magic
//! ```

use std::path::Path;

use super::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::forest::{Forest, Node, Tree};

const MAGIC: &[u8; 4] = b"GRFM";
const TAG_LEAF: u8 = 0;
const TAG_SPLIT: u8 = 1;

pub fn encode_forest(forest: &Forest) -> Result<Vec<u8>> {
    let mut enc = Encoder::new(MAGIC);
    enc.count(forest.n_classes, "class count")?;
    enc.count(forest.dim, "feature dim")?;
    enc.count(forest.trees.len(), "tree count")?;
    for tree in &forest.trees {
        // explicit stack: right child pushed first so left is emitted first
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &tree.nodes[i] {
                Node::Leaf { class_counts } => {
                    enc.u8(TAG_LEAF);
                    for &c in class_counts {
                        enc.u32(c);
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    enc.u8(TAG_SPLIT);
                    enc.count(*feature, "feature index")?;
                    enc.f32(*threshold);
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
    }
    Ok(enc.finish())
}

pub fn decode_forest(bytes: &[u8]) -> Result<Forest> {
    let mut dec = Decoder::new(bytes, MAGIC)?;
    let n_classes = dec.u32()? as usize;
    let dim = dec.u32()? as usize;
    let n_trees = dec.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees.min(4096));
    for _ in 0..n_trees {
        trees.push(decode_tree(&mut dec, n_classes)?);
    }
    dec.finish()?;
    let forest = Forest { trees, n_classes, dim };
    forest.validate()?;
    Ok(forest)
}

fn decode_tree(dec: &mut Decoder<'_>, n_classes: usize) -> Result<Tree> {
    let mut nodes = Vec::new();
    // internal nodes still waiting for a child
    let mut open: Vec<usize> = Vec::new();
    loop {
        let id = nodes.len();
        let node = match dec.u8()? {
            TAG_LEAF => {
                let mut class_counts = Vec::with_capacity(n_classes.min(1024));
                for _ in 0..n_classes {
                    class_counts.push(dec.u32()?);
                }
                Node::Leaf { class_counts }
            }
            TAG_SPLIT => Node::Split {
                feature: dec.u32()? as usize,
                threshold: dec.f32()?,
                left: usize::MAX,
                right: usize::MAX,
            },
            tag => return Err(Error::Format(format!("unknown node tag {tag}"))),
        };
        let is_split = matches!(node, Node::Split { .. });
        nodes.push(node);
        if let Some(&parent) = open.last() {
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                if *left == usize::MAX {
                    *left = id;
                } else {
                    *right = id;
                    open.pop();
                }
            }
        }
        if is_split {
            open.push(id);
        }
        if open.is_empty() {
            return Ok(Tree { nodes });
        }
    }
}

pub fn write_forest(forest: &Forest, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &encode_forest(forest)?)
}

pub fn load_forest(path: impl AsRef<Path>) -> Result<Forest> {
    decode_forest(&super::read_file(path.as_ref())?)
}
