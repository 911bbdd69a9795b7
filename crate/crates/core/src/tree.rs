use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::split::SplitPos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
  Leaf,
  Split(SplitPos),
}

/// Binary split tree stored as its pre-order node sequence (left/top child
/// before right/bottom). For a full binary tree the sequence alone fixes the
/// shape, so derived equality is structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitTree {
  width: usize,
  height: usize,
  nodes: Vec<Node>,
}

impl SplitTree {
  pub fn leaf(width: usize, height: usize) -> Self {
    Self { width, height, nodes: vec![Node::Leaf] }
  }

  /// Builds a tree from pre-order nodes, rejecting malformed sequences and
  /// splits that are not strictly interior to their region.
  pub fn from_preorder(width: usize, height: usize, nodes: Vec<Node>) -> Result<Self> {
    let tree = Self { width, height, nodes };
    tree.validate()?;
    Ok(tree)
  }

  pub fn width(&self) -> usize {
    self.width
  }

  pub fn height(&self) -> usize {
    self.height
  }

  pub fn nodes(&self) -> &[Node] {
    &self.nodes
  }

  pub fn node_count(&self) -> usize {
    self.nodes.len()
  }

  pub fn leaf_count(&self) -> usize {
    self.nodes.iter().filter(|n| matches!(n, Node::Leaf)).count()
  }

  pub fn split_count(&self) -> usize {
    self.nodes.len() - self.leaf_count()
  }

  /// Pre-order `(region, node)` pairs.
  pub fn walk(&self) -> Walk<'_> {
    Walk { nodes: self.nodes.iter(), stack: vec![Cuboid::full(self.width, self.height)] }
  }

  /// Leaf regions in pre-order.
  pub fn leaves(&self) -> Vec<Cuboid> {
    self.walk().filter(|(_, n)| matches!(n, Node::Leaf)).map(|(r, _)| r).collect()
  }

  pub fn validate(&self) -> Result<()> {
    if self.width == 0 || self.height == 0 {
      return Err(Error::ZeroDimensions { width: self.width, height: self.height });
    }
    let mut stack = vec![Cuboid::full(self.width, self.height)];
    for (i, node) in self.nodes.iter().enumerate() {
      let region = stack
        .pop()
        .ok_or_else(|| Error::InvalidTree(format!("{} trailing nodes", self.nodes.len() - i)))?;
      if let Node::Split(pos) = node {
        if !pos.is_valid_for(region) {
          return Err(Error::InvalidTree(format!(
            "split {:?}@{} is not interior to {region}",
            pos.axis, pos.offset
          )));
        }
        let (first, second) = pos.apply(region);
        stack.push(second);
        stack.push(first);
      }
    }
    if !stack.is_empty() {
      return Err(Error::InvalidTree(format!("{} subtrees missing", stack.len())));
    }
    Ok(())
  }
}

pub struct Walk<'a> {
  nodes: std::slice::Iter<'a, Node>,
  stack: Vec<Cuboid>,
}

impl Iterator for Walk<'_> {
  type Item = (Cuboid, Node);

  fn next(&mut self) -> Option<Self::Item> {
    let node = *self.nodes.next()?;
    let region = self.stack.pop()?;
    if let Node::Split(pos) = node {
      let (first, second) = pos.apply(region);
      self.stack.push(second);
      self.stack.push(first);
    }
    Some((region, node))
  }
}

/// Grows a tree one split at a time in any order, then flattens it.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
  width: usize,
  height: usize,
  arena: Vec<BuildNode>,
}

#[derive(Debug, Clone)]
struct BuildNode {
  region: Cuboid,
  children: Option<(SplitPos, usize, usize)>,
}

impl TreeBuilder {
  pub const ROOT: usize = 0;

  pub fn new(width: usize, height: usize) -> Self {
    Self {
      width,
      height,
      arena: vec![BuildNode { region: Cuboid::full(width, height), children: None }],
    }
  }

  pub fn region(&self, id: usize) -> Cuboid {
    self.arena[id].region
  }

  /// Splits leaf `id`; returns the ids of the left/top and right/bottom
  /// children. Ids are assigned in creation order.
  pub fn split(&mut self, id: usize, pos: SplitPos) -> Result<(usize, usize)> {
    let node = &self.arena[id];
    if node.children.is_some() {
      return Err(Error::InvalidTree(format!("node {id} is already split")));
    }
    if !pos.is_valid_for(node.region) {
      return Err(Error::InvalidTree(format!("split not interior to {}", node.region)));
    }
    let (first, second) = pos.apply(node.region);
    let a = self.arena.len();
    self.arena[id].children = Some((pos, a, a + 1));
    self.arena.push(BuildNode { region: first, children: None });
    self.arena.push(BuildNode { region: second, children: None });
    Ok((a, a + 1))
  }

  pub fn finish(&self) -> SplitTree {
    let mut nodes = Vec::with_capacity(self.arena.len());
    let mut stack = vec![Self::ROOT];
    while let Some(id) = stack.pop() {
      match self.arena[id].children {
        None => nodes.push(Node::Leaf),
        Some((pos, a, b)) => {
          nodes.push(Node::Split(pos));
          stack.push(b);
          stack.push(a);
        }
      }
    }
    SplitTree { width: self.width, height: self.height, nodes }
  }
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::split::Axis;

  #[test]
  fn builder_flattens_preorder() {
    let mut b = TreeBuilder::new(4, 4);
    let (l, r) = b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Vertical, 2)).unwrap();
    // split the right half first to exercise creation order != pre-order
    b.split(r, SplitPos::new(Axis::Horizontal, 1)).unwrap();
    b.split(l, SplitPos::new(Axis::Horizontal, 3)).unwrap();
    let t = b.finish();
    assert_eq!(
      t.nodes(),
      &[
        Node::Split(SplitPos::new(Axis::Vertical, 2)),
        Node::Split(SplitPos::new(Axis::Horizontal, 3)),
        Node::Leaf,
        Node::Leaf,
        Node::Split(SplitPos::new(Axis::Horizontal, 1)),
        Node::Leaf,
        Node::Leaf,
      ]
    );
    assert_eq!(
      t.leaves(),
      vec![
        Cuboid::new(0, 0, 2, 3),
        Cuboid::new(0, 3, 2, 1),
        Cuboid::new(2, 0, 2, 1),
        Cuboid::new(2, 1, 2, 3),
      ]
    );
    assert_eq!(t.node_count(), 2 * t.leaf_count() - 1);
    t.validate().unwrap();
  }

  #[test]
  fn malformed_sequences_rejected() {
    let v = Node::Split(SplitPos::new(Axis::Vertical, 1));
    assert!(SplitTree::from_preorder(2, 2, vec![v, Node::Leaf]).is_err());
    assert!(SplitTree::from_preorder(2, 2, vec![Node::Leaf, Node::Leaf]).is_err());
    assert!(SplitTree::from_preorder(
      2,
      2,
      vec![Node::Split(SplitPos::new(Axis::Vertical, 2)), Node::Leaf, Node::Leaf]
    )
    .is_err());
    assert!(SplitTree::from_preorder(2, 2, vec![v, Node::Leaf, Node::Leaf]).is_ok());
  }
}
