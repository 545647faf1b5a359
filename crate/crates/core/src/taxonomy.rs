//! Rooted topic tree with level bookkeeping and Other-node extension.
//!
//! Nodes live in an arena indexed by `usize`; the index of a node never
//! changes once it is inserted, so per-topic state elsewhere in the crate is
//! kept in plain vectors parallel to the arena.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix appended to a parent id to name its synthetic Other child.
pub const OTHER_SUFFIX: &str = "::other";
/// Inference-only label for documents outside every pivot topic.
pub const NONE_LABEL: &str = "__none__";
/// Pivot level used when neither the file nor the caller supplies one.
pub const DEFAULT_PIVOT: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(String);

impl TopicId {
    pub fn new(id: impl Into<String>) -> Self {
        TopicId(id.into())
    }

    pub fn none() -> Self {
        TopicId(NONE_LABEL.to_string())
    }

    /// The id of the Other child of `parent`.
    pub fn other_of(parent: &TopicId) -> Self {
        TopicId(format!("{}{}", parent.0, OTHER_SUFFIX))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_none_label(&self) -> bool {
        self.0 == NONE_LABEL
    }

    pub fn is_other(&self) -> bool {
        self.0.ends_with(OTHER_SUFFIX)
    }

    /// For an Other id, the id of the parent it extends.
    pub fn other_parent(&self) -> Option<TopicId> {
        self.0
            .strip_suffix(OTHER_SUFFIX)
            .filter(|p| !p.is_empty())
            .map(TopicId::new)
    }

    fn is_reserved(&self) -> bool {
        self.is_none_label() || self.is_other()
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TopicId {
    fn from(s: &str) -> Self {
        TopicId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    User,
    Other,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicNode {
    pub id: TopicId,
    pub parent: Option<usize>,
    /// Insertion order; every tie-break in the crate follows it.
    pub children: Vec<usize>,
    pub level: usize,
    pub kind: NodeKind,
}

/// On-disk taxonomy document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
    pub nodes: Vec<NodeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Taxonomy {
    nodes: Vec<TopicNode>,
    index: HashMap<TopicId, usize>,
    root: usize,
    pivot: usize,
    height: usize,
}

impl Taxonomy {
    /// Parse and validate a taxonomy JSON document.
    pub fn parse(text: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text)?;
        Self::from_file(&file, None)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Build from a parsed document. `pivot_override` wins over the file's
    /// pivot; with neither, [`DEFAULT_PIVOT`] is used.
    pub fn from_file(file: &TaxonomyFile, pivot_override: Option<usize>) -> Result<Self> {
        let mut index = HashMap::with_capacity(file.nodes.len());
        for (i, entry) in file.nodes.iter().enumerate() {
            if entry.id.is_empty() {
                return Err(Error::EmptyId);
            }
            let id = TopicId::new(entry.id.as_str());
            if id.is_reserved() {
                return Err(Error::ReservedId(entry.id.clone()));
            }
            if index.insert(id, i).is_some() {
                return Err(Error::DuplicateId(entry.id.clone()));
            }
        }

        let mut parents = Vec::with_capacity(file.nodes.len());
        let mut roots = Vec::new();
        for (i, entry) in file.nodes.iter().enumerate() {
            match &entry.parent {
                None => {
                    roots.push(i);
                    parents.push(None);
                }
                Some(p) => match index.get(&TopicId::new(p.as_str())) {
                    Some(&pi) => parents.push(Some(pi)),
                    None => {
                        return Err(Error::DanglingParent {
                            id: entry.id.clone(),
                            parent: p.clone(),
                        })
                    }
                },
            }
        }

        let root = match roots.as_slice() {
            [] if file.nodes.is_empty() => return Err(Error::NoRoot),
            // every node has a parent, so following parents must loop
            [] => return Err(Error::CycleDetected(file.nodes[0].id.clone())),
            [r] => *r,
            many => {
                return Err(Error::MultipleRoots(
                    many.iter().map(|&i| file.nodes[i].id.clone()).collect(),
                ))
            }
        };

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); file.nodes.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        let mut levels = vec![usize::MAX; file.nodes.len()];
        levels[root] = 0;
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            for &c in &children[n] {
                levels[c] = levels[n] + 1;
                stack.push(c);
            }
        }
        if let Some(unreached) = levels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::CycleDetected(file.nodes[unreached].id.clone()));
        }

        let nodes: Vec<TopicNode> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, e)| TopicNode {
                id: TopicId::new(e.id.as_str()),
                parent: parents[i],
                children: std::mem::take(&mut children[i]),
                level: levels[i],
                kind: NodeKind::User,
            })
            .collect();
        let height = levels.iter().copied().max().unwrap_or(0);
        let pivot = pivot_override.or(file.pivot).unwrap_or(DEFAULT_PIVOT);
        if pivot < 1 || pivot > height {
            return Err(Error::PivotOutOfRange { pivot, height });
        }

        Ok(Taxonomy {
            nodes,
            index,
            root,
            pivot,
            height,
        })
    }

    /// The user nodes as a file document (Other nodes are not serialized).
    pub fn to_file(&self) -> TaxonomyFile {
        TaxonomyFile {
            pivot: Some(self.pivot),
            nodes: self
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::User)
                .map(|n| NodeEntry {
                    id: n.id.to_string(),
                    parent: n.parent.map(|p| self.nodes[p].id.to_string()),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node(&self, idx: usize) -> &TopicNode {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[TopicNode] {
        &self.nodes
    }

    pub fn get(&self, id: &TopicId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &TopicId {
        &self.nodes[idx].id
    }

    pub fn level(&self, idx: usize) -> usize {
        self.nodes[idx].level
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.nodes[idx].children
    }

    pub fn user_children(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[idx]
            .children
            .iter()
            .copied()
            .filter(|&c| self.nodes[c].kind == NodeKind::User)
    }

    pub fn other_child(&self, idx: usize) -> Option<usize> {
        self.nodes[idx]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].kind == NodeKind::Other)
    }

    pub fn is_leaf(&self, idx: usize) -> bool {
        self.nodes[idx].children.is_empty()
    }

    /// Ancestor of `idx` at level `level` (the node itself when levels match).
    pub fn ancestor_at_level(&self, idx: usize, level: usize) -> Option<usize> {
        let mut cur = idx;
        if self.nodes[cur].level < level {
            return None;
        }
        while self.nodes[cur].level > level {
            cur = self.nodes[cur].parent?;
        }
        Some(cur)
    }

    /// Whether `desc` lies in the subtree rooted at `anc`.
    pub fn is_descendant(&self, desc: usize, anc: usize) -> bool {
        self.ancestor_at_level(desc, self.nodes[anc].level) == Some(anc)
    }

    /// All nodes in depth-first preorder following children order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// `C^l`: topics at level `l` in depth-first children order.
    pub fn topics_at_level(&self, level: usize) -> Result<Vec<usize>> {
        if level > self.height {
            return Err(Error::LevelOutOfRange {
                level,
                height: self.height,
            });
        }
        Ok(self
            .preorder()
            .into_iter()
            .filter(|&n| self.nodes[n].level == level)
            .collect())
    }

    /// Insert `<parent>::other` as the last child of `parent`.
    pub fn add_other_child(&mut self, parent: usize) -> Result<usize> {
        let node = &self.nodes[parent];
        if node.kind == NodeKind::Other || node.children.is_empty() {
            return Err(Error::NoChildren(node.id.to_string()));
        }
        if self.other_child(parent).is_some() {
            return Err(Error::AlreadyExtended(node.id.to_string()));
        }
        if node.level + 1 < self.pivot {
            return Err(Error::AboveStopLevel(node.id.to_string()));
        }
        let id = TopicId::other_of(&node.id);
        let level = node.level + 1;
        let idx = self.nodes.len();
        self.index.insert(id.clone(), idx);
        self.nodes.push(TopicNode {
            id,
            parent: Some(parent),
            children: Vec::new(),
            level,
            kind: NodeKind::Other,
        });
        self.nodes[parent].children.push(idx);
        Ok(idx)
    }

    /// Parents that may receive an Other child: user nodes with at least one
    /// child at levels `pivot - 1` and below, deepest first.
    pub fn extension_candidates(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for level in (self.pivot - 1..self.height).rev() {
            for n in self.topics_at_level(level).unwrap_or_default() {
                if self.nodes[n].kind == NodeKind::User && self.user_children(n).next().is_some() {
                    out.push(n);
                }
            }
        }
        out
    }

    /// A copy with an Other child under every eligible parent that lacks one.
    ///
    /// Used when reading labels produced against a fitted model's taxonomy.
    pub fn with_all_others(&self) -> Taxonomy {
        let mut t = self.clone();
        for p in self.extension_candidates() {
            if t.other_child(p).is_none() {
                // eligibility was checked by extension_candidates
                let _ = t.add_other_child(p);
            }
        }
        t
    }
}
