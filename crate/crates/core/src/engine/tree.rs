use std::collections::{BTreeMap, BTreeSet};
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::arith::project_atoms;
use crate::ast::{ArithAtom, IntVar, Model, NormalizedFormula, StrVar, SubtermConstraint};

pub type NodeId = usize;

/// The unfolding step that produced a node from its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    ConstSucc,
    SmallBase,
    SmallInductive,
    /// One of two distinct predicate heads is empty.
    BigEmpty,
    BigIdentify,
    /// Right-hand head is a proper prefix of the left-hand head.
    BigSplitLeft,
    /// Left-hand head is a proper prefix of the right-hand head.
    BigSplitRight,
    ForceEmpty,
    DropEquation,
}

impl Rule {
    /// Steps that strictly shorten a predicate instance. Each of them also
    /// strictly lowers the summed length of all predicates in the equations.
    pub fn makes_progress(self) -> bool {
        matches!(self, Rule::SmallInductive | Rule::BigSplitLeft | Rule::BigSplitRight)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::ConstSucc => "CONST-SUCC",
            Rule::SmallBase => "SMALL-base",
            Rule::SmallInductive => "SMALL-step",
            Rule::BigEmpty => "BIG-empty",
            Rule::BigIdentify => "BIG-identify",
            Rule::BigSplitLeft => "BIG-split-left",
            Rule::BigSplitRight => "BIG-split-right",
            Rule::ForceEmpty => "FORCE-EMPTY",
            Rule::DropEquation => "DROP",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloseReason {
    /// Leading characters clash, or an empty side faces a non-empty word.
    ConstFail,
    /// Base leaf decided unsatisfiable.
    UnderApprox,
    /// Length abstraction unsatisfiable.
    OverApprox,
}

impl fmt::Display for CloseReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloseReason::ConstFail => "CONST-FAIL",
            CloseReason::UnderApprox => "UA",
            CloseReason::OverApprox => "OA",
        })
    }
}

/// Renaming that makes a leaf isomorphic to one of its ancestors. Maps go
/// from leaf symbols to ancestor symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theta {
    pub chars: BTreeMap<char, char>,
    pub strings: BTreeMap<StrVar, StrVar>,
    pub ints: BTreeMap<IntVar, IntVar>,
    /// Leaf integer variables renamed apart because their names are taken
    /// by the ancestor.
    pub primed: BTreeMap<IntVar, IntVar>,
}

impl fmt::Display for Theta {
    /// Written as a list of `new/old` replacements on the leaf.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (old, new) in &self.primed {
            parts.push(format!("{new}/{old}"));
        }
        for (old, new) in &self.ints {
            if old != new {
                parts.push(format!("{new}/{old}"));
            }
        }
        for (old, new) in &self.strings {
            if old != new {
                parts.push(format!("{new}/{old}"));
            }
        }
        for (old, new) in &self.chars {
            if old != new {
                parts.push(format!("{new}/{old}"));
            }
        }
        write!(f, "[{}]", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeStatus {
    /// Unexpanded leaf, or interior node once it has children.
    Open,
    ClosedUnsat(CloseReason),
    BackLinked { target: NodeId, theta: Theta },
    SatLeaf(Model),
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: NodeId,
    /// `Es`, `Υ` and the bookkeeping fields in full. Below the root, `I` and
    /// `Λ` hold only what the producing rule added; see
    /// [`UnfoldingTree::full_formula`].
    pub formula: NormalizedFormula,
    /// Renaming the producing rule applied to the existing `Λ`.
    pub rename: Option<(StrVar, StrVar)>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub status: NodeStatus,
    pub depth: usize,
    /// Rule that produced this node from its parent.
    pub rule: Option<Rule>,
    /// For back-linked nodes: a shortening step lies between target and node.
    pub progress: bool,
    /// `I` with every variable that is neither a live length nor a problem
    /// integer projected away. Equisatisfiable with `I` for those variables.
    pub core: Vec<ArithAtom>,
    /// Hash of the char/predicate pattern of the equations, for cheap
    /// rejection of link candidates.
    pub shape: u64,
}

/// Project `atoms` onto the lengths of the live predicates of `f` and the
/// problem's own integer variables.
fn compact(atoms: &[ArithAtom], f: &NormalizedFormula) -> Vec<ArithAtom> {
    let mut keep: BTreeSet<IntVar> = f.len_of.values().cloned().collect();
    for t in f.terms() {
        for a in t.atoms() {
            if let crate::ast::Atom::Str(_, n) = a {
                keep.insert(n.clone());
            }
        }
    }
    keep.extend(f.int_vars().into_iter().filter(|v| !v.name().contains('!')));
    project_atoms(atoms, &keep)
}

pub fn shape_hash(f: &NormalizedFormula) -> u64 {
    let mut h = DefaultHasher::new();
    (f.equations.len(), f.memberships.len()).hash(&mut h);
    for e in &f.equations {
        for t in [&e.lhs, &e.rhs] {
            t.atoms().len().hash(&mut h);
            for a in t.atoms() {
                matches!(a, crate::ast::Atom::Char(_)).hash(&mut h);
            }
        }
    }
    h.finish()
}

fn rename_all(c: &SubtermConstraint, sigma: &BTreeMap<StrVar, StrVar>) -> SubtermConstraint {
    let r = |v: &StrVar| sigma.get(v).unwrap_or(v).clone();
    match c {
        SubtermConstraint::EpsBind(v) => SubtermConstraint::EpsBind(r(v)),
        SubtermConstraint::CharPrefix { outer, head, tail } => {
            SubtermConstraint::CharPrefix { outer: r(outer), head: *head, tail: r(tail) }
        }
        SubtermConstraint::Split { outer, prefix, suffix } => {
            SubtermConstraint::Split { outer: r(outer), prefix: r(prefix), suffix: r(suffix) }
        }
        SubtermConstraint::Alias { lhs, rhs } => SubtermConstraint::Alias { lhs: r(lhs), rhs: r(rhs) },
    }
}

impl TreeNode {
    pub fn is_open_leaf(&self) -> bool {
        self.status == NodeStatus::Open && self.children.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct UnfoldingTree {
    pub nodes: Vec<TreeNode>,
}

impl UnfoldingTree {
    pub fn new(root: NormalizedFormula) -> Self {
        let core = compact(&root.arith, &root);
        let shape = shape_hash(&root);
        UnfoldingTree {
            nodes: vec![TreeNode {
                id: 0,
                formula: root,
                rename: None,
                parent: None,
                children: Vec::new(),
                status: NodeStatus::Open,
                depth: 0,
                rule: None,
                progress: false,
                core,
                shape,
            }],
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    /// `formula` carries only the `I` and `Λ` added by `rule`.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        rule: Rule,
        formula: NormalizedFormula,
        rename: Option<(StrVar, StrVar)>,
    ) -> NodeId {
        let id = self.nodes.len();
        let p = &self.nodes[parent];
        let depth = p.depth + 1;
        let mut atoms = p.core.clone();
        atoms.extend_from_slice(&formula.arith);
        let core = compact(&atoms, &formula);
        let shape = shape_hash(&formula);
        self.nodes.push(TreeNode {
            id,
            formula,
            rename,
            parent: Some(parent),
            children: Vec::new(),
            status: NodeStatus::Open,
            depth,
            rule: Some(rule),
            progress: false,
            core,
            shape,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Root first.
    fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = self.ancestors(id);
        out.reverse();
        out.push(id);
        out
    }

    /// The complete `I` of a node.
    pub fn full_arith(&self, id: NodeId) -> Vec<ArithAtom> {
        self.path(id).into_iter().flat_map(|k| self.nodes[k].formula.arith.iter().cloned()).collect()
    }

    /// Integer variables of the complete formula of a node.
    pub fn int_vars(&self, id: NodeId) -> BTreeSet<IntVar> {
        let mut out = self.nodes[id].formula.int_vars();
        for k in self.ancestors(id) {
            for a in &self.nodes[k].formula.arith {
                a.int_vars(&mut out);
            }
        }
        out
    }

    /// The complete `Λ` of a node: each rule's additions, renamed by every
    /// later renaming on the path.
    pub fn full_subterms(&self, id: NodeId) -> Vec<SubtermConstraint> {
        let mut sigma: BTreeMap<StrVar, StrVar> = BTreeMap::new();
        let mut blocks = Vec::new();
        let mut cur = Some(id);
        while let Some(k) = cur {
            let node = &self.nodes[k];
            blocks.push(node.formula.subterms.iter().map(|c| rename_all(c, &sigma)).collect::<Vec<_>>());
            if let Some((from, to)) = &node.rename {
                let image = sigma.get(to).cloned().unwrap_or_else(|| to.clone());
                sigma.insert(from.clone(), image);
            }
            cur = node.parent;
        }
        blocks.into_iter().rev().flatten().collect()
    }

    pub fn full_formula(&self, id: NodeId) -> NormalizedFormula {
        let mut f = self.nodes[id].formula.clone();
        f.arith = self.full_arith(id);
        f.subterms = self.full_subterms(id);
        f
    }

    /// Proper ancestors, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    pub fn back_links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().filter_map(|n| match &n.status {
            NodeStatus::BackLinked { target, .. } => Some((n.id, *target)),
            _ => None,
        })
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn longest_path(&self) -> usize {
        self.nodes.iter().map(|n| n.depth + 1).max().unwrap_or(0)
    }
}
