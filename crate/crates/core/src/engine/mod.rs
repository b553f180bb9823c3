//! The unfolding search: initialize, then repeatedly decide base leaves,
//! refute leaves by length reasoning, close leaves by back-links, and unfold
//! the deepest remaining leaf.

mod approx;
mod dot;
mod init;
mod link;
mod model;
mod tree;
mod unfold;

use std::cmp::Reverse;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::arith::ArithError;
use crate::ast::{Alphabet, Model, NormalizedFormula};
use crate::classify::{classify_fragment, Fragment, FragmentTag};
use crate::frontend::{Conjunct, Problem};
use crate::oracle;

pub use approx::{
    length_constraint, oa_refutes, oa_refutes_in, over_approx, over_approx_in, under_approx_check, under_approx_in, OaMode,
    UaResult,
};
pub use dot::{export_forest, export_tree};
pub use init::{init_1sea, len_var, pred_var};
pub use link::link_back;
pub use model::extract_model;
pub use tree::{CloseReason, NodeId, NodeStatus, Rule, Theta, TreeNode, UnfoldingTree};
pub use unfold::{occurrences, unfold, Child};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("internal error: {0}")]
    Internal(String),
    #[error("arithmetic: {0}")]
    Arith(#[from] ArithError),
    #[error("more than {0} disjuncts")]
    TooManyDisjuncts(usize),
    #[error("path of {len} nodes exceeds the bound {bound} for this fragment")]
    PathBound { len: usize, bound: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl Answer {
    pub fn verdict(&self) -> &'static str {
        match self {
            Answer::Sat(_) => "sat",
            Answer::Unsat => "unsat",
            Answer::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Maximum number of unfolding steps over all disjuncts.
    pub budget: usize,
    pub oa: OaMode,
    pub max_disjuncts: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { budget: 10_000, oa: OaMode::Full, max_disjuncts: 256 }
    }
}

/// Answer plus the trees built for each disjunct that was explored.
#[derive(Clone, Debug)]
pub struct Solution {
    pub answer: Answer,
    pub trees: Vec<UnfoldingTree>,
    pub fragments: Vec<Fragment>,
    pub unfoldings: usize,
}

pub fn solve(p: &Problem, cfg: &SolveConfig) -> Result<Solution, EngineError> {
    let sigma = p.alphabet();
    let disjuncts = p.disjuncts(cfg.max_disjuncts).ok_or(EngineError::TooManyDisjuncts(cfg.max_disjuncts))?;
    let mut sol = Solution { answer: Answer::Unsat, trees: Vec::new(), fragments: Vec::new(), unfoldings: 0 };
    let mut unknown: Option<String> = None;
    for c in &disjuncts {
        let mut search = Search::new(c, &sigma, cfg, sol.unfoldings)?;
        let out = search.run();
        sol.unfoldings = search.unfoldings;
        sol.fragments.push(search.fragment.clone());
        sol.trees.push(search.tree);
        match out? {
            Answer::Sat(raw) => {
                let m = complete_model(p, raw);
                if !oracle::eval_problem(p, &m).unwrap_or(false) {
                    return Err(EngineError::Internal("model fails the input formula".into()));
                }
                sol.answer = Answer::Sat(m);
                return Ok(sol);
            }
            Answer::Unsat => {}
            Answer::Unknown(why) => {
                unknown.get_or_insert(why);
            }
        }
    }
    if let Some(why) = unknown {
        sol.answer = Answer::Unknown(why);
    }
    Ok(sol)
}

/// Restrict to declared variables, defaulting to `""` and `0`.
fn complete_model(p: &Problem, raw: Model) -> Model {
    let mut m = Model::default();
    for s in &p.str_vars {
        m.strings.insert(s.clone(), raw.strings.get(s).cloned().unwrap_or_default());
    }
    for i in &p.int_vars {
        m.ints.insert(i.clone(), raw.ints.get(i).copied().unwrap_or(0));
    }
    m
}

/// Maximum number of nodes on a path for formulas in the decidable
/// fragment: `4 · 2^M · N` with `M` equations of maximal size `N`.
pub fn path_bound(f: &NormalizedFormula) -> usize {
    let m = f.equations.len() as u32;
    let n = f.equations.iter().map(crate::ast::equation_size).max().unwrap_or(0);
    2usize.checked_pow(m).and_then(|p| p.checked_mul(4 * n.max(1))).unwrap_or(usize::MAX)
}

struct Search<'a> {
    sigma: &'a Alphabet,
    cfg: &'a SolveConfig,
    tree: UnfoldingTree,
    fragment: Fragment,
    bound: Option<usize>,
    frontier: BTreeSet<(Reverse<usize>, NodeId)>,
    stuck: Vec<String>,
    unfoldings: usize,
}

impl<'a> Search<'a> {
    fn new(c: &Conjunct, sigma: &'a Alphabet, cfg: &'a SolveConfig, unfoldings: usize) -> Result<Self, EngineError> {
        let root = init_1sea(c, sigma)?;
        let fragment = classify_fragment(&root);
        let bound = (fragment.tag == FragmentTag::ZeroSEA).then(|| path_bound(&root));
        Ok(Search {
            sigma,
            cfg,
            tree: UnfoldingTree::new(root),
            fragment,
            bound,
            frontier: BTreeSet::new(),
            stuck: Vec::new(),
            unfoldings,
        })
    }

    fn run(&mut self) -> Result<Answer, EngineError> {
        if let Some(m) = self.process(&[0])? {
            return Ok(Answer::Sat(m));
        }
        while let Some(&(depth, id)) = self.frontier.first() {
            if self.unfoldings >= self.cfg.budget {
                return Ok(Answer::Unknown(format!("unfolding budget of {} exhausted", self.cfg.budget)));
            }
            self.frontier.remove(&(depth, id));
            // nodes store only their own additions to `I` and `Λ`, and the
            // rules never read either
            let mut f = self.tree.node(id).formula.clone();
            f.arith.clear();
            f.subterms.clear();
            let children = unfold(&f)?;
            self.unfoldings += 1;
            if children.is_empty() {
                self.tree.nodes[id].status = NodeStatus::ClosedUnsat(CloseReason::ConstFail);
                continue;
            }
            let mut ids = Vec::new();
            for ch in children {
                let c = self.tree.add_child(id, ch.rule, ch.formula, ch.rename);
                let len = self.tree.node(c).depth + 1;
                if let Some(bound) = self.bound {
                    if len > bound {
                        return Err(EngineError::PathBound { len, bound });
                    }
                }
                ids.push(c);
            }
            if let Some(m) = self.process(&ids)? {
                return Ok(Answer::Sat(m));
            }
        }
        Ok(match self.stuck.first() {
            Some(why) => Answer::Unknown(why.clone()),
            None => Answer::Unsat,
        })
    }

    /// Decide, refute or link freshly created leaves; the rest join the
    /// frontier.
    fn process(&mut self, ids: &[NodeId]) -> Result<Option<Model>, EngineError> {
        let mut undecided: Vec<(NodeId, String)> = Vec::new();
        let mut rest = Vec::new();
        for &id in ids {
            let node = self.tree.node(id);
            let f = &node.formula;
            match under_approx_in(f, &node.core, self.sigma)? {
                UaResult::NotBase => rest.push(id),
                UaResult::Unsat => self.close(id, CloseReason::UnderApprox),
                UaResult::Undecided(why) => undecided.push((id, why)),
                UaResult::Sat(live) => {
                    let m = extract_model(&self.tree.full_formula(id), &live)?;
                    self.tree.nodes[id].status = NodeStatus::SatLeaf(m.clone());
                    return Ok(Some(m));
                }
            }
        }
        for (id, why) in undecided {
            if self.refuted(id) {
                self.close(id, CloseReason::OverApprox);
            } else {
                self.stuck.push(format!("undecided leaf π{id}: {why}"));
            }
        }
        for id in rest {
            if self.refuted(id) {
                self.close(id, CloseReason::OverApprox);
            } else if let Some((target, theta)) = link_back(&self.tree, id) {
                let node = &mut self.tree.nodes[id];
                node.status = NodeStatus::BackLinked { target, theta };
                node.progress = true;
            } else {
                let depth = self.tree.node(id).depth;
                self.frontier.insert((Reverse(depth), id));
            }
        }
        Ok(None)
    }

    fn refuted(&self, id: NodeId) -> bool {
        let node = self.tree.node(id);
        oa_refutes_in(&node.formula, &node.core, self.cfg.oa)
    }

    fn close(&mut self, id: NodeId, why: CloseReason) {
        self.tree.nodes[id].status = NodeStatus::ClosedUnsat(why);
    }
}
