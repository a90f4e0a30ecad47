//! Budgeted best-first look-ahead trees.
//!
//! [`build_tree`] grows a tree from a root state by repeatedly popping the open
//! leaf with the highest score and simulating every action from it, until the
//! expansion budget is spent. [`select_action`] then returns the first action
//! on the path to the open leaf with the best discounted path return.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, GenerativeModel, StateVector};

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub state: StateVector,
    /// `None` only at the root.
    pub incoming_action: Option<ActionId>,
    pub parent: Option<NodeId>,
    pub reward: f64,
    pub depth: usize,
    /// Discounted return accumulated from the root.
    pub path_return: f64,
    /// `γ^depth`, carried multiplicatively down the tree.
    pub discount_power: f64,
    pub children: Vec<NodeId>,
    pub score: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Weight vector of the linear node scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoringParameters(Vec<f64>);

impl ScoringParameters {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::contract(format!("scoring weight {bad} is not finite")));
        }
        Ok(ScoringParameters(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ScoringParameters::new(self.0.iter().map(|w| w * factor).collect())
    }

    /// Breadth-first preset: score = -depth.
    pub fn uniform(feature_dimension: usize) -> Self {
        let mut w = vec![0.0; feature_dimension];
        w[1] = -1.0;
        ScoringParameters(w)
    }

    /// Best-return-first preset: score = path return.
    pub fn greedy(feature_dimension: usize) -> Self {
        let mut w = vec![0.0; feature_dimension];
        w[3] = 1.0;
        ScoringParameters(w)
    }
}

/// Built-in node scorers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Uniform,
    Greedy,
    Optimistic,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Uniform, BaselineKind::Greedy, BaselineKind::Optimistic];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Uniform => "uniform",
            BaselineKind::Greedy => "greedy",
            BaselineKind::Optimistic => "optimistic",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(BaselineKind::Uniform),
            "greedy" => Ok(BaselineKind::Greedy),
            "optimistic" => Ok(BaselineKind::Optimistic),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected uniform, greedy or optimistic)"
            ))),
        }
    }
}

/// Decides which open leaf is expanded next.
#[derive(Clone, Debug, PartialEq)]
pub enum Scorer {
    /// `θᵀ f(n)` over [`features`].
    Linear(ScoringParameters),
    /// `R(n) + γ^d(n) · r_max / (1 - γ)`, an upper bound on any continuation.
    Optimistic,
}

impl Scorer {
    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        Ok(Scorer::Linear(ScoringParameters::new(weights)?))
    }

    fn check<M: GenerativeModel + ?Sized>(&self, model: &M) -> Result<()> {
        match self {
            Scorer::Linear(theta) if theta.dimension() != model.feature_dimension() => {
                Err(Error::contract(format!(
                    "scoring parameters have dimension {}, {} features expected for {}",
                    theta.dimension(),
                    model.feature_dimension(),
                    model.name()
                )))
            }
            _ => Ok(()),
        }
    }

    fn evaluate<M: GenerativeModel + ?Sized>(&self, model: &M, node: &TreeNode, buf: &mut Vec<f64>) -> Result<f64> {
        let value = match self {
            Scorer::Linear(theta) => {
                write_features(model, node, buf);
                score(theta, buf)?
            }
            Scorer::Optimistic => optimistic_bound(model, node),
        };
        if !value.is_finite() {
            return Err(Error::contract(format!("node score {value} is not finite")));
        }
        // folds -0.0 into +0.0 so total ordering agrees with numeric equality
        Ok(value + 0.0)
    }
}

/// Scorer for a baseline: uniform and greedy are linear presets, optimistic is not.
pub fn baseline_scorer<M: GenerativeModel + ?Sized>(kind: BaselineKind, model: &M) -> Scorer {
    let dim = model.feature_dimension();
    match kind {
        BaselineKind::Uniform => Scorer::Linear(ScoringParameters::uniform(dim)),
        BaselineKind::Greedy => Scorer::Linear(ScoringParameters::greedy(dim)),
        BaselineKind::Optimistic => Scorer::Optimistic,
    }
}

fn optimistic_bound<M: GenerativeModel + ?Sized>(model: &M, node: &TreeNode) -> f64 {
    let gamma = model.discount();
    node.path_return + node.discount_power * model.reward_upper_bound() / (1.0 - gamma)
}

fn write_features<M: GenerativeModel + ?Sized>(model: &M, node: &TreeNode, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(&[1.0, node.depth as f64, node.reward, node.path_return]);
    buf.extend(node.state.iter().zip(model.state_normalizer()).map(|(s, scale)| s / scale));
}

/// Node features `[1, depth, reward, path return, normalized state...]`.
pub fn features<M: GenerativeModel + ?Sized>(model: &M, node: &TreeNode) -> Vec<f64> {
    let mut buf = Vec::with_capacity(model.feature_dimension());
    write_features(model, node, &mut buf);
    buf
}

/// Linear score `θᵀ f`.
pub fn score(theta: &ScoringParameters, features: &[f64]) -> Result<f64> {
    if theta.dimension() != features.len() {
        return Err(Error::contract(format!(
            "score: {} weights for {} features",
            theta.dimension(),
            features.len()
        )));
    }
    Ok(theta.0.iter().zip(features).map(|(w, f)| w * f).sum())
}

#[derive(Clone, Copy, Debug)]
struct OpenLeaf {
    score: f64,
    sequence: u64,
    node: NodeId,
}

impl PartialEq for OpenLeaf {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenLeaf {}

impl PartialOrd for OpenLeaf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenLeaf {
    // max-heap: higher score first, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.sequence.cmp(&self.sequence))
    }
}

/// One entry of the expansion trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub sequence: usize,
    pub depth: usize,
    pub score: f64,
    pub path: Vec<ActionId>,
}

/// Search tree grown from a single decision state.
#[derive(Clone, Debug)]
pub struct LookaheadTree {
    nodes: Vec<TreeNode>,
    open: BinaryHeap<OpenLeaf>,
    next_sequence: u64,
    expansions: Vec<NodeId>,
    budget: usize,
    simulator_calls: usize,
}

impl LookaheadTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn expansion_count(&self) -> usize {
        self.expansions.len()
    }

    pub fn simulator_calls(&self) -> usize {
        self.simulator_calls
    }

    /// Expanded node ids in expansion order.
    pub fn expansion_order(&self) -> &[NodeId] {
        &self.expansions
    }

    /// Ids of the unexpanded leaves.
    pub fn open_leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.open.iter().map(|leaf| leaf.node)
    }

    /// Action sequence from the root to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<ActionId> {
        let mut path = Vec::with_capacity(self.nodes[id].depth);
        let mut cursor = id;
        while let Some(parent) = self.nodes[cursor].parent {
            path.push(self.nodes[cursor].incoming_action.expect("non-root node has an action"));
            cursor = parent;
        }
        path.reverse();
        path
    }

    pub fn expansion_trace(&self) -> Vec<ExpansionRecord> {
        self.expansions
            .iter()
            .enumerate()
            .map(|(sequence, &id)| ExpansionRecord {
                sequence,
                depth: self.nodes[id].depth,
                score: self.nodes[id].score,
                path: self.path_to(id),
            })
            .collect()
    }

    /// Writes one JSON object per expansion.
    pub fn write_trace_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for record in self.expansion_trace() {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn push_open(&mut self, node: NodeId) {
        let leaf = OpenLeaf { score: self.nodes[node].score, sequence: self.next_sequence, node };
        self.next_sequence += 1;
        self.open.push(leaf);
    }

    /// Open leaf holding the best path return, first in path order on ties.
    pub fn best_leaf(&self) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        // preorder with children in action order visits paths lexicographically
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_leaf() {
                if id != 0 && best.is_none_or(|(_, r)| node.path_return > r) {
                    best = Some((id, node.path_return));
                }
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        best.map(|(id, _)| id)
    }
}

/// Grows a tree from `root_state` with exactly `budget` expansions.
pub fn build_tree<M: GenerativeModel + ?Sized>(
    model: &M,
    root_state: &[f64],
    scorer: &Scorer,
    budget: usize,
) -> Result<LookaheadTree> {
    if budget == 0 {
        return Err(Error::contract("build_tree: budget must be at least 1"));
    }
    scorer.check(model)?;
    if root_state.len() != model.state_dimension() {
        return Err(Error::contract(format!(
            "build_tree: root state has dimension {}, expected {}",
            root_state.len(),
            model.state_dimension()
        )));
    }
    let actions = model.action_count();
    let gamma = model.discount();
    let mut buf = Vec::with_capacity(model.feature_dimension());

    let mut root = TreeNode {
        state: StateVector(root_state.to_vec()),
        incoming_action: None,
        parent: None,
        reward: 0.0,
        depth: 0,
        path_return: 0.0,
        discount_power: 1.0,
        children: Vec::new(),
        score: 0.0,
    };
    root.score = scorer.evaluate(model, &root, &mut buf)?;

    let mut tree = LookaheadTree {
        nodes: Vec::with_capacity(1 + budget * actions),
        open: BinaryHeap::with_capacity(1 + budget * (actions - 1).max(1)),
        next_sequence: 0,
        expansions: Vec::with_capacity(budget),
        budget,
        simulator_calls: 0,
    };
    tree.nodes.push(root);
    tree.push_open(0);

    while tree.expansions.len() < budget {
        let Some(leaf) = tree.open.pop() else { break };
        let parent_id = leaf.node;
        tree.expansions.push(parent_id);
        let mut children = Vec::with_capacity(actions);
        for a in 0..actions {
            let parent = &tree.nodes[parent_id];
            let (state, reward) = model.step(&parent.state, ActionId(a))?;
            tree.simulator_calls += 1;
            let mut child = TreeNode {
                state,
                incoming_action: Some(ActionId(a)),
                parent: Some(parent_id),
                reward,
                depth: parent.depth + 1,
                path_return: parent.path_return + parent.discount_power * reward,
                discount_power: parent.discount_power * gamma,
                children: Vec::new(),
                score: 0.0,
            };
            child.score = scorer.evaluate(model, &child, &mut buf)?;
            let id = tree.nodes.len();
            tree.nodes.push(child);
            children.push(id);
        }
        for &id in &children {
            tree.push_open(id);
        }
        tree.nodes[parent_id].children = children;
    }
    Ok(tree)
}

/// First action toward [`LookaheadTree::best_leaf`].
pub fn select_action(tree: &LookaheadTree) -> Result<ActionId> {
    let leaf = tree
        .best_leaf()
        .ok_or_else(|| Error::contract("select_action: tree has no expanded root"))?;
    let mut cursor = leaf;
    while let Some(parent) = tree.nodes[cursor].parent {
        if parent == 0 {
            break;
        }
        cursor = parent;
    }
    Ok(tree.nodes[cursor].incoming_action.expect("depth-1 node has an action"))
}

/// The closed-loop look-ahead tree policy.
pub fn act<M: GenerativeModel + ?Sized>(model: &M, state: &[f64], scorer: &Scorer, budget: usize) -> Result<ActionId> {
    select_action(&build_tree(model, state, scorer, budget)?)
}
