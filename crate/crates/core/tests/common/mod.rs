//! Independent oracles shared by the integration tests. Nothing here calls
//! into the tree builder; only the model's `step` is reused.
#![allow(dead_code)]

use olt::mdp::{ActionId, GenerativeModel};
use olt::tree::{LookaheadTree, Scorer};

/// Best first action of an exhaustive depth-`depth` search over full action
/// sequences, ties to the lexicographically smallest sequence.
pub fn brute_force_lookahead<M: GenerativeModel>(model: &M, state: &[f64], depth: usize) -> ActionId {
    let actions = model.action_count();
    let gamma = model.discount();
    let total = actions.pow(depth as u32);
    let mut best: Option<(f64, usize)> = None;
    for code in 0..total {
        // most significant digit = first action, so `code` order is lexicographic
        let mut digits = vec![0; depth];
        let mut rest = code;
        for d in (0..depth).rev() {
            digits[d] = rest % actions;
            rest /= actions;
        }
        let mut s = state.to_vec();
        let mut ret = 0.0;
        let mut weight = 1.0;
        for &a in &digits {
            let (next, r) = model.step(&s, ActionId(a)).unwrap();
            ret += weight * r;
            weight *= gamma;
            s = next.0;
        }
        if best.is_none_or(|(b, _)| ret > b) {
            best = Some((ret, digits[0]));
        }
    }
    ActionId(best.unwrap().1)
}

struct OpenEntry {
    path: Vec<usize>,
    state: Vec<f64>,
    reward: f64,
    ret: f64,
    weight: f64,
    score: f64,
    seq: usize,
}

fn oracle_score<M: GenerativeModel>(model: &M, scorer: &Scorer, e: &OpenEntry) -> f64 {
    match scorer {
        Scorer::Linear(theta) => {
            let mut f = vec![1.0, e.path.len() as f64, e.reward, e.ret];
            for (s, n) in e.state.iter().zip(model.state_normalizer()) {
                f.push(s / n);
            }
            let mut acc = 0.0;
            for (w, x) in theta.weights().iter().zip(&f) {
                acc += w * x;
            }
            acc
        }
        Scorer::Optimistic => e.ret + e.weight * model.reward_upper_bound() / (1.0 - model.discount()),
    }
}

/// Re-runs best-first selection with a linear scan over a plain open list and
/// checks the tree's expansion trace step by step. Returns a description of the
/// first divergence.
pub fn replay_best_first<M: GenerativeModel>(
    model: &M,
    root: &[f64],
    scorer: &Scorer,
    budget: usize,
    tree: &LookaheadTree,
) -> Result<(), String> {
    let gamma = model.discount();
    let mut seq = 0;
    let mut root_entry = OpenEntry { path: vec![], state: root.to_vec(), reward: 0.0, ret: 0.0, weight: 1.0, score: 0.0, seq };
    root_entry.score = oracle_score(model, scorer, &root_entry);
    seq += 1;
    let mut open = vec![root_entry];
    let trace = tree.expansion_trace();
    if trace.len() != budget {
        return Err(format!("trace has {} expansions, budget {budget}", trace.len()));
    }
    for record in &trace {
        let mut pick = 0;
        for i in 1..open.len() {
            let (a, b) = (&open[i], &open[pick]);
            if a.score > b.score || (a.score == b.score && a.seq < b.seq) {
                pick = i;
            }
        }
        let chosen = open.swap_remove(pick);
        let path: Vec<usize> = record.path.iter().map(|a| a.index()).collect();
        if path != chosen.path {
            return Err(format!("expansion {}: tree took {:?}, oracle {:?}", record.sequence, path, chosen.path));
        }
        if record.score != chosen.score + 0.0 {
            return Err(format!("expansion {}: score {} vs oracle {}", record.sequence, record.score, chosen.score));
        }
        if open.iter().any(|o| o.score > record.score) {
            return Err(format!("expansion {}: a better open leaf existed", record.sequence));
        }
        for a in 0..model.action_count() {
            let (next, r) = model.step(&chosen.state, ActionId(a)).unwrap();
            let mut path = chosen.path.clone();
            path.push(a);
            let mut child = OpenEntry {
                path,
                state: next.0,
                reward: r,
                ret: chosen.ret + chosen.weight * r,
                weight: chosen.weight * gamma,
                score: 0.0,
                seq,
            };
            seq += 1;
            child.score = oracle_score(model, scorer, &child);
            open.push(child);
        }
    }
    Ok(())
}

/// Checks node count, depth and the path-return recursion on every node.
pub fn check_tree_structure<M: GenerativeModel>(model: &M, tree: &LookaheadTree, budget: usize) -> Result<(), String> {
    let actions = model.action_count();
    if tree.expansion_count() != budget {
        return Err(format!("{} expansions, budget {budget}", tree.expansion_count()));
    }
    if tree.node_count() != 1 + budget * actions {
        return Err(format!("{} nodes, expected {}", tree.node_count(), 1 + budget * actions));
    }
    if tree.simulator_calls() != budget * actions {
        return Err(format!("{} simulator calls", tree.simulator_calls()));
    }
    let root = tree.root();
    if root.depth != 0 || root.path_return != 0.0 {
        return Err("root must have depth 0 and return 0".into());
    }
    let gamma = model.discount();
    for node in tree.nodes() {
        if !node.children.is_empty() && node.children.len() != actions {
            return Err(format!("expanded node has {} children", node.children.len()));
        }
        if let Some(pid) = node.parent {
            let parent = tree.node(pid);
            if node.depth != parent.depth + 1 {
                return Err("depth does not increase by one".into());
            }
            let lhs = node.path_return - parent.path_return;
            let rhs = gamma.powi(parent.depth as i32) * node.reward;
            let scale = rhs.abs().max(node.path_return.abs()).max(parent.path_return.abs());
            if (lhs - rhs).abs() > 1e-12 * scale {
                return Err(format!("path-return recursion off: {lhs} vs {rhs}"));
            }
        }
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// GP posterior (mean, variance) with standardized targets via dense solves.
pub fn dense_gp_posterior(points: &[Vec<f64>], values: &[f64], signal: f64, length: f64, noise: f64, q: &[f64]) -> (f64, f64) {
    let k = |a: &[f64], b: &[f64]| {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        signal * signal * (-sq / (2.0 * length * length)).exp()
    };
    let n = points.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let scale = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| k(&points[i], &points[j]) + if i == j { noise * noise } else { 0.0 }).collect())
        .collect();
    let cross: Vec<f64> = points.iter().map(|p| k(p, q)).collect();
    let alpha = dense_solve(gram.clone(), z);
    let beta = dense_solve(gram, cross.clone());
    let mu: f64 = cross.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = signal * signal - cross.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
    (mean + scale * mu, scale * scale * var)
}
