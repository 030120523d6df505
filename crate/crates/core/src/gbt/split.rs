use super::{GbtParams, Tree, TreeNode};
use rayon::prelude::*;

/// A split must improve the objective by more than this to be made.
pub const MIN_SPLIT_GAIN: f64 = 1e-10;
/// Relative margin by which a later candidate must beat the incumbent; keeps
/// near-equal gains resolved toward the lowest feature and threshold.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-10;

const NONE: usize = usize::MAX;

/// Second-order gain of splitting (G, H) into left and right parts.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let (g, h) = (gl + gr, hl + hr);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma
}

/// Whether `gain` replaces `best` under the tie convention.
pub fn beats(gain: f64, best: f64) -> bool {
    gain > best + GAIN_TIE_TOLERANCE * best.abs().max(1.0)
}

/// Per feature, row indices with an observed value in ascending value order.
pub(super) fn presort(data: &[&[f64]], n_features: usize) -> Vec<Vec<u32>> {
    (0..n_features)
        .map(|f| {
            let mut idx: Vec<u32> = (0..data.len() as u32)
                .filter(|&r| !data[r as usize][f].is_nan())
                .collect();
            idx.sort_by(|&a, &b| data[a as usize][f].total_cmp(&data[b as usize][f]));
            idx
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
}

#[derive(Clone, Copy)]
struct Stats {
    g: f64,
    h: f64,
}

/// Best split of every frontier node on one feature.
fn scan_feature(
    feature: usize,
    order: &[u32],
    data: &[&[f64]],
    grad: &[f64],
    node_of: &[usize],
    totals: &[Stats],
    params: &GbtParams,
) -> Vec<Option<Candidate>> {
    let k = totals.len();
    let mut observed = vec![Stats { g: 0.0, h: 0.0 }; k];
    for &r in order {
        let n = node_of[r as usize];
        if n != NONE {
            observed[n].g += grad[r as usize];
            observed[n].h += 1.0;
        }
    }
    let mut left = vec![Stats { g: 0.0, h: 0.0 }; k];
    let mut last = vec![f64::NAN; k];
    let mut best: Vec<Option<Candidate>> = vec![None; k];
    let (lambda, gamma, mcw) = (params.lambda, params.gamma, params.min_child_weight);
    for &r in order {
        let n = node_of[r as usize];
        if n == NONE {
            continue;
        }
        let v = data[r as usize][feature];
        let lv = last[n];
        if !lv.is_nan() && v > lv {
            let mut threshold = lv + (v - lv) / 2.0;
            if threshold <= lv {
                threshold = v;
            }
            let (gl, hl) = (left[n].g, left[n].h);
            let (gr, hr) = (observed[n].g - gl, observed[n].h - hl);
            let (gm, hm) = (totals[n].g - observed[n].g, totals[n].h - observed[n].h);
            let right_gain = (hl >= mcw && hr + hm >= mcw)
                .then(|| split_gain(gl, hl, gr + gm, hr + hm, lambda, gamma));
            let left_gain = (hm > 0.0 && hl + hm >= mcw && hr >= mcw)
                .then(|| split_gain(gl + gm, hl + hm, gr, hr, lambda, gamma));
            let choice = match (right_gain, left_gain) {
                (Some(rg), Some(lg)) if beats(lg, rg) => Some((lg, true)),
                (Some(rg), _) => Some((rg, false)),
                (None, Some(lg)) => Some((lg, true)),
                (None, None) => None,
            };
            if let Some((gain, default_left)) = choice {
                let better = match best[n] {
                    None => gain > MIN_SPLIT_GAIN,
                    Some(b) => beats(gain, b.gain),
                };
                if better {
                    best[n] = Some(Candidate {
                        gain,
                        feature,
                        threshold,
                        default_left,
                    });
                }
            }
        }
        left[n].g += grad[r as usize];
        left[n].h += 1.0;
        last[n] = v;
    }
    best
}

fn leaf_value(s: Stats, lambda: f64) -> f64 {
    -s.g / (s.h + lambda)
}

/// Grows one tree level by level with exact greedy search over `features`.
pub(super) fn grow_tree(
    data: &[&[f64]],
    presorted: &[Vec<u32>],
    grad: &[f64],
    in_sample: &[bool],
    features: &[usize],
    params: &GbtParams,
) -> Tree {
    let mut node_of: Vec<usize> = in_sample.iter().map(|&s| if s { 0 } else { NONE }).collect();
    let root = in_sample
        .iter()
        .zip(grad)
        .filter(|(s, _)| **s)
        .fold(Stats { g: 0.0, h: 0.0 }, |a, (_, &g)| Stats {
            g: a.g + g,
            h: a.h + 1.0,
        });
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    // frontier[k] = (arena index, stats) of the k-th open node on this level
    let mut frontier = vec![(0usize, root)];

    for _ in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let totals: Vec<Stats> = frontier.iter().map(|f| f.1).collect();
        let per_feature: Vec<Vec<Option<Candidate>>> = features
            .par_iter()
            .map(|&f| scan_feature(f, &presorted[f], data, grad, &node_of, &totals, params))
            .collect();
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        for cands in &per_feature {
            for (b, c) in best.iter_mut().zip(cands) {
                if let Some(c) = c {
                    if b.is_none_or(|b| beats(c.gain, b.gain)) {
                        *b = Some(*c);
                    }
                }
            }
        }

        // children[k] = Some((left frontier slot, right frontier slot))
        let mut next = Vec::new();
        let mut children = vec![None; frontier.len()];
        for (k, (arena, stats)) in frontier.iter().enumerate() {
            match best[k] {
                None => nodes[*arena] = TreeNode::Leaf {
                    value: leaf_value(*stats, params.lambda),
                },
                Some(c) => {
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes[*arena] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        default_left: c.default_left,
                        left: l,
                        right: r,
                    };
                    children[k] = Some((next.len(), next.len() + 1));
                    next.push((l, Stats { g: 0.0, h: 0.0 }));
                    next.push((r, Stats { g: 0.0, h: 0.0 }));
                }
            }
        }
        for (row, n) in node_of.iter_mut().enumerate() {
            if *n == NONE {
                continue;
            }
            match (children[*n], best[*n]) {
                (Some((l, r)), Some(c)) => {
                    let x = data[row][c.feature];
                    let go_left = if x.is_nan() { c.default_left } else { x < c.threshold };
                    let slot = if go_left { l } else { r };
                    next[slot].1.g += grad[row];
                    next[slot].1.h += 1.0;
                    *n = slot;
                }
                _ => *n = NONE,
            }
        }
        frontier = next;
    }
    for (arena, stats) in frontier {
        nodes[arena] = TreeNode::Leaf {
            value: leaf_value(stats, params.lambda),
        };
    }
    Tree { nodes }
}
