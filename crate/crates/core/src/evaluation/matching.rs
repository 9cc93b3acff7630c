use serde::Serialize;

/// Outcome of matching estimates to truth positions within a tolerance.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `|estimate - truth|` of every matched pair, in truth order.
    pub matched_errors: Vec<f64>,
}

impl MatchResult {
    pub fn merge(&mut self, other: &MatchResult) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.matched_errors.extend_from_slice(&other.matched_errors);
    }
}

/// One-to-one matching of estimates to truth positions.
///
/// Only pairs closer than `tau` may match. Among all admissible matchings
/// the one with the most pairs is chosen, and among those the one with the
/// smallest total distance. Unmatched estimates are false positives,
/// unmatched truths false negatives.
pub fn match_detections(estimates: &[f64], truth: &[f64], tau: f64) -> MatchResult {
    let mut est: Vec<(f64, usize)> = estimates.iter().copied().zip(0..).collect();
    let mut tru: Vec<(f64, usize)> = truth.iter().copied().zip(0..).collect();
    est.sort_by(|a, b| a.0.total_cmp(&b.0));
    tru.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    // Admissible pairs link positions closer than tau, so after sorting the
    // bipartite graph splits into independent runs; solve each run exactly.
    let (mut i, mut j) = (0, 0);
    while i < est.len() && j < tru.len() {
        if est[i].0 <= tru[j].0 - tau {
            i += 1;
            continue;
        }
        if tru[j].0 <= est[i].0 - tau {
            j += 1;
            continue;
        }
        let (i0, j0) = (i, j);
        let mut reach = est[i].0.max(tru[j].0);
        loop {
            if i < est.len() && est[i].0 - reach < tau {
                reach = reach.max(est[i].0);
                i += 1;
            } else if j < tru.len() && tru[j].0 - reach < tau {
                reach = reach.max(tru[j].0);
                j += 1;
            } else {
                break;
            }
        }
        let e: Vec<f64> = est[i0..i].iter().map(|p| p.0).collect();
        let t: Vec<f64> = tru[j0..j].iter().map(|p| p.0).collect();
        for (a, b) in solve_component(&e, &t, tau) {
            pairs.push((est[i0 + a].1, tru[j0 + b].1));
        }
    }

    pairs.sort_by_key(|&(_, t)| t);
    let matched_errors: Vec<f64> = pairs
        .iter()
        .map(|&(e, t)| (estimates[e] - truth[t]).abs())
        .collect();
    MatchResult {
        tp: pairs.len(),
        fp: estimates.len() - pairs.len(),
        fn_: truth.len() - pairs.len(),
        matched_errors,
    }
}

/// Max-cardinality, min-total-distance matching of one component via a
/// rectangular assignment. Admissible pairs cost `d - big`, all others 0,
/// with `big` large enough that one more pair always outweighs any
/// distance saving.
fn solve_component(est: &[f64], tru: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let transpose = est.len() > tru.len();
    let (rows, cols) = if transpose { (tru, est) } else { (est, tru) };
    let big = tau * (rows.len() + 1) as f64;
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            cols.iter()
                .map(|&c| {
                    let d = (r - c).abs();
                    if d < tau { d - big } else { 0.0 }
                })
                .collect()
        })
        .collect();
    hungarian(&cost)
        .into_iter()
        .enumerate()
        .filter(|&(r, c)| (rows[r] - cols[c]).abs() < tau)
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .collect()
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows <= cols`); returns the column of each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
