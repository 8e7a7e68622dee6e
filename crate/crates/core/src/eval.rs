//! Topic-recovery diagnostics for synthetic experiments.

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Re-indexes a distribution over `terms` onto `vocab`'s ids. Mass on terms
/// the vocabulary never saw is returned separately.
pub fn align_to_vocabulary(terms: &[String], row: &[f64], vocab: &Vocabulary) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; vocab.len()];
    let mut unseen = 0.0;
    for (t, &p) in terms.iter().zip(row) {
        match vocab.id(t) {
            Some(id) => out[id as usize] = p,
            None => unseen += p,
        }
    }
    (out, unseen)
}

/// Minimum-cost perfect matching of a square cost matrix by exhaustive search
/// over permutations. Returns `(total cost, assignment)` where row `i` is
/// matched to column `assignment[i]`.
pub fn best_matching(cost: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let n = cost.len();
    if cost.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("cost matrix must be square".into()));
    }
    if n > 9 {
        return Err(Error::Invalid("exhaustive matching limited to 9 topics".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, cost, &mut best);
    Ok(best)
}

fn permute(perm: &mut Vec<usize>, k: usize, cost: &[Vec<f64>], best: &mut (f64, Vec<usize>)) {
    if k == perm.len() {
        let c: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if c < best.0 {
            *best = (c, perm.clone());
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, cost, best);
        perm.swap(k, i);
    }
}

/// Mean total-variation distance between true and estimated topics under the
/// best one-to-one matching. Unseen true mass counts fully against the match.
pub fn matched_topic_distance(
    truth_terms: &[String],
    truth: &[Vec<f64>],
    estimate: &[Vec<f64>],
    vocab: &Vocabulary,
) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: estimate.len(),
        });
    }
    let aligned: Vec<(Vec<f64>, f64)> = truth
        .iter()
        .map(|r| align_to_vocabulary(truth_terms, r, vocab))
        .collect();
    let cost: Vec<Vec<f64>> = aligned
        .iter()
        .map(|(t, unseen)| {
            estimate
                .iter()
                .map(|e| total_variation(t, e) + 0.5 * unseen)
                .collect()
        })
        .collect();
    let (total, _) = best_matching(&cost)?;
    Ok(total / truth.len() as f64)
}
