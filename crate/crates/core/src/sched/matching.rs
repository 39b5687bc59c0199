//! Deferred-acceptance stable matching with incomplete preference lists.

use std::collections::VecDeque;

/// `proposer_prefs[p]` and `acceptor_prefs[a]` list acceptable partners,
/// best first; a pair can match only if each lists the other. Returns the
/// proposer-optimal stable matching as `proposer → acceptor`.
pub fn gale_shapley(proposer_prefs: &[Vec<usize>], acceptor_prefs: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n_acc = acceptor_prefs.len();
    let rank: Vec<Vec<usize>> = acceptor_prefs
        .iter()
        .map(|prefs| {
            let mut r = vec![usize::MAX; proposer_prefs.len()];
            for (k, &p) in prefs.iter().enumerate() {
                if p < r.len() && r[p] == usize::MAX {
                    r[p] = k;
                }
            }
            r
        })
        .collect();
    let mut holder: Vec<Option<usize>> = vec![None; n_acc];
    let mut next = vec![0usize; proposer_prefs.len()];
    let mut free: VecDeque<usize> = (0..proposer_prefs.len()).collect();
    while let Some(p) = free.pop_front() {
        while next[p] < proposer_prefs[p].len() {
            let a = proposer_prefs[p][next[p]];
            next[p] += 1;
            if a >= n_acc || rank[a][p] == usize::MAX {
                continue;
            }
            match holder[a] {
                None => {
                    holder[a] = Some(p);
                    break;
                }
                Some(cur) if rank[a][p] < rank[a][cur] => {
                    holder[a] = Some(p);
                    free.push_back(cur);
                    break;
                }
                Some(_) => {}
            }
        }
    }
    let mut out = vec![None; proposer_prefs.len()];
    for (a, h) in holder.iter().enumerate() {
        if let Some(p) = *h {
            out[p] = Some(a);
        }
    }
    out
}

/// Pairs `(p, a)` that would both rather be together than with their
/// current partners. Empty iff the matching is stable.
pub fn blocking_pairs(
    proposer_prefs: &[Vec<usize>],
    acceptor_prefs: &[Vec<usize>],
    m: &[Option<usize>],
) -> Vec<(usize, usize)> {
    let pos = |list: &[usize], x: usize| list.iter().position(|&y| y == x);
    let mut inv = vec![None; acceptor_prefs.len()];
    for (p, a) in m.iter().enumerate() {
        if let Some(a) = *a {
            inv[a] = Some(p);
        }
    }
    let mut out = Vec::new();
    for (p, pl) in proposer_prefs.iter().enumerate() {
        for (k, &a) in pl.iter().enumerate() {
            let Some(ra) = pos(&acceptor_prefs[a], p) else { continue };
            let p_wants = m[p].map_or(true, |cur| pos(pl, cur).is_some_and(|c| k < c));
            let a_wants = inv[a].map_or(true, |cur| pos(&acceptor_prefs[a], cur).is_some_and(|c| ra < c));
            if p_wants && a_wants {
                out.push((p, a));
            }
        }
    }
    out
}
