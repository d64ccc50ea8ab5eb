//! Lower-bound k-trees: a family that forces a clique with many outer
//! children, with a strategy's rounds grafted onto every candidate clique.

use queuelay_core::graph::Vertex;
use queuelay_core::ktree::{halfclique_family, mary_ktree_capped, mary_vertex_count, ConstructionSequence, KTreeError};
use queuelay_core::solver::{exact_lqn, SolveOptions, DEFAULT_CAP};
use serde::Serialize;

/// One round of a grafted plan: a clique in local ids and a child count.
/// Local ids `0..k'` are the host clique, the next ids its children, then
/// the children of each earlier round in order.
pub type PlanRound = (Vec<usize>, usize);

#[derive(Clone, Debug, Serialize)]
pub struct Assembly {
    pub sequence: ConstructionSequence,
    /// Cliques that may carry the outer children, each grafted.
    pub hosts: usize,
    pub grafts: usize,
    /// The exact solver confirmed local queue number above `ell`.
    pub verified: bool,
}

/// Depth of the m-ary 2-tree host.
const HOST_DEPTH: u32 = 6;

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

/// Builds the host family and grafts `plan` onto every candidate clique and
/// every choice of `first` of its children as the first-round children.
///
/// `k = 2, k' = 2` uses the (s+4)-ary 2-tree of depth 6 with every edge of
/// depth below 6 as a candidate. Otherwise `k' = ceil(k/2)` and the host is
/// a k-clique with `2s` children, every k'-subset of it a candidate; grafted
/// vertices are padded with the rest of the k-clique.
pub fn assemble_lower_bound(
    k: usize,
    ell: u32,
    s: usize,
    first: usize,
    plan: &[PlanRound],
    cap: usize,
) -> Result<Assembly, KTreeError> {
    if k < 2 || s == 0 || first == 0 || first > s {
        return Err(KTreeError::InvalidArguments(format!(
            "need k >= 2 and 1 <= first <= s, got k={k}, s={s}, first={first}"
        )));
    }
    let kprime = if k == 2 { 2 } else { k.div_ceil(2) };
    if ell as usize > kprime {
        return Err(KTreeError::InvalidArguments(format!("l = {ell} exceeds the clique size {kprime}")));
    }
    // hosts: (clique, padding, children)
    let (mut seq, hosts): (ConstructionSequence, Vec<(Vec<Vertex>, Vec<Vertex>, Vec<Vertex>)>) = if k == 2 {
        let base = mary_vertex_count(s + 4, HOST_DEPTH);
        if base > cap as u128 {
            return Err(KTreeError::SizeOverflow { requested: base, cap });
        }
        let (seq, depths) = mary_ktree_capped(s + 4, HOST_DEPTH, cap)?;
        let by_parent = seq.children_by_parent();
        let mut hosts: Vec<_> = depths
            .iter()
            .filter(|&(_, d)| d < HOST_DEPTH)
            .map(|(e, _)| {
                let kids = by_parent.get(&vec![e.lo(), e.hi()]).cloned().unwrap_or_default();
                (vec![e.lo(), e.hi()], Vec::new(), kids)
            })
            .collect();
        hosts.sort();
        (seq, hosts)
    } else {
        let seq = halfclique_family(k, s)?;
        let parent: Vec<Vertex> = (0..k as Vertex).collect();
        let kids: Vec<Vertex> = (k as Vertex + 1..seq.vertex_count() as Vertex).collect();
        let hosts = combinations(k, kprime)
            .into_iter()
            .map(|idx| {
                let c: Vec<Vertex> = idx.iter().map(|&i| parent[i]).collect();
                let pad = parent.iter().copied().filter(|v| !c.contains(v)).collect();
                (c, pad, kids.clone())
            })
            .collect();
        (seq, hosts)
    };
    let per_graft: usize = plan.iter().map(|r| r.1).sum();
    let choices: u128 = hosts.iter().map(|h| binomial(h.2.len(), first)).sum();
    let requested = seq.vertex_count() as u128 + choices.saturating_mul(per_graft as u128);
    if requested > cap as u128 {
        return Err(KTreeError::SizeOverflow { requested, cap });
    }
    let mut grafts = 0;
    for (clique, pad, kids) in &hosts {
        for pick in combinations(kids.len(), first) {
            let mut local: Vec<Vertex> = clique.clone();
            local.extend(pick.iter().map(|&i| kids[i]));
            for (round, (c, m)) in plan.iter().enumerate() {
                let mut parent = Vec::with_capacity(k);
                for &i in c {
                    let v = *local.get(i).ok_or_else(|| {
                        KTreeError::InvalidArguments(format!("round {round}: local id {i} does not exist yet"))
                    })?;
                    parent.push(v);
                }
                parent.extend_from_slice(pad);
                for _ in 0..*m {
                    local.push(seq.push_child(parent.clone()));
                }
            }
            grafts += 1;
        }
    }
    let graph = seq.expand()?;
    let verified = graph.n() <= DEFAULT_CAP
        && exact_lqn(&graph, &SolveOptions::default()).is_ok_and(|r| r.exact && r.value > ell);
    Ok(Assembly {
        sequence: seq,
        hosts: hosts.len(),
        grafts,
        verified,
    })
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}
