//! Progressive edge-growth construction of a parity-check matrix with the
//! node degrees implied by an edge-perspective ensemble.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParityCheckMatrix;
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};

const ATTEMPTS: u64 = 16;

/// Degree of every bit and every check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    pub variable: Vec<u32>,
    pub check: Vec<u32>,
}

/// Rounds `total · fractions` to integers summing to `total`, largest
/// remainders first.
fn apportion(fractions: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    let missing = total - counts.iter().sum::<usize>();
    for &k in order.iter().cycle().take(missing) {
        counts[k] += 1;
    }
    counts
}

/// Per-node degrees for a length-`n` code: node-perspective fractions
/// `(λ_i/i)/Σ(λ_j/j)` rounded, then check degrees nudged by one until both
/// sides carry the same number of edges.
pub fn degree_sequence(dd: &DegreeDistribution, n: usize) -> Result<DegreeSequence> {
    let dd = dd.normalized();
    let node_fractions = |side: &[(u32, f64)]| {
        let inv: f64 = side.iter().map(|&(d, c)| c / d as f64).sum();
        side.iter().map(|&(d, c)| c / d as f64 / inv).collect::<Vec<_>>()
    };
    let vcounts = apportion(&node_fractions(dd.lambda()), n);
    let mut variable = Vec::with_capacity(n);
    for (&(d, _), &c) in dd.lambda().iter().zip(&vcounts) {
        variable.extend(std::iter::repeat_n(d, c));
    }
    let edges: usize = variable.iter().map(|&d| d as usize).sum();
    let m = ((n as f64) * (1.0 - dd.rate())).round() as usize;
    if m == 0 || m >= n {
        return Err(Error::Construction(format!("{m} checks for {n} bits")));
    }
    let ccounts = apportion(&node_fractions(dd.rho()), m);
    let mut check = Vec::with_capacity(m);
    for (&(d, _), &c) in dd.rho().iter().zip(&ccounts) {
        check.extend(std::iter::repeat_n(d, c));
    }
    let mut diff = edges as i64 - check.iter().map(|&d| d as i64).sum::<i64>();
    // smallest degrees grow first, largest shrink first
    check.sort_unstable();
    let mut k = 0;
    while diff != 0 {
        if diff > 0 {
            check[k % m] += 1;
            diff -= 1;
        } else {
            let idx = m - 1 - (k % m);
            if check[idx] <= 2 {
                return Err(Error::Construction("check degrees would drop below 2".into()));
            }
            check[idx] -= 1;
            diff += 1;
        }
        k += 1;
    }
    if variable.iter().any(|&d| d as usize > m) || check.iter().any(|&d| d as usize > n) {
        return Err(Error::Construction("a node degree exceeds the opposite side".into()));
    }
    Ok(DegreeSequence { variable, check })
}

/// PEG construction of a length-`n` code from `dd`, deterministic in `seed`.
///
/// Bits are placed in order of increasing degree. Each new edge of a bit
/// goes to a check outside the bit's current tree neighbourhood when one
/// exists, else to one at the greatest depth; ties go to the least filled
/// check and are then broken at random.
pub fn construct_code(dd: &DegreeDistribution, n: usize, seed: u64) -> Result<ParityCheckMatrix> {
    let seq = degree_sequence(dd, n)?;
    let mut last = None;
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        match peg(&seq, &mut rng) {
            Ok(rows) => {
                let h = ParityCheckMatrix::from_rows(n, rows)?;
                let cycles = h.four_cycles();
                if cycles > 0 {
                    log::info!("constructed code keeps {cycles} four-cycles");
                }
                return Ok(h);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn peg<R: Rng>(seq: &DegreeSequence, rng: &mut R) -> Result<Vec<Vec<u32>>> {
    let n = seq.variable.len();
    let m = seq.check.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.sort_by_key(|&v| seq.variable[v]);
    let mut var_adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut chk_adj: Vec<Vec<u32>> = vec![Vec::new(); m];
    // BFS bookkeeping with generation stamps
    let mut chk_seen = vec![0u32; m];
    let mut var_seen = vec![0u32; n];
    let mut stamp = 0u32;
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    let mut candidates = Vec::new();
    for &v in &order {
        for e in 0..seq.variable[v] as usize {
            let free = |c: usize| chk_adj[c].len() < seq.check[c] as usize;
            candidates.clear();
            if e == 0 {
                candidates.extend((0..m).filter(|&c| free(c)));
            } else {
                stamp += 1;
                var_seen[v] = stamp;
                frontier.clear();
                frontier.push(v);
                loop {
                    // expand one level: bits -> checks -> bits
                    let mut layer = Vec::new();
                    for &u in &frontier {
                        for &c in &var_adj[u] {
                            if chk_seen[c as usize] != stamp {
                                chk_seen[c as usize] = stamp;
                                layer.push(c as usize);
                            }
                        }
                    }
                    let outside: Vec<usize> = (0..m).filter(|&c| chk_seen[c] != stamp && free(c)).collect();
                    if layer.is_empty() {
                        candidates = outside;
                        break;
                    }
                    if outside.is_empty() {
                        // every free check is reached; take the deepest ones
                        candidates = layer
                            .iter()
                            .copied()
                            .filter(|&c| free(c) && !var_adj[v].contains(&(c as u32)))
                            .collect();
                        break;
                    }
                    next.clear();
                    for &c in &layer {
                        for &u in &chk_adj[c] {
                            if var_seen[u as usize] != stamp {
                                var_seen[u as usize] = stamp;
                                next.push(u as usize);
                            }
                        }
                    }
                    if next.is_empty() {
                        candidates = outside;
                        break;
                    }
                    std::mem::swap(&mut frontier, &mut next);
                }
                if candidates.is_empty() {
                    // every free check is already adjacent at shallow depth
                    candidates.extend((0..m).filter(|&c| free(c) && !var_adj[v].contains(&(c as u32))));
                }
            }
            let Some(least) = candidates.iter().map(|&c| chk_adj[c].len()).min() else {
                return Err(Error::Construction(format!("no check left for bit {v}")));
            };
            let ties: Vec<usize> = candidates.iter().copied().filter(|&c| chk_adj[c].len() == least).collect();
            let c = ties[rng.gen_range(0..ties.len())];
            var_adj[v].push(c as u32);
            chk_adj[c].push(v as u32);
        }
    }
    for row in chk_adj.iter_mut() {
        row.sort_unstable();
    }
    Ok(chk_adj)
}
