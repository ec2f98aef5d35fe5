//! Rank over GF(p) by sparse Gaussian elimination with Markowitz pivoting,
//! finishing densely once the active block fills in.

use std::collections::BTreeSet;

use super::field::PrimeField;
use crate::graph::Graph;

/// Square matrix with sparse rows over GF(p); values in Montgomery form.
#[derive(Clone, Debug)]
pub struct PrimeFieldMatrix {
    field: PrimeField,
    n: usize,
    rows: Vec<Vec<(u32, u64)>>,
}

impl PrimeFieldMatrix {
    /// Adjacency matrix of `g` reduced mod `p`.
    pub fn from_graph(g: &Graph, field: PrimeField) -> Self {
        let one = field.one();
        let rows = (0..g.n())
            .map(|v| g.neighbors(v).iter().map(|&w| (w, one)).collect())
            .collect();
        Self { field, n: g.n(), rows }
    }

    /// From integer rows; zero entries are dropped.
    pub fn from_dense(a: &[Vec<i64>], field: PrimeField) -> Self {
        let rows = a
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| (j as u32, field.enter(x)))
                    .filter(|&(_, v)| v != 0)
                    .collect()
            })
            .collect();
        Self {
            field,
            n: a.len(),
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }
}

/// Tuning for [`markowitz_rank`].
#[derive(Clone, Copy, Debug)]
pub struct EliminationLimits {
    /// Switch to dense elimination when the active block is at least this full.
    pub dense_density: f64,
    /// Give up (return `None`) if the dense block would be larger than this.
    pub dense_cap: Option<usize>,
    /// Lowest-count columns and rows scanned per pivot search.
    pub search_width: usize,
    /// Give up once this many row-merge steps have been spent.
    pub work_cap: Option<usize>,
}

impl Default for EliminationLimits {
    fn default() -> Self {
        Self {
            dense_density: 0.15,
            dense_cap: None,
            search_width: 4,
            work_cap: None,
        }
    }
}

/// Rank of `g`'s adjacency matrix mod `p`.
pub fn rank_mod_p(g: &Graph, field: PrimeField) -> usize {
    markowitz_rank(PrimeFieldMatrix::from_graph(g, field), EliminationLimits::default())
        .expect("no dense cap")
}

/// Rank by sparse elimination. Pivots minimise `(r - 1)(c - 1)` over the
/// entries of the few shortest columns and rows; ties go to the lowest
/// column, then the lowest row.
pub fn markowitz_rank(m: PrimeFieldMatrix, limits: EliminationLimits) -> Option<usize> {
    let PrimeFieldMatrix { field, n, mut rows } = m;
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut col_count = vec![0usize; n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            col_rows[j as usize].push(i as u32);
            col_count[j as usize] += 1;
        }
    }
    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; n];
    let mut row_set: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut col_set: BTreeSet<(usize, u32)> = BTreeSet::new();
    for i in 0..n {
        if rows[i].is_empty() {
            row_alive[i] = false;
        } else {
            row_set.insert((rows[i].len(), i as u32));
        }
        if col_count[i] == 0 {
            col_alive[i] = false;
        } else {
            col_set.insert((col_count[i], i as u32));
        }
    }
    let mut nnz: usize = rows.iter().map(Vec::len).sum();
    let mut rank = 0usize;
    let mut scratch: Vec<(u32, u64)> = Vec::new();
    let mut work = 0usize;

    loop {
        let (ar, ac) = (row_set.len(), col_set.len());
        if ar == 0 || ac == 0 {
            return Some(rank);
        }
        if limits.work_cap.is_some_and(|cap| work > cap) {
            return None;
        }
        if ar.min(ac) > 32 && nnz as f64 >= limits.dense_density * ar as f64 * ac as f64 {
            if limits.dense_cap.is_some_and(|cap| ar.max(ac) > cap) {
                return None;
            }
            let live_rows: Vec<usize> = row_set.iter().map(|&(_, i)| i as usize).collect();
            let mut live_cols: Vec<usize> = col_set.iter().map(|&(_, j)| j as usize).collect();
            live_cols.sort_unstable();
            let mut col_index = vec![u32::MAX; n];
            for (k, &j) in live_cols.iter().enumerate() {
                col_index[j] = k as u32;
            }
            let w = live_cols.len();
            let mut dense = vec![0u64; live_rows.len() * w];
            for (r, &i) in live_rows.iter().enumerate() {
                for &(j, v) in &rows[i] {
                    dense[r * w + col_index[j as usize] as usize] = v;
                }
            }
            return Some(rank + dense_rank(&field, &mut dense, live_rows.len(), w));
        }

        // Pivot search.
        let mut best: Option<(usize, u32, u32)> = None; // (cost, col, row)
        let consider = |cost: usize, j: u32, i: u32, best: &mut Option<(usize, u32, u32)>| {
            if best.is_none_or(|b| (cost, j, i) < b) {
                *best = Some((cost, j, i));
            }
        };
        for &(cc, j) in col_set.iter().take(limits.search_width) {
            for &i in &col_rows[j as usize] {
                if row_alive[i as usize] && entry(&rows[i as usize], j).is_some() {
                    consider((rows[i as usize].len() - 1) * (cc - 1), j, i, &mut best);
                }
            }
        }
        for &(rc, i) in row_set.iter().take(limits.search_width) {
            for &(j, _) in &rows[i as usize] {
                consider((rc - 1) * (col_count[j as usize] - 1), j, i, &mut best);
            }
        }
        let (_, pc, pr) = best.expect("active block has a nonzero entry");
        let (pc, pr) = (pc as usize, pr as usize);
        rank += 1;

        // Retire the pivot row.
        let pivot_row = std::mem::take(&mut rows[pr]);
        row_set.remove(&(pivot_row.len(), pr as u32));
        row_alive[pr] = false;
        nnz -= pivot_row.len();
        for &(j, _) in &pivot_row {
            let j = j as usize;
            col_set.remove(&(col_count[j], j as u32));
            col_count[j] -= 1;
            if j != pc && col_count[j] > 0 {
                col_set.insert((col_count[j], j as u32));
            }
        }
        let pv = entry(&pivot_row, pc as u32).unwrap();
        let pinv = field.inv(pv);

        // Eliminate column pc from the other rows.
        let mut targets: Vec<u32> = std::mem::take(&mut col_rows[pc])
            .into_iter()
            .filter(|&i| row_alive[i as usize] && entry(&rows[i as usize], pc as u32).is_some())
            .collect();
        targets.sort_unstable();
        targets.dedup();
        for &i in &targets {
            let i = i as usize;
            let row = std::mem::take(&mut rows[i]);
            row_set.remove(&(row.len(), i as u32));
            let f = field.mul(entry(&row, pc as u32).unwrap(), pinv);
            work += row.len() + pivot_row.len();
            scratch.clear();
            let (mut a, mut b) = (0, 0);
            while a < row.len() || b < pivot_row.len() {
                let ja = row.get(a).map_or(u32::MAX, |e| e.0);
                let jb = pivot_row.get(b).map_or(u32::MAX, |e| e.0);
                if ja < jb {
                    scratch.push(row[a]);
                    a += 1;
                } else if jb < ja {
                    // Fill-in.
                    let v = field.neg(field.mul(f, pivot_row[b].1));
                    if jb as usize != pc {
                        scratch.push((jb, v));
                        let j = jb as usize;
                        col_set.remove(&(col_count[j], jb));
                        col_count[j] += 1;
                        col_set.insert((col_count[j], jb));
                        col_rows[j].push(i as u32);
                    }
                    b += 1;
                } else {
                    let v = field.sub(row[a].1, field.mul(f, pivot_row[b].1));
                    let j = ja as usize;
                    if j == pc || v == 0 {
                        // Cancelled (always so in the pivot column).
                        if j != pc {
                            col_set.remove(&(col_count[j], ja));
                            col_count[j] -= 1;
                            if col_count[j] > 0 {
                                col_set.insert((col_count[j], ja));
                            }
                        }
                    } else {
                        scratch.push((ja, v));
                    }
                    a += 1;
                    b += 1;
                }
            }
            nnz = nnz + scratch.len() - row.len();
            let mut new_row = row;
            new_row.clear();
            new_row.extend_from_slice(&scratch);
            if new_row.is_empty() {
                row_alive[i] = false;
            } else {
                row_set.insert((new_row.len(), i as u32));
            }
            rows[i] = new_row;
        }
        col_alive[pc] = false;
        col_set.remove(&(col_count[pc], pc as u32));
        col_count[pc] = 0;
        // Drop stale column lists now and then to bound memory.
        for &(j, _) in &pivot_row {
            let j = j as usize;
            if col_alive[j] && col_rows[j].len() > 4 * col_count[j] + 16 {
                let rows_ref = &rows;
                let alive = &row_alive;
                col_rows[j].retain(|&i| alive[i as usize] && entry(&rows_ref[i as usize], j as u32).is_some());
                col_rows[j].dedup();
            }
        }
    }
}

#[inline]
fn entry(row: &[(u32, u64)], j: u32) -> Option<u64> {
    row.binary_search_by_key(&j, |e| e.0).ok().map(|k| row[k].1)
}

/// Rank of a dense `r x c` row-major block; destroys the block.
pub(crate) fn dense_rank(field: &PrimeField, a: &mut [u64], r: usize, c: usize) -> usize {
    let mut rank = 0;
    let mut row = 0;
    for col in 0..c {
        if row == r {
            break;
        }
        let Some(piv) = (row..r).find(|&i| a[i * c + col] != 0) else {
            continue;
        };
        if piv != row {
            for k in col..c {
                a.swap(piv * c + k, row * c + k);
            }
        }
        let inv = field.inv(a[row * c + col]);
        let (head, tail) = a.split_at_mut((row + 1) * c);
        let prow = &head[row * c..];
        for i in 0..r - row - 1 {
            let target = &mut tail[i * c..(i + 1) * c];
            let x = target[col];
            if x == 0 {
                continue;
            }
            let f = field.neg(field.mul(x, inv));
            for (t, &pv) in target[col..].iter_mut().zip(&prow[col..]) {
                *t = field.add(*t, field.mul(f, pv));
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}
