//! Black-box rank of a graph's adjacency matrix over GF(p) (Wiedemann).
//!
//! With `B = A S` for a random nonsingular diagonal `S` and a random vector
//! `u`, the minimal generator `g` of `(S u)^T B^i u` divides the minimal
//! polynomial of `B`. Since `B^T = S A`, the terms satisfy
//! `z_j^T S z_k = (S u)^T B^(j+k) u` with `z_k = B^k u`, so one product by
//! `A` yields two terms. Writing `L = deg g`, the estimate is `L - 1` when
//! `x | g` and `L` otherwise. That is never above `rank A`, and equals it
//! with probability `1 - O(n^2 / p)`.

use rand::Rng;

use super::field::PrimeField;
use crate::graph::Graph;

/// Zero discrepancies required past `2L` before stopping early.
const EARLY_STOP: usize = 24;

/// Rank lower bound from one Wiedemann run; exact with high probability.
pub fn wiedemann_rank<R: Rng + ?Sized>(g: &Graph, field: PrimeField, rng: &mut R) -> usize {
    let n = g.n();
    if n == 0 || g.edge_count() == 0 {
        return 0;
    }
    let d: Vec<u64> = (0..n).map(|_| field.random_nonzero(rng)).collect();
    let mut z: Vec<u64> = (0..n).map(|_| field.random_nonzero(rng)).collect();
    let mut s = vec![0u64; n];

    let mut bm = BerlekampMassey::new(field);
    let limit = 2 * n + 2;
    loop {
        for k in 0..n {
            s[k] = field.mul(d[k], z[k]);
        }
        bm.push(field.dot(z.iter().copied().zip(s.iter().copied())));
        if bm.seq.len() >= limit || bm.seq.len() >= 2 * bm.len() + EARLY_STOP {
            break;
        }
        for (v, zv) in z.iter_mut().enumerate() {
            let mut acc = 0u64;
            for &nb in g.neighbors(v) {
                acc = field.add(acc, s[nb as usize]);
            }
            *zv = acc;
        }
        bm.push(field.dot(z.iter().copied().zip(s.iter().copied())));
        if bm.seq.len() >= limit || bm.seq.len() >= 2 * bm.len() + EARLY_STOP {
            break;
        }
    }
    let l = bm.len();
    if bm.constant_term_is_zero() {
        l - 1
    } else {
        l
    }
}

/// Incremental Berlekamp–Massey over GF(p), Montgomery form.
struct BerlekampMassey {
    field: PrimeField,
    seq: Vec<u64>,
    /// Connection polynomial `C(x) = 1 + c_1 x + ... + c_L x^L`.
    c: Vec<u64>,
    b: Vec<u64>,
    l: usize,
    m: usize,
    last_disc: u64,
}

impl BerlekampMassey {
    fn new(field: PrimeField) -> Self {
        Self {
            field,
            seq: Vec::new(),
            c: vec![field.one()],
            b: vec![field.one()],
            l: 0,
            m: 1,
            last_disc: field.one(),
        }
    }

    fn len(&self) -> usize {
        self.l
    }

    fn push(&mut self, s: u64) {
        let f = self.field;
        self.seq.push(s);
        let n = self.seq.len() - 1;
        let top = self.l.min(self.c.len() - 1);
        let tail = f.dot((1..=top).map(|i| (self.c[i], self.seq[n - i])));
        let disc = f.add(s, tail);
        if disc == 0 {
            self.m += 1;
            return;
        }
        let coef = f.mul(disc, f.inv(self.last_disc));
        let needed = self.b.len() + self.m;
        let old = (2 * self.l <= n).then(|| self.c.clone());
        if self.c.len() < needed {
            self.c.resize(needed, 0);
        }
        for (i, &bi) in self.b.iter().enumerate() {
            let k = i + self.m;
            self.c[k] = f.sub(self.c[k], f.mul(coef, bi));
        }
        if let Some(old) = old {
            self.l = n + 1 - self.l;
            self.b = old;
            self.last_disc = disc;
            self.m = 1;
        } else {
            self.m += 1;
        }
    }

    /// Whether the reversed generator `x^L C(1/x)` vanishes at 0.
    fn constant_term_is_zero(&self) -> bool {
        self.c.get(self.l).is_none_or(|&v| v == 0)
    }
}
