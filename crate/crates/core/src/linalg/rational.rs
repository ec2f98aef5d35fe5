//! Exact rank and kernel computations over the rationals, for small matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const RATIONAL_SIZE_CAP: usize = 200;

fn guard(n: usize) -> Result<()> {
    if n > RATIONAL_SIZE_CAP {
        return Err(Error::SizeGuard {
            what: "rational elimination dimension",
            size: n,
            cap: RATIONAL_SIZE_CAP,
        });
    }
    Ok(())
}

/// Exact rank over Q of the adjacency matrix of `g`.
pub fn rational_rank_oracle(g: &Graph) -> Result<usize> {
    rational_rank(&g.dense_adjacency())
}

/// Exact rank over Q by fraction-free (Bareiss) elimination.
pub fn rational_rank(a: &[Vec<i64>]) -> Result<usize> {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    guard(r.max(c))?;
    let mut m: Vec<Vec<BigInt>> = a.iter().map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..c {
        if rank == r {
            break;
        }
        let Some(piv) = (rank..r).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        for i in rank + 1..r {
            for k in col + 1..c {
                let v = (&m[rank][col] * &m[i][k] - &m[i][col] * &m[rank][k]) / &prev;
                m[i][k] = v;
            }
            m[i][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    Ok(rank)
}

/// Basis of the rational kernel of a square integer matrix, one vector per
/// free column of the reduced row echelon form.
pub fn kernel_basis(a: &[Vec<i64>]) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    guard(n)?;
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from_integer(x.into())).collect())
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == n {
            break;
        }
        let Some(piv) = (row..n).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, piv);
        let inv = m[row][col].recip();
        for k in col..n {
            m[row][k] = &m[row][k] * &inv;
        }
        for i in 0..n {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for k in col..n {
                    let v = &m[i][k] - &f * &m[row][k];
                    m[i][k] = v;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    Ok(free
        .iter()
        .map(|&fc| {
            let mut v = vec![BigRational::zero(); n];
            v[fc] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][fc].clone();
            }
            v
        })
        .collect())
}

/// `<e_r, P e_r>` for the orthogonal projector `P` onto `span(basis)`:
/// `k_r^T (K^T K)^{-1} k_r` with `K` the basis as columns.
pub fn projection_diagonal(basis: &[Vec<BigRational>], r: usize) -> BigRational {
    let d = basis.len();
    if d == 0 {
        return BigRational::zero();
    }
    let dot = |a: &[BigRational], b: &[BigRational]| -> BigRational {
        a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
    };
    // Solve (K^T K) y = k_r, then return k_r . y.
    let mut gram: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..d).map(|j| dot(&basis[i], &basis[j])).collect();
            row.push(basis[i][r].clone());
            row
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).find(|&i| !gram[i][col].is_zero()).expect("Gram matrix is nonsingular");
        gram.swap(col, piv);
        let inv = gram[col][col].recip();
        for k in col..=d {
            gram[col][k] = &gram[col][k] * &inv;
        }
        for i in 0..d {
            if i != col && !gram[i][col].is_zero() {
                let f = gram[i][col].clone();
                for k in col..=d {
                    let v = &gram[i][k] - &f * &gram[col][k];
                    gram[i][k] = v;
                }
            }
        }
    }
    (0..d).fold(BigRational::zero(), |acc, i| acc + &basis[i][r] * &gram[i][d])
}

/// `mu_G({0})` at vertex `r`: the diagonal entry of the projector onto
/// `ker A(G)`, computed exactly and rounded to `f64`.
pub fn kernel_projection_at(g: &Graph, r: usize) -> Result<f64> {
    let basis = kernel_basis(&g.dense_adjacency())?;
    let p = projection_diagonal(&basis, r);
    debug_assert!(!p.is_negative());
    Ok(p.to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rational_rank_oracle(&path(2)).unwrap(), 2);
        assert_eq!(rational_rank_oracle(&path(3)).unwrap(), 2);
        assert_eq!(rational_rank_oracle(&cycle(4)).unwrap(), 2);
        assert_eq!(rational_rank_oracle(&star(3)).unwrap(), 2);
        assert_eq!(rational_rank_oracle(&Graph::empty(4)).unwrap(), 0);
        assert_eq!(rational_rank(&[vec![2, 4], vec![1, 2]]).unwrap(), 1);
        assert_eq!(rational_rank(&[vec![0, 1, -1], vec![1, 0, 1]]).unwrap(), 2);
    }

    #[test]
    fn size_guard() {
        assert!(rational_rank_oracle(&Graph::empty(201)).is_err());
    }

    #[test]
    fn kernel_of_p3() {
        let basis = kernel_basis(&path(3).dense_adjacency()).unwrap();
        assert_eq!(basis.len(), 1);
        let v: Vec<i64> = basis[0].iter().map(|x| x.to_integer().try_into().unwrap()).collect();
        assert_eq!(v, vec![-1, 0, 1]);
        assert_eq!(kernel_projection_at(&path(3), 0).unwrap(), 0.5);
        assert_eq!(kernel_projection_at(&path(3), 1).unwrap(), 0.0);
    }

    #[test]
    fn star_projections() {
        // Kernel of K_{1,3} is {x : x_0 = 0, x_1 + x_2 + x_3 = 0}; P_11 = 2/3.
        assert_eq!(kernel_projection_at(&star(3), 0).unwrap(), 0.0);
        assert!((kernel_projection_at(&star(3), 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn projector_trace_is_kernel_dimension() {
        let g = cycle(8);
        let basis = kernel_basis(&g.dense_adjacency()).unwrap();
        let trace = (0..8).fold(BigRational::zero(), |acc, r| acc + projection_diagonal(&basis, r));
        assert_eq!(trace, BigRational::from_integer(2.into()));
    }
}
