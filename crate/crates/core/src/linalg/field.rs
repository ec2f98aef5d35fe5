//! Arithmetic modulo an odd prime below `2^63`, in Montgomery form.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, TAG_PRIME};

/// `Z/pZ` with Montgomery multiplication (`R = 2^64`). Elements handed to
/// `add`, `mul`, ... are in Montgomery form; `enter` and `leave` convert.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    /// `-p^{-1} mod 2^64`.
    neg_inv: u64,
    /// `R^2 mod p`.
    r2: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p >= 1 << 63 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        debug_assert_eq!(p.wrapping_mul(inv), 1);
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Ok(Self {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Montgomery form of an integer.
    pub fn enter(&self, a: i64) -> u64 {
        let r = a.rem_euclid(self.p as i64) as u64;
        self.mul(r, self.r2)
    }

    /// Standard representative in `0..p`.
    pub fn leave(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    pub fn one(&self) -> u64 {
        self.enter(1)
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero element.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.p - 2)
    }

    /// `sum a_i b_i` with a single modular reduction at the end.
    #[inline]
    pub fn dot<I>(&self, pairs: I) -> u64
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut acc = 0u128;
        let mut carries = 0u64;
        for (a, b) in pairs {
            let (s, o) = acc.overflowing_add(a as u128 * b as u128);
            acc = s;
            carries += o as u64;
        }
        // acc + carries * 2^128, reduced; then one Montgomery step removes the extra R.
        let p = self.p as u128;
        let two128 = ((u128::MAX % p) + 1) % p;
        let hi = (carries as u128 % p) * two128 % p;
        let v = ((acc % p + hi) % p) as u64;
        self.mul(v, 1)
    }

    /// Uniform nonzero element in Montgomery form.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.enter(rng.random_range(1..self.p) as i64)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `count` distinct primes drawn uniformly from `[2^(bits-1), 2^bits)`.
pub fn random_primes(count: usize, bits: u32, seed: u64) -> Vec<u64> {
    assert!((3..=63).contains(&bits), "prime size must be 3..=63 bits");
    let mut rng = rng::stream(seed, &[TAG_PRIME, bits as u64]);
    let (lo, hi) = (1u64 << (bits - 1), 1u64 << bits);
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    while primes.len() < count {
        let c = rng.random_range(lo..hi) | 1;
        if is_prime(c) && !primes.contains(&c) {
            primes.push(c);
        }
    }
    primes
}

/// Default prime battery: three fixed 61-bit primes.
pub fn default_primes() -> Vec<u64> {
    random_primes(3, 61, 0)
}

pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miller_rabin_small_and_known() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2, 3, 5, 7
        assert!(!is_prime(MERSENNE_61 - 2));
    }

    #[test]
    fn field_ops_match_u128_arithmetic() {
        for p in [7u64, 2_147_483_647, MERSENNE_61, 9_223_372_036_854_775_783] {
            let f = PrimeField::new(p).unwrap();
            let xs: [i64; 5] = [0, 1, -1, 123_456_789, i64::MAX];
            for &a in &xs {
                for &b in &xs {
                    let (ra, rb) = (a.rem_euclid(p as i64) as u64, b.rem_euclid(p as i64) as u64);
                    let (ma, mb) = (f.enter(a), f.enter(b));
                    assert_eq!(f.leave(f.mul(ma, mb)), mul_mod(ra, rb, p));
                    assert_eq!(f.leave(f.add(ma, mb)), ((ra as u128 + rb as u128) % p as u128) as u64);
                    assert_eq!(f.leave(f.sub(ma, mb)), ((ra as u128 + p as u128 - rb as u128) % p as u128) as u64);
                    let pairs = [(ma, mb), (ma, ma), (mb, mb)];
                    let expect = f.add(f.add(f.mul(ma, mb), f.mul(ma, ma)), f.mul(mb, mb));
                    assert_eq!(f.dot(pairs), expect);
                }
                if a.rem_euclid(p as i64) != 0 {
                    assert_eq!(f.mul(f.enter(a), f.inv(f.enter(a))), f.one());
                }
            }
        }
    }

    #[test]
    fn long_dot_products_carry() {
        let p = 9_223_372_036_854_775_783;
        let f = PrimeField::new(p).unwrap();
        let x = f.enter(-1);
        let n = 10_000u64;
        // (p-1)^2 * n = n mod p.
        assert_eq!(f.leave(f.dot((0..n).map(|_| (x, x)))), n);
    }

    #[test]
    fn rejects_composites_and_range() {
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(15).is_err());
        assert!(PrimeField::new((1 << 63) + 29).is_err());
    }

    #[test]
    fn default_battery() {
        let ps = default_primes();
        assert_eq!(ps.len(), 3);
        assert!(ps.iter().all(|&p| is_prime(p) && p >= 1 << 60 && p < 1 << 61));
        assert_eq!(ps, default_primes());
    }
}
