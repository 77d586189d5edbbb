//! Arithmetic backends shared by the exact moment engines: `f64` with
//! compensated summation, and arbitrary-precision rationals.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

use crate::error::Result;
use crate::prob::{exact_pair, ProbabilitySpec};

pub trait Scalar: Num + Clone + Debug + std::ops::Neg<Output = Self> + Send + Sync {
    fn from_u128(v: u128) -> Self;
    fn to_f64(&self) -> f64;
    /// Float conversion for backends that accept rounding.
    fn from_f64_lossy(v: f64) -> Option<Self>;
    /// `(p, q)` of edge size `k` in this representation.
    fn probs(spec: &ProbabilitySpec, k: usize) -> Result<(Self, Self)>;
    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self;

    fn powi(&self, e: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_u128(v: u128) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64_lossy(v: f64) -> Option<Self> {
        Some(v)
    }

    fn probs(spec: &ProbabilitySpec, k: usize) -> Result<(Self, Self)> {
        let e = spec.get(k)?;
        Ok((e.p, e.q))
    }

    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self {
        neumaier_sum(items)
    }

    fn powi(&self, e: usize) -> Self {
        f64::powi(*self, e as i32)
    }
}

impl Scalar for BigRational {
    fn from_u128(v: u128) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(_: f64) -> Option<Self> {
        None
    }

    fn probs(spec: &ProbabilitySpec, k: usize) -> Result<(Self, Self)> {
        exact_pair(spec, k)
    }

    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |a, b| a + b)
    }
}

/// Kahan–Babuška–Neumaier summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per-size probability tables for one spec, indexed by slot in `sizes`.
#[derive(Clone, Debug)]
pub struct ProbTable<S> {
    pub p: Vec<S>,
    pub q: Vec<S>,
}

impl<S: Scalar> ProbTable<S> {
    pub fn new(spec: &ProbabilitySpec, sizes: &[usize]) -> Result<Self> {
        let mut p = Vec::with_capacity(sizes.len());
        let mut q = Vec::with_capacity(sizes.len());
        for &k in sizes {
            let (a, b) = S::probs(spec, k)?;
            p.push(a);
            q.push(b);
        }
        Ok(ProbTable { p, q })
    }

    /// `prod_k p_k^{counts[k]}`.
    pub fn p_of(&self, counts: &[u16]) -> S {
        counts
            .iter()
            .zip(&self.p)
            .fold(S::one(), |acc, (&c, p)| acc * p.powi(c as usize))
    }

    /// `prod_k q_k^{counts[k]}`.
    pub fn q_of(&self, counts: &[u16]) -> S {
        counts
            .iter()
            .zip(&self.q)
            .fold(S::one(), |acc, (&c, q)| acc * q.powi(c as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
        assert_eq!(neumaier_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn table_products() {
        let spec = ProbabilitySpec::homogeneous(&[1, 2], "0.5").unwrap();
        let t: ProbTable<BigRational> = ProbTable::new(&spec, &[1, 2]).unwrap();
        assert_eq!(t.p_of(&[1, 2]), BigRational::new(1.into(), 8.into()));
        assert_eq!(t.q_of(&[0, 0]), BigRational::one());
        let t: ProbTable<f64> = ProbTable::new(&spec, &[1, 2]).unwrap();
        assert_eq!(t.p_of(&[3, 0]), 0.125);
    }
}
