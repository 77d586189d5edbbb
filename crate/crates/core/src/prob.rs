//! Edge probabilities per edge size, stored together with their complements.
//!
//! A probability close to one is best given through its complement
//! (`qK=...`), which is then kept verbatim so that `1 - p` never has to be
//! recomputed. Values are held as `f64` and, when the input is an exact
//! decimal, also as a rational.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Presence probability `p` and absence probability `q` of one edge size.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProb {
    pub p: f64,
    pub q: f64,
    exact: Option<(BigRational, BigRational)>,
}

impl EdgeProb {
    /// From the presence probability. The complement is computed once.
    pub fn from_p(p: f64) -> Result<Self> {
        Self::checked(p, 1.0 - p, None)
    }

    /// From the absence probability, keeping it verbatim.
    pub fn from_q(q: f64) -> Result<Self> {
        Self::checked(1.0 - q, q, None)
    }

    pub fn from_exact_p(p: BigRational) -> Result<Self> {
        let q = BigRational::one() - &p;
        Self::from_exact(p, q)
    }

    pub fn from_exact_q(q: BigRational) -> Result<Self> {
        let p = BigRational::one() - &q;
        Self::from_exact(p, q)
    }

    fn from_exact(p: BigRational, q: BigRational) -> Result<Self> {
        if !p.is_positive() || !q.is_positive() {
            return Err(Error::InvalidProbability(format!(
                "need 0 < p < 1, got p = {p}"
            )));
        }
        let pf = p.to_f64().unwrap_or(f64::NAN);
        let qf = q.to_f64().unwrap_or(f64::NAN);
        Self::checked(pf, qf, Some((p, q)))
    }

    fn checked(p: f64, q: f64, exact: Option<(BigRational, BigRational)>) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !ok(p) || !ok(q) {
            return Err(Error::InvalidProbability(format!(
                "need 0 < p < 1 and 0 < q < 1, got p = {p}, q = {q}"
            )));
        }
        Ok(EdgeProb { p, q, exact })
    }

    /// Exact `(p, q)` when known.
    pub fn exact(&self) -> Option<&(BigRational, BigRational)> {
        self.exact.as_ref()
    }

    pub fn ln_p(&self) -> f64 {
        self.p.ln()
    }

    pub fn ln_q(&self) -> f64 {
        self.q.ln()
    }
}

/// Probabilities for every declared edge size.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbabilitySpec {
    entries: BTreeMap<usize, EdgeProb>,
}

impl ProbabilitySpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same probability `p` (parsed as an exact decimal) for every size.
    pub fn homogeneous(sizes: &[usize], p: &str) -> Result<Self> {
        let mut spec = Self::new();
        for &k in sizes {
            spec.set(k, EdgeProb::from_exact_p(parse_decimal(p)?)?);
        }
        Ok(spec)
    }

    /// The same float probability for every size.
    pub fn homogeneous_f64(sizes: &[usize], p: f64) -> Result<Self> {
        let mut spec = Self::new();
        for &k in sizes {
            spec.set(k, EdgeProb::from_p(p)?);
        }
        Ok(spec)
    }

    pub fn set(&mut self, size: usize, prob: EdgeProb) -> &mut Self {
        self.entries.insert(size, prob);
        self
    }

    pub fn with(mut self, size: usize, prob: EdgeProb) -> Self {
        self.set(size, prob);
        self
    }

    pub fn get(&self, size: usize) -> Result<&EdgeProb> {
        self.entries.get(&size).ok_or(Error::MissingSize(size))
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &EdgeProb)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    /// Fails unless every size in `sizes` is declared.
    pub fn require(&self, sizes: &[usize]) -> Result<()> {
        for &k in sizes {
            self.get(k)?;
        }
        Ok(())
    }

    /// The common probability when all declared sizes share one.
    pub fn homogeneous_value(&self) -> Option<&EdgeProb> {
        let mut it = self.entries.values();
        let first = it.next()?;
        it.all(|e| e.p == first.p && e.q == first.q).then_some(first)
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|e| e.exact.is_some())
    }

    /// Compact description, e.g. `p1=0.999;q2=0.01`.
    pub fn summary(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| {
                if e.p > 0.5 {
                    format!("q{k}={}", e.q)
                } else {
                    format!("p{k}={}", e.p)
                }
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl Serialize for ProbabilitySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (k, e) in &self.entries {
            #[derive(Serialize)]
            struct Entry {
                p: f64,
                q: f64,
            }
            map.serialize_entry(&k.to_string(), &Entry { p: e.p, q: e.q })?;
        }
        map.end()
    }
}

/// Parses a decimal literal such as `0.25`, `1e-3` or `3` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::ScheduleParse(format!("not a decimal number: `{s}`"));
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// Which probability a schedule value describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    P,
    Q,
}

/// Exponent `a` in `n^-a`, kept as a fraction so integer exponents stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Exponent {
    num: i64,
    den: i64,
}

impl Exponent {
    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn integer(self) -> Option<i64> {
        (self.num % self.den == 0).then_some(self.num / self.den)
    }
}

/// A per-size schedule `c * n^-a`, optionally as a complement `1 - c * n^-a`,
/// describing either `p_k(n)` or `q_k(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Side the raw value describes after resolving a leading `1 -`.
    side: Side,
    coef: BigRational,
    coef_f64: f64,
    exponent: Exponent,
    raw: String,
    key_side: Side,
}

impl Schedule {
    /// Parses the value grammar `x`, `c*n^-a`, `n^-a`, `1 - c*n^-a`, `1 - n^-a`
    /// for a `pK` (`key_side = P`) or `qK` key. `a` may be a decimal or `a/b`.
    pub fn parse(key_side: Side, value: &str) -> Result<Self> {
        let raw = value.trim().to_string();
        let compact: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let (complement, body) = match compact.strip_prefix("1-") {
            Some(b) if b.contains('n') => (true, b.to_string()),
            _ => (false, compact.clone()),
        };
        let (coef, exponent) = match body.split_once("n^") {
            None => (parse_decimal(&body)?, Exponent { num: 0, den: 1 }),
            Some((c, a)) => {
                let coef = match c.strip_suffix('*') {
                    Some(c) => parse_decimal(c)?,
                    None if c.is_empty() => BigRational::one(),
                    None => {
                        return Err(Error::ScheduleParse(format!(
                            "expected `c*n^-a`, got `{raw}`"
                        )))
                    }
                };
                (coef, parse_exponent(a, &raw)?)
            }
        };
        let side = match (key_side, complement) {
            (s, false) => s,
            (Side::P, true) => Side::Q,
            (Side::Q, true) => Side::P,
        };
        let coef_f64 = coef.to_f64().unwrap_or(f64::NAN);
        if !coef.is_positive() {
            return Err(Error::ScheduleParse(format!(
                "coefficient must be positive in `{raw}`"
            )));
        }
        Ok(Schedule {
            side,
            coef,
            coef_f64,
            exponent,
            raw,
            key_side,
        })
    }

    /// A constant probability.
    pub fn constant_p(p: &str) -> Result<Self> {
        Self::parse(Side::P, p)
    }

    /// Value at `n`, stored on the side it was specified on.
    pub fn at(&self, n: f64) -> Result<EdgeProb> {
        let exact = self
            .exponent
            .integer()
            .filter(|_| n.fract() == 0.0 && n >= 1.0 && n < 1e15)
            .map(|a| {
                let base = BigRational::from_integer(BigInt::from(n as u64));
                let power = num_traits::pow(base, a.unsigned_abs() as usize);
                if a >= 0 {
                    &self.coef / power
                } else {
                    &self.coef * power
                }
            });
        let value = self.coef_f64 * (-self.exponent.value() * n.ln()).exp();
        let prob = match (self.side, exact) {
            (Side::P, Some(v)) => EdgeProb::from_exact_p(v),
            (Side::Q, Some(v)) => EdgeProb::from_exact_q(v),
            (Side::P, None) => EdgeProb::from_p(value),
            (Side::Q, None) => EdgeProb::from_q(value),
        };
        prob.map_err(|e| match e {
            Error::InvalidProbability(m) => {
                Error::InvalidProbability(format!("schedule `{}` at n = {n}: {m}", self.raw))
            }
            other => other,
        })
    }

    /// True when the schedule does not depend on `n`.
    pub fn is_constant(&self) -> bool {
        self.exponent.num == 0
    }

    /// The text this schedule was parsed from.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// The key side (`p` or `q`) it was declared under.
    pub fn key_side(&self) -> Side {
        self.key_side
    }

    /// `key=value` form, e.g. `q2=1*n^-1`.
    pub fn assignment(&self, size: usize) -> String {
        let k = match self.key_side {
            Side::P => 'p',
            Side::Q => 'q',
        };
        format!("{k}{size}={}", self.raw)
    }
}

fn parse_exponent(a: &str, raw: &str) -> Result<Exponent> {
    let bad = || Error::ScheduleParse(format!("bad exponent in `{raw}`"));
    let a = a.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(a);
    let (neg, a) = match a.strip_prefix('-') {
        Some(x) => (true, x),
        None => (false, a),
    };
    let a = a.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(a);
    let (num, den) = if let Some((x, y)) = a.split_once('/') {
        let x: i64 = x.parse().map_err(|_| bad())?;
        let y: i64 = y.parse().map_err(|_| bad())?;
        if y <= 0 {
            return Err(bad());
        }
        (x, y)
    } else {
        let r = parse_decimal(a).map_err(|_| bad())?;
        let num = r.numer().to_i64().ok_or_else(bad)?;
        let den = r.denom().to_i64().ok_or_else(bad)?;
        (num, den)
    };
    // positive exponent in `n^a` means growth; stored as `n^-a`
    Ok(Exponent {
        num: if neg { num } else { -num },
        den,
    })
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Schedules for every edge size of interest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScheduleSpec {
    entries: BTreeMap<usize, Schedule>,
}

impl ScheduleSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses assignments `pK=VALUE` or `qK=VALUE`.
    pub fn parse_assignments<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let mut spec = Self::new();
        for item in items {
            for part in item.as_ref().split([';', ',']) {
                if part.trim().is_empty() {
                    continue;
                }
                let (k, s) = parse_assignment(part)?;
                if spec.entries.insert(k, s).is_some() {
                    return Err(Error::ScheduleParse(format!(
                        "size {k} assigned more than once"
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn insert(&mut self, size: usize, schedule: Schedule) {
        self.entries.insert(size, schedule);
    }

    pub fn get(&self, size: usize) -> Option<&Schedule> {
        self.entries.get(&size)
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Schedule)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    /// Fails unless every size in `sizes` has a schedule.
    pub fn require(&self, sizes: &[usize]) -> Result<()> {
        for &k in sizes {
            if !self.entries.contains_key(&k) {
                return Err(Error::MissingSize(k));
            }
        }
        Ok(())
    }

    /// Evaluates every schedule at `n`.
    pub fn at(&self, n: f64) -> Result<ProbabilitySpec> {
        let mut spec = ProbabilitySpec::new();
        for (&k, s) in &self.entries {
            spec.set(k, s.at(n)?);
        }
        Ok(spec)
    }

    /// True when every size uses the same schedule text on the same side.
    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.entries.values();
        match it.next() {
            None => true,
            Some(first) => it.all(|s| s.side == first.side && s.raw == first.raw),
        }
    }

    /// `key=value` assignments in size order.
    pub fn assignments(&self) -> Vec<String> {
        self.entries.iter().map(|(&k, s)| s.assignment(k)).collect()
    }
}

/// Parses one `pK=VALUE` / `qK=VALUE` assignment.
pub fn parse_assignment(item: &str) -> Result<(usize, Schedule)> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| Error::ScheduleParse(format!("expected `pK=VALUE`, got `{item}`")))?;
    let key = key.trim();
    let (side, size) = if let Some(k) = key.strip_prefix('p') {
        (Side::P, k)
    } else if let Some(k) = key.strip_prefix('q') {
        (Side::Q, k)
    } else {
        return Err(Error::ScheduleParse(format!(
            "key must be pK or qK, got `{key}`"
        )));
    };
    let size: usize = size
        .parse()
        .map_err(|_| Error::ScheduleParse(format!("bad edge size in `{key}`")))?;
    if size == 0 {
        return Err(Error::ScheduleParse("edge sizes start at 1".into()));
    }
    Ok((size, Schedule::parse(side, value)?))
}

impl FromStr for ScheduleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_assignments(&[s])
    }
}

/// Exact `(p, q)` for one edge size, or an error when only floats are known.
pub(crate) fn exact_pair(spec: &ProbabilitySpec, size: usize) -> Result<(BigRational, BigRational)> {
    let e = spec.get(size)?;
    e.exact().cloned().ok_or(Error::NotExact(size))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_decimal("2.5E1").unwrap(), rat(25, 1));
        assert_eq!(parse_decimal(".2").unwrap(), rat(1, 5));
        assert_eq!(parse_decimal("-3").unwrap(), rat(-3, 1));
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("").is_err());
    }

    #[test]
    fn complements_are_stored() {
        let (k, s) = parse_assignment("p1 = 1 - n^-3").unwrap();
        assert_eq!(k, 1);
        let e = s.at(10.0).unwrap();
        assert_eq!(e.q, 1e-3);
        assert_eq!(e.exact().unwrap().1, rat(1, 1000));

        let (_, s) = parse_assignment("q2=n^-1").unwrap();
        let e = s.at(10.0).unwrap();
        assert_eq!(e.q, 0.1);
        assert_eq!(e.exact().unwrap().0, rat(9, 10));

        let tiny = EdgeProb::from_q(1e-12).unwrap();
        assert_eq!(tiny.q, 1e-12);
    }

    #[test]
    fn schedule_grammar() {
        let s = Schedule::parse(Side::P, "0.5*n^-1/2").unwrap();
        let e = s.at(100.0).unwrap();
        assert!((e.p - 0.05).abs() < 1e-15);
        assert!(e.exact().is_none());

        let s = Schedule::parse(Side::P, "2 * n^-2").unwrap();
        assert_eq!(s.at(10.0).unwrap().exact().unwrap().0, rat(1, 50));

        let s = Schedule::parse(Side::P, "n^-0.5").unwrap();
        assert!((s.at(100.0).unwrap().p - 0.1).abs() < 1e-15);

        let s = Schedule::parse(Side::P, "0.3").unwrap();
        assert!(s.is_constant());
        assert_eq!(s.at(7.0).unwrap().exact().unwrap().0, rat(3, 10));

        assert!(Schedule::parse(Side::P, "2n^-1").is_err());
        assert!(Schedule::parse(Side::P, "n^-x").is_err());
        assert!(parse_assignment("r2=0.5").is_err());
        assert!(parse_assignment("p0=0.5").is_err());
    }

    #[test]
    fn out_of_range_probabilities() {
        assert!(EdgeProb::from_p(0.0).is_err());
        assert!(EdgeProb::from_p(1.0).is_err());
        assert!(EdgeProb::from_q(1.5).is_err());
        let s = Schedule::parse(Side::P, "2*n^-1").unwrap();
        assert!(s.at(1.0).is_err());
    }

    #[test]
    fn spec_lookup() {
        let spec = ProbabilitySpec::homogeneous(&[2, 3], "0.2").unwrap();
        assert!(spec.get(2).is_ok());
        assert!(matches!(spec.get(1), Err(Error::MissingSize(1))));
        assert!(spec.homogeneous_value().is_some());
        assert!(spec.is_exact());

        let sched = ScheduleSpec::parse_assignments(&["p1=1 - n^-3;q2=n^-1"]).unwrap();
        assert_eq!(sched.assignments(), vec!["p1=1 - n^-3", "q2=n^-1"]);
        let reparsed = ScheduleSpec::parse_assignments(&sched.assignments()).unwrap();
        assert_eq!(reparsed, sched);
        assert!(ScheduleSpec::parse_assignments(&["p2=0.1", "q2=0.1"]).is_err());
    }
}
