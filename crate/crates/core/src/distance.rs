//! Kolmogorov and 1-Wasserstein distances to the standard normal law, from
//! samples and from exact discrete laws, plus checks of the perturbation
//! inequalities for sums of discrete variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// `sqrt(ln(2/delta) / (2m))`: with probability at least `1 - delta` the
/// empirical CDF of `m` samples is uniformly within this radius of the truth.
pub fn dkw_radius(m: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Empirical Kolmogorov distance `sup_t |F_m(t) - Phi(t)|`, checked on both
/// sides of every atom.
pub fn dk_empirical(samples: &[f64]) -> Result<f64> {
    let xs = sorted(samples)?;
    let m = xs.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let phi = normal::cdf(xs[i]);
        worst = worst.max((i as f64 / m - phi).abs()).max((j as f64 / m - phi).abs());
        i = j;
    }
    Ok(worst)
}

/// Quantile-coupling estimate of the 1-Wasserstein distance:
/// `(1/m) sum_i |x_(i) - Phi^{-1}((i - 1/2)/m)|`.
pub fn dw_empirical(samples: &[f64]) -> Result<f64> {
    let xs = sorted(samples)?;
    let m = xs.len() as f64;
    Ok(crate::scalar::neumaier_sum(
        xs.iter()
            .enumerate()
            .map(|(i, x)| (x - normal::quantile((i as f64 + 0.5) / m)).abs()),
    ) / m)
}

/// Distances estimated from a standardized sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub d_k: f64,
    pub d_w: f64,
    pub m: usize,
    pub delta: f64,
    pub dkw_radius: f64,
}

pub fn estimate(samples: &[f64], delta: f64) -> Result<DistanceEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta must be in (0, 1), got {delta}")));
    }
    Ok(DistanceEstimate {
        d_k: dk_empirical(samples)?,
        d_w: dw_empirical(samples)?,
        m: samples.len(),
        delta,
        dkw_radius: dkw_radius(samples.len(), delta),
    })
}

/// A finitely supported law on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    /// `(value, probability)` sorted by value, values distinct.
    atoms: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    /// Builds a law; equal values are merged and zero weights dropped.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut a: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, w)| w != 0.0).collect();
        if a.is_empty() {
            return Err(Error::EmptySample);
        }
        if a.iter().any(|&(x, w)| !x.is_finite() || !(0.0..=1.0 + 1e-12).contains(&w)) {
            return Err(Error::OutOfRange("atoms need finite values and weights in [0, 1]".into()));
        }
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(a.len());
        for (x, w) in a {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteLaw { atoms: merged })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn point(x: f64) -> Self {
        DiscreteLaw { atoms: vec![(x, 1.0)] }
    }

    /// Two-point law taking `a` w.p. `1 - p` and `b` w.p. `p`.
    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::new([(a, 1.0 - p), (b, p)])
    }

    pub fn mean(&self) -> f64 {
        crate::scalar::neumaier_sum(self.atoms.iter().map(|&(x, w)| x * w))
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        crate::scalar::neumaier_sum(self.atoms.iter().map(|&(x, w)| (x - mu).powi(2) * w))
    }

    pub fn largest_atom(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).fold(0.0, f64::max)
    }

    /// Law of `(X - mean) / sd`.
    pub fn affine(&self, mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::DegenerateCount(sd));
        }
        Ok(DiscreteLaw {
            atoms: self.atoms.iter().map(|&(x, w)| ((x - mean) / sd, w)).collect(),
        })
    }

    /// Law of `X / sd(X)`.
    pub fn normalized(&self) -> Result<Self> {
        self.affine(0.0, self.variance().sqrt())
    }

    /// Law of the sum of independent copies of `self` and `other`.
    pub fn convolve(&self, other: &DiscreteLaw) -> Self {
        let pairs = self
            .atoms
            .iter()
            .flat_map(|&(x, v)| other.atoms.iter().map(move |&(y, w)| (x + y, v * w)));
        DiscreteLaw::new(pairs).expect("convolution of laws is a law")
    }

    /// Exact `sup_t |F(t) - Phi(t)|`.
    pub fn dk_normal(&self) -> f64 {
        let mut below = 0.0;
        let mut worst: f64 = 0.0;
        for &(x, w) in &self.atoms {
            let phi = normal::cdf(x);
            let upto = below + w;
            worst = worst.max((below - phi).abs()).max((upto - phi).abs());
            below = upto;
        }
        worst
    }

    /// Exact `int |F(t) - Phi(t)| dt`, integrating `Phi` in closed form
    /// between consecutive atoms.
    pub fn dw_normal(&self) -> f64 {
        let mut pieces = Vec::with_capacity(self.atoms.len() + 1);
        pieces.push(normal::cdf_integral(self.atoms[0].0));
        let mut level = 0.0;
        for win in 0..self.atoms.len() {
            level += self.atoms[win].1;
            let a = self.atoms[win].0;
            match self.atoms.get(win + 1) {
                Some(&(b, _)) => pieces.push(gap_between(level.min(1.0), a, b)),
                None => pieces.push(normal::sf_integral(a)),
            }
        }
        crate::scalar::neumaier_sum(pieces)
    }
}

/// `int_a^b |c - Phi(t)| dt` for `a < b`.
fn gap_between(c: f64, a: f64, b: f64) -> f64 {
    let signed = |lo: f64, hi: f64| {
        c * (hi - lo) - (normal::cdf_integral(hi) - normal::cdf_integral(lo))
    };
    if c <= 0.0 {
        return -signed(a, b);
    }
    let t = if c >= 1.0 { f64::INFINITY } else { normal::quantile(c) };
    if t <= a {
        -signed(a, b)
    } else if t >= b {
        signed(a, b)
    } else {
        signed(a, t) - signed(t, b)
    }
}

/// Exact distances of a standardized integer-valued law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDistance {
    pub d_k: f64,
    pub d_w: f64,
    /// Largest probability of a single value; `d_K` cannot fall much below
    /// half of it for a lattice law.
    pub largest_atom: f64,
}

/// Distances of `(Z - mean) / sd` to the normal law, `Z` given by its pmf.
pub fn dk_exact_from_pmf(pmf: &[(f64, f64)], mean: f64, sd: f64) -> Result<ExactDistance> {
    if !(sd > 0.0) {
        return Err(Error::DegenerateCount(sd));
    }
    let law = DiscreteLaw::new(pmf.iter().copied())?.affine(mean, sd)?;
    Ok(ExactDistance {
        d_k: law.dk_normal(),
        d_w: law.dw_normal(),
        largest_atom: law.largest_atom(),
    })
}

/// One side-by-side inequality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        // the exact distances carry ~1e-12 rounding
        let slack = rhs - lhs;
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            slack,
            holds: slack >= -1e-12,
        }
    }
}

fn check_centred(law: &DiscreteLaw) -> Result<()> {
    let m = law.mean();
    if m.abs() > 1e-12 {
        return Err(Error::NotCentred(m));
    }
    Ok(())
}

/// For independent `X` and centred `Y`:
/// `d_W(X+Y) <= d_W(X) + Var(Y)^{1/2}` and `d_K(X+Y) <= d_K(X) + (4/3) Var(Y)^{1/3}`.
pub fn perturbation_checks(x: &DiscreteLaw, y: &DiscreteLaw) -> Result<[InequalityCheck; 2]> {
    check_centred(y)?;
    let sum = x.convolve(y);
    let vy = y.variance();
    Ok([
        InequalityCheck::new("wasserstein perturbation", sum.dw_normal(), x.dw_normal() + vy.sqrt()),
        InequalityCheck::new(
            "kolmogorov perturbation",
            sum.dk_normal(),
            x.dk_normal() + 4.0 / 3.0 * vy.cbrt(),
        ),
    ])
}

/// For independent centred `X`, `Y` with `Var X + Var Y = 1`:
/// `d_W(X+Y) <= d_W(X/sd X) + 2 Var(Y)^{1/2}` and the Kolmogorov analogue with 3.
pub fn normalized_pair_checks(x: &DiscreteLaw, y: &DiscreteLaw) -> Result<[InequalityCheck; 2]> {
    check_centred(x)?;
    check_centred(y)?;
    check_unit_total(&[x.variance(), y.variance()])?;
    let sum = x.convolve(y);
    let xn = x.normalized()?;
    let vy = y.variance();
    Ok([
        InequalityCheck::new("wasserstein normalized pair", sum.dw_normal(), xn.dw_normal() + 2.0 * vy.sqrt()),
        InequalityCheck::new("kolmogorov normalized pair", sum.dk_normal(), xn.dk_normal() + 3.0 * vy.cbrt()),
    ])
}

fn check_unit_total(vars: &[f64]) -> Result<()> {
    let total: f64 = vars.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange(format!("variances must sum to 1, got {total}")));
    }
    Ok(())
}

/// For independent centred `X_i` with variances summing to one:
/// `d_W(sum) <= 2 sum_i min(Var_i^{1/2}, d_W(X_i / sd_i))` and
/// `d_K(sum) <= 3 sum_i min(Var_i^{1/3}, d_K(X_i / sd_i))`.
pub fn independent_sum_checks(parts: &[DiscreteLaw]) -> Result<[InequalityCheck; 2]> {
    if parts.is_empty() {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    for p in parts {
        check_centred(p)?;
    }
    let vars: Vec<f64> = parts.iter().map(DiscreteLaw::variance).collect();
    check_unit_total(&vars)?;
    let sum = parts[1..].iter().fold(parts[0].clone(), |acc, p| acc.convolve(p));
    let mut rhs_w = 0.0;
    let mut rhs_k = 0.0;
    for (p, &v) in parts.iter().zip(&vars) {
        if v == 0.0 {
            continue;
        }
        let pn = p.normalized()?;
        rhs_w += v.sqrt().min(pn.dw_normal());
        rhs_k += v.cbrt().min(pn.dk_normal());
    }
    Ok([
        InequalityCheck::new("wasserstein independent sum", sum.dw_normal(), 2.0 * rhs_w),
        InequalityCheck::new("kolmogorov independent sum", sum.dk_normal(), 3.0 * rhs_k),
    ])
}

/// Runs every inequality over a fixed matrix of small discrete laws.
pub fn inequality_suite() -> Result<Vec<InequalityCheck>> {
    let coin = |p: f64| -> Result<DiscreteLaw> {
        // standardized Bernoulli(p)
        let sd = (p * (1.0 - p)).sqrt();
        DiscreteLaw::two_point(-p / sd, (1.0 - p) / sd, p)
    };
    let sym = |a: f64| DiscreteLaw::two_point(-a, a, 0.5);
    let scaled = |law: &DiscreteLaw, s: f64| law.affine(0.0, 1.0 / s);

    let mut checks = Vec::new();
    let xs = [coin(0.5)?, coin(0.2)?, coin(0.05)?, DiscreteLaw::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])?.normalized()?];
    let ys = [
        DiscreteLaw::point(0.0),
        sym(0.1)?,
        sym(0.5)?,
        sym(1.0)?,
        DiscreteLaw::new([(-0.3, 0.5), (0.1, 0.25), (0.5, 0.25)])?,
        coin(0.3)?.affine(0.0, 1.0 / 0.2)?,
    ];
    for x in &xs {
        for y in &ys {
            checks.extend(perturbation_checks(x, y)?);
        }
    }
    for &share in &[0.5f64, 0.9, 0.99] {
        for x in &xs {
            for y in &xs {
                checks.extend(normalized_pair_checks(
                    &scaled(x, share.sqrt())?,
                    &scaled(y, (1.0 - share).sqrt())?,
                )?);
            }
        }
    }
    for k in [2usize, 3, 5] {
        for base in &xs {
            let part = scaled(base, (1.0 / k as f64).sqrt())?;
            checks.extend(independent_sum_checks(&vec![part; k])?);
        }
        let mixed: Vec<DiscreteLaw> = (0..k)
            .map(|i| scaled(&xs[i % xs.len()], (1.0 / k as f64).sqrt()))
            .collect::<Result<_>>()?;
        checks.extend(independent_sum_checks(&mixed)?);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_kolmogorov_examples() {
        assert!((dk_empirical(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
        let v = dk_empirical(&[-1.0, 1.0]).unwrap();
        assert!((v - (normal::cdf(1.0) - 0.5)).abs() < 1e-12);
        assert!((v - 0.34134).abs() < 1e-5);
        assert!(matches!(dk_empirical(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn empirical_wasserstein_examples() {
        let m = 1000;
        let q: Vec<f64> = (0..m).map(|i| normal::quantile((i as f64 + 0.5) / m as f64)).collect();
        assert!(dw_empirical(&q).unwrap() < 1e-12);
        let zeros = vec![0.0; 1_000_000];
        let v = dw_empirical(&zeros).unwrap();
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-2);
        let shifted: Vec<f64> = q.iter().map(|x| x + 10.0).collect();
        assert!((dw_empirical(&shifted).unwrap() - 10.0).abs() < 1e-9);
        assert!(dw_empirical(&[]).is_err());
    }

    #[test]
    fn dkw_radius_shrinks() {
        assert!(dkw_radius(100, 0.01) > dkw_radius(1000, 0.01));
        assert!((dkw_radius(1, 0.5) - (4.0f64.ln() / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_examples() {
        let d = dk_exact_from_pmf(&[(0.0, 0.5), (1.0, 0.5)], 0.5, 0.5).unwrap();
        assert!((d.d_k - (0.5 - normal::cdf(-1.0))).abs() < 1e-12);
        let point = dk_exact_from_pmf(&[(3.0, 1.0)], 3.0, 1.0).unwrap();
        assert!((point.d_k - 0.5).abs() < 1e-15);
        assert!((point.d_w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!(dk_exact_from_pmf(&[(0.0, 1.0)], 0.0, 0.0).is_err());
    }

    #[test]
    fn exact_wasserstein_matches_numeric_integration() {
        let law = DiscreteLaw::new([(-1.2, 0.3), (0.1, 0.45), (2.0, 0.25)]).unwrap();
        let (lo, hi, steps) = (-12.0, 12.0, 2_400_000);
        let h = (hi - lo) / steps as f64;
        let cdf = |t: f64| law.atoms().iter().filter(|a| a.0 <= t).map(|a| a.1).sum::<f64>();
        let numeric: f64 = (0..steps)
            .map(|i| {
                let t = lo + (i as f64 + 0.5) * h;
                (cdf(t) - normal::cdf(t)).abs() * h
            })
            .sum();
        assert!((numeric - law.dw_normal()).abs() < 1e-5);
    }

    #[test]
    fn perturbation_by_zero_is_tight() {
        let x = DiscreteLaw::two_point(-1.0, 1.0, 0.5).unwrap();
        let [w, k] = perturbation_checks(&x, &DiscreteLaw::point(0.0)).unwrap();
        assert!(w.slack.abs() < 1e-14 && k.slack.abs() < 1e-14);
    }

    #[test]
    fn coin_perturbation_has_slack() {
        let x = DiscreteLaw::two_point(-1.0, 1.0, 0.5).unwrap();
        let y = DiscreteLaw::two_point(-0.1, 0.1, 0.5).unwrap();
        for c in perturbation_checks(&x, &y).unwrap() {
            assert!(c.holds && c.slack > 0.0, "{c:?}");
        }
        let off = DiscreteLaw::two_point(0.0, 1.0, 0.5).unwrap();
        assert!(matches!(perturbation_checks(&x, &off), Err(Error::NotCentred(_))));
    }

    #[test]
    fn two_bernoulli_sum() {
        let half = (0.5f64).sqrt();
        let b = DiscreteLaw::two_point(-half, half, 0.5).unwrap();
        let [w, k] = independent_sum_checks(&[b.clone(), b]).unwrap();
        assert!(w.holds && k.holds);
    }

    #[test]
    fn full_suite_holds() {
        let checks = inequality_suite().unwrap();
        assert!(checks.len() > 50);
        for c in checks {
            assert!(c.holds, "{c:?}");
        }
    }
}
