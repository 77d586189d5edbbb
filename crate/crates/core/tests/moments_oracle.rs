use hypercount::moments::{fourth_central_exact, mean_exact, variance_exact, CentralMoments, Guards};
use hypercount::oracle::{pmf_oracle, Pmf};
use hypercount::{EdgeProb, Pattern, ProbabilitySpec};
use num_rational::BigRational;

const CORPUS: [&str; 7] = ["edge", "loop", "2-path", "triangle", "loop-pair", "3-edge", "diamond"];

fn spec_for(p: &Pattern, prob: &str) -> ProbabilitySpec {
    ProbabilitySpec::homogeneous(&p.distinct_sizes(), prob).unwrap()
}

fn assert_exact_match(p: &Pattern, n: usize, spec: &ProbabilitySpec) {
    let g = Guards::default();
    let pmf: Pmf<BigRational> = pmf_oracle(p, n, spec, &g).unwrap();
    let m: CentralMoments<BigRational> = fourth_central_exact(p, n, spec, &g).unwrap();
    let mean: BigRational = mean_exact(p, n, spec).unwrap();
    let var: BigRational = variance_exact(p, n, spec, &g).unwrap();
    let ctx = format!("{} n={n} {}", p.label(), spec.summary());
    assert_eq!(mean, pmf.mean(), "mean {ctx}");
    assert_eq!(var, pmf.central_moment(2), "variance {ctx}");
    assert_eq!(m.variance, var, "variance {ctx}");
    assert_eq!(m.fourth_central, pmf.central_moment(4), "fourth {ctx}");
}

#[test]
fn rational_formulas_equal_oracle_on_corpus() {
    for name in CORPUS {
        let p = Pattern::named(name).unwrap();
        for n in 3..=6 {
            for prob in ["0.2", "0.5", "0.8"] {
                assert_exact_match(&p, n, &spec_for(&p, prob));
            }
        }
    }
}

#[test]
fn inhomogeneous_loop_pair() {
    let p = Pattern::named("loop-pair").unwrap();
    for n in 2..=6 {
        for (a, b) in [("0.2", "0.7"), ("0.9", "0.3"), ("0.55", "0.05")] {
            let spec = ProbabilitySpec::new()
                .with(1, EdgeProb::from_exact_p(hypercount::prob::parse_decimal(a).unwrap()).unwrap())
                .with(2, EdgeProb::from_exact_p(hypercount::prob::parse_decimal(b).unwrap()).unwrap());
            assert_exact_match(&p, n, &spec);
        }
    }
}

#[test]
fn float_formulas_track_oracle() {
    let g = Guards::default();
    for name in CORPUS {
        let p = Pattern::named(name).unwrap();
        for n in 3..=6 {
            for prob in [0.2, 0.5, 0.8] {
                let spec = ProbabilitySpec::homogeneous_f64(&p.distinct_sizes(), prob).unwrap();
                let pmf: Pmf<f64> = pmf_oracle(&p, n, &spec, &g).unwrap();
                let m: CentralMoments<f64> = fourth_central_exact(&p, n, &spec, &g).unwrap();
                let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
                assert!(rel(m.mean, pmf.mean()) < 1e-10);
                assert!(rel(m.variance, pmf.central_moment(2)) < 1e-10);
                assert!(
                    rel(m.fourth_central, pmf.central_moment(4)) < 1e-10,
                    "{name} n={n} p={prob}: {} vs {}",
                    m.fourth_central,
                    pmf.central_moment(4)
                );
            }
        }
    }
}
