use hypercount::copies::{count_copies_total, EdgeUniverse, IndexedCopies};
use hypercount::moments::{mean_exact, variance_exact, Guards};
use hypercount::oracle::{pmf_oracle, pmf_oracle_over, Pmf};
use hypercount::sim::{count_in_sample, replication_rng, sample_relevant_edges, simulate_z, standardize, Realization};
use hypercount::{EdgeProb, Pattern, ProbabilitySpec};
use num_rational::BigRational;

fn named(s: &str) -> Pattern {
    Pattern::named(s).unwrap()
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap().install(f)
}

#[test]
fn batches_do_not_depend_on_worker_count() {
    let p = named("2-path");
    let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.3).unwrap();
    let one = in_pool(1, || simulate_z(&p, 7, &spec, 5000, 41).unwrap());
    let eight = in_pool(8, || simulate_z(&p, 7, &spec, 5000, 41).unwrap());
    assert_eq!(one.values, eight.values);
    let single = simulate_z(&p, 7, &spec, 1, 41).unwrap();
    assert_eq!(single.values[0], one.values[0]);
    assert_ne!(simulate_z(&p, 7, &spec, 5000, 42).unwrap().values, one.values);
}

#[test]
fn edge_count_mean_at_half() {
    let p = named("edge");
    let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.5).unwrap();
    let m = 100_000;
    let batch = simulate_z(&p, 4, &spec, m, 5).unwrap();
    let sd = (6.0f64 * 0.25).sqrt();
    assert!((batch.mean() - 3.0).abs() <= 4.0 * sd / (m as f64).sqrt(), "{}", batch.mean());
}

#[test]
fn triangle_mean_and_edge_variance() {
    let m = 100_000;
    let tri = named("triangle");
    let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.5).unwrap();
    let batch = simulate_z(&tri, 6, &spec, m, 8).unwrap();
    let se = batch.variance().sqrt() / (m as f64).sqrt();
    assert!((batch.mean() - 2.5).abs() <= 4.0 * se, "{}", batch.mean());

    let edge = named("edge");
    let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.3).unwrap();
    let var = simulate_z(&edge, 5, &spec, m, 9).unwrap().variance();
    assert!((var / 2.1 - 1.0).abs() < 0.05, "{var}");
}

#[test]
fn sample_means_are_unbiased_over_the_matrix() {
    let g = Guards::default();
    let m = 20_000;
    for name in ["edge", "loop", "2-path", "triangle", "loop-pair", "3-edge", "diamond"] {
        let p = named(name);
        for prob in [0.1, 0.5, 0.9] {
            let spec = ProbabilitySpec::homogeneous_f64(&p.distinct_sizes(), prob).unwrap();
            let n = p.vertex_count() + 2;
            let mean: f64 = mean_exact(&p, n, &spec).unwrap();
            let sd = variance_exact::<f64>(&p, n, &spec, &g).unwrap().sqrt();
            let got = simulate_z(&p, n, &spec, m, 77).unwrap().mean();
            assert!((got - mean).abs() <= 4.0 * sd / (m as f64).sqrt(), "{name} p={prob}: {got} vs {mean}");
        }
    }
}

#[test]
fn extreme_probabilities() {
    let universe = EdgeUniverse::new(4, &[2]).unwrap();
    let dense = ProbabilitySpec::new().with(2, EdgeProb::from_q(1e-12).unwrap());
    let sparse = ProbabilitySpec::homogeneous_f64(&[2], 1e-12).unwrap();
    for rep in 0..100 {
        assert_eq!(sample_relevant_edges(&universe, &dense, &mut replication_rng(1, rep)).unwrap().len(), 6);
        assert!(sample_relevant_edges(&universe, &sparse, &mut replication_rng(1, rep)).unwrap().is_empty());
    }
    let missing = ProbabilitySpec::homogeneous_f64(&[3], 0.5).unwrap();
    assert!(sample_relevant_edges(&universe, &missing, &mut replication_rng(1, 0)).is_err());
}

#[test]
fn counts_in_fixed_realizations() {
    for name in ["triangle", "loop-pair", "diamond"] {
        let p = named(name);
        let copies = IndexedCopies::new(&p, 6).unwrap();
        let full = Realization::full(&copies.universe);
        assert_eq!(count_in_sample(&copies, &full) as u128, count_copies_total(&p, 6));
        assert_eq!(count_in_sample(&copies, &Realization::empty(&copies.universe)), 0);
    }
    let tri = IndexedCopies::new(&named("triangle"), 4).unwrap();
    let realized = Realization::from_edges(&tri.universe, &[0b0011, 0b0101, 0b0110, 0b1001]);
    assert_eq!(count_in_sample(&tri, &realized), 1);
}

#[test]
fn standardized_batch_has_unit_moments() {
    let p = named("triangle");
    let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.5).unwrap();
    let mean: f64 = mean_exact(&p, 7, &spec).unwrap();
    let sd = variance_exact::<f64>(&p, 7, &spec, &Guards::default()).unwrap().sqrt();
    let m = 50_000;
    let z = standardize(&simulate_z(&p, 7, &spec, m, 3).unwrap().values, mean, sd).unwrap();
    let zm = z.iter().sum::<f64>() / m as f64;
    let zv = z.iter().map(|x| (x - zm).powi(2)).sum::<f64>() / (m - 1) as f64;
    assert!(zm.abs() < 4.0 / (m as f64).sqrt(), "{zm}");
    assert!((zv - 1.0).abs() < 0.05, "{zv}");
    assert!(standardize(&[1, 2], 1.0, 0.0).is_err());
}

#[test]
fn unused_sizes_do_not_change_the_law() {
    let g = Guards::default();
    for (name, extra) in [("edge", vec![1]), ("loop", vec![2]), ("2-path", vec![1, 3]), ("triangle", vec![1])] {
        let p = named(name);
        let mut spec = ProbabilitySpec::homogeneous(&p.distinct_sizes(), "0.3").unwrap();
        for &k in &extra {
            spec.set(k, EdgeProb::from_exact_p(BigRational::new(2.into(), 5.into())).unwrap());
        }
        for n in p.vertex_count().max(2)..=4 {
            let relevant: Pmf<BigRational> = pmf_oracle(&p, n, &spec, &g).unwrap();
            let full: Pmf<BigRational> = pmf_oracle_over(&p, n, &spec, &extra, &g).unwrap();
            assert_eq!(relevant, full, "{name} n={n}");
        }
    }
}
