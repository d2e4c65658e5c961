//! Cross-module invariants: the sampler against the enumeration oracle, the
//! closed-form moments against brute force, and structural inequalities that
//! must hold for every distribution and pattern.

use std::collections::HashMap;

use rand::rngs::SmallRng;
use rand::SeedableRng;

use gwforest::census::{self, CountMode};
use gwforest::exact;
use gwforest::offspring::OffspringDistribution;
use gwforest::oracle;
use gwforest::sampler::{self, SampleConfig};
use gwforest::tree::{self, PlaneTree};

fn dist(name: &str) -> OffspringDistribution {
    OffspringDistribution::builtin(name, 1e-15).unwrap()
}

#[test]
fn sampler_matches_oracle_law() {
    // Light-weight version of the exactness check: 30k draws at n = 6.
    for name in ["plane", "motzkin", "labeled"] {
        let d = dist(name);
        let law = oracle::exact_conditional_distribution(&d, 6).unwrap();
        let cfg = SampleConfig::new(6, 99);
        let mut rng = SmallRng::seed_from_u64(99);
        let mut counts: HashMap<PlaneTree, u64> = HashMap::new();
        let total = 30_000u64;
        for _ in 0..total {
            let t = sampler::sample_conditional(&d, &cfg, &mut rng).unwrap();
            *counts.entry(t).or_insert(0) += 1;
        }
        let tv = law.tv_to_empirical(&counts, total);
        assert!(tv < 0.03, "{name}: TV {tv}");
    }
}

#[test]
fn closed_form_moments_match_oracle() {
    // Spot check (the full grid runs in the acceptance suite): motzkin n = 8,
    // every pattern of size <= 3.
    let d = dist("motzkin");
    let n = 8usize;
    for k in 1..=3usize {
        for pattern in tree::enumerate_trees(k).unwrap() {
            let fringe = oracle::exact_count_pmf(&d, n, &pattern, CountMode::Fringe).unwrap();
            let ef = exact::expected_fringe_count(&d, n as u64, &pattern).unwrap();
            assert!(
                (ef - fringe.mean).abs() <= 1e-10 * fringe.mean.max(1.0),
                "fringe mean {pattern}: {ef} vs {}",
                fringe.mean
            );
            let nf = oracle::exact_count_pmf(&d, n, &pattern, CountMode::Nonfringe).unwrap();
            let enf = exact::expected_nonfringe_count(&d, n as u64, &pattern).unwrap();
            assert!(
                (enf - nf.mean).abs() <= 1e-10 * nf.mean.max(1.0),
                "nonfringe mean {pattern}: {enf} vs {}",
                nf.mean
            );
            let m = exact::second_factorial_nonfringe(&d, n as u64, &pattern).unwrap();
            assert!(
                (m.second_factorial - nf.second_factorial).abs()
                    <= 1e-10 * nf.second_factorial.max(1.0),
                "fm2 {pattern}: {} vs {}",
                m.second_factorial,
                nf.second_factorial
            );
        }
    }
}

#[test]
fn nonfringe_probability_dominates_fringe() {
    for name in ["plane", "motzkin", "full-binary", "labeled", "d-ary(3)"] {
        let d = dist(name);
        for k in 1..=6usize {
            for t in tree::enumerate_trees(k).unwrap() {
                let pi = exact::prob_tree(&d, &t);
                let pi_nf = exact::prob_nonfringe_root(&d, &t);
                assert!(
                    pi_nf >= pi - 1e-18,
                    "{name} {t}: pi^nf {pi_nf} < pi {pi}"
                );
            }
        }
    }
}

#[test]
fn nonfringe_count_dominates_fringe_count_on_sampled_trees() {
    let d = dist("motzkin");
    let cfg = SampleConfig::new(200, 5);
    let mut rng = SmallRng::seed_from_u64(5);
    let patterns: Vec<PlaneTree> = (1..=4usize)
        .flat_map(|k| tree::enumerate_trees(k).unwrap())
        .collect();
    for _ in 0..50 {
        let host = sampler::sample_conditional(&d, &cfg, &mut rng).unwrap();
        for p in &patterns {
            assert!(census::count_nonfringe(&host, p) >= census::count_fringe(&host, p));
        }
    }
}

#[test]
fn pmin_is_the_enumerated_minimum() {
    for name in ["plane", "d-ary(3)"] {
        let d = dist(name);
        for k in 2..=8usize {
            let r = exact::pmin(&d, k).unwrap();
            let brute = (1..=k)
                .flat_map(|s| tree::enumerate_possible_exact(&d, s).unwrap())
                .map(|t| exact::prob_tree(&d, &t))
                .filter(|&p| p > 0.0)
                .fold(f64::INFINITY, f64::min);
            assert!(
                (r.prob - brute).abs() <= 1e-12 * brute,
                "{name} k={k}: {} vs {brute}",
                r.prob
            );
            assert!(r.tree.size() <= k);
            let witness = exact::prob_tree(&d, &r.tree);
            assert!((witness - r.prob).abs() <= 1e-12 * brute);
        }
    }
}

#[test]
fn size_correction_ratio_stays_bounded() {
    // The finite-n correction E N_T / (n π(T)) equals a ratio of point
    // probabilities of random-walk sums; it must stay bounded by a small
    // constant for patterns up to size 100 at n = 10^4.
    for name in ["plane", "motzkin"] {
        let d = dist(name);
        let n = 10_000u64;
        for k in (1..=100u32).step_by(9) {
            let chain = PlaneTree::chain(k - 1);
            let e = exact::expected_fringe_count(&d, n, &chain).unwrap();
            let pi = exact::prob_tree(&d, &chain);
            let ratio = e / (n as f64 * pi);
            assert!(
                ratio > 0.9 && ratio < 10.0,
                "{name} k={k}: ratio {ratio}"
            );
        }
    }
}

#[test]
fn second_factorial_variance_is_nonnegative() {
    for name in ["plane", "motzkin", "full-binary"] {
        let d = dist(name);
        for k in 1..=5usize {
            for pattern in tree::enumerate_possible_exact(&d, k).unwrap() {
                for n in [20u64, 41, 101] {
                    let n = n - (n - 1) % d.span() as u64; // align to span
                    let m = exact::second_factorial_nonfringe(&d, n, &pattern).unwrap();
                    assert!(
                        m.variance >= -1e-9 * m.mean.max(1.0),
                        "{name} {pattern} n={n}: variance {}",
                        m.variance
                    );
                }
            }
        }
    }
}

#[test]
fn switching_preserves_size_and_validity() {
    let d = dist("plane");
    let cfg = SampleConfig::new(64, 11);
    let mut rng = SmallRng::seed_from_u64(11);
    for _ in 0..200 {
        let t1 = sampler::sample_conditional(&d, &cfg, &mut rng).unwrap();
        let t2 = sampler::sample_conditional(&d, &cfg, &mut rng).unwrap();
        let switched = sampler::switch_random_fringe(&t1, &t2, 3, &mut rng);
        assert_eq!(switched.size(), 64);
        assert!(tree::validate(switched.degrees()));
    }
}
