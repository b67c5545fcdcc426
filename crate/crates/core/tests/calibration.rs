use icae_core::genproc::{make_spec, Mixing};
use icae_core::indep::{categorical, hsic_permutation_test, Kernel};
use icae_core::numkit::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn labels(n: usize, k: usize, rng: &mut Rng) -> Vec<u32> {
    (0..n).map(|_| rng.index(k) as u32).collect()
}

#[test]
fn permutation_test_is_calibrated_under_independence() {
    let mut accepted = 0;
    for trial in 0..100u64 {
        let mut rng = Rng::new(1000 + trial);
        let a = categorical(&labels(500, 4, &mut rng));
        let b = categorical(&labels(500, 3, &mut rng));
        let t = hsic_permutation_test(&a, &b, Kernel::Delta, Kernel::Delta, 199, trial).unwrap();
        if t.p_value > 0.05 {
            accepted += 1;
        }
    }
    assert!(accepted >= 90, "only {accepted} of 100 trials had p > 0.05");
}

#[test]
fn permutation_test_detects_identity_dependence() {
    for trial in 0..100u64 {
        let mut rng = Rng::new(5000 + trial);
        let a = categorical(&labels(500, 5, &mut rng));
        let t = hsic_permutation_test(&a, &a, Kernel::Delta, Kernel::Delta, 199, trial).unwrap();
        assert_eq!(t.p_value, 1.0 / 200.0, "trial {trial}");
    }
}

#[test]
fn sampled_content_and_condition_are_independent() {
    let (k_s, k_c, n) = (6, 4, 20_000);
    let spec = make_spec(k_s, k_c, 3, 2, Mixing::Affine, 77).unwrap();
    let ds = spec.sample_dataset(n, 78).unwrap();
    let mut table = vec![vec![0.0f64; k_c]; k_s];
    for r in &ds.records {
        table[r.true_s.unwrap() as usize][r.cond_id.unwrap() as usize] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k_c).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..k_s {
        for j in 0..k_c {
            let expected = rows[i] * cols[j] / n as f64;
            chi2 += (table[i][j] - expected).powi(2) / expected;
        }
    }
    let dof = ((k_s - 1) * (k_c - 1)) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}
