//! Kernel independence diagnostics: the biased empirical HSIC
//! `(n-1)^{-2} tr(K_a H K_b H)` and a permutation test around it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkit::{median, sq_dist, Rng};

/// Largest sample used for the median-distance bandwidth.
pub const MEDIAN_SUBSAMPLE_CAP: usize = 2000;
pub const MIN_PERMUTATIONS: usize = 99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Gaussian kernel `exp(-||a - b||^2 / (2 sigma^2))`; `None` selects the
    /// median pairwise distance.
    Rbf { bandwidth: Option<f64> },
    /// `1` if the samples are equal, else `0`. For categorical values.
    Delta,
}

impl Kernel {
    pub const MEDIAN_RBF: Kernel = Kernel::Rbf { bandwidth: None };
}

/// Kernel with its bandwidth resolved, as reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResolvedKernel {
    Rbf { sigma: f64 },
    Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub n: usize,
    pub values: Vec<f64>,
    pub kernel: ResolvedKernel,
}

impl Gram {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullSummary {
    pub q50: f64,
    pub q95: f64,
    pub q99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsicComputation {
    pub kernel_a: ResolvedKernel,
    pub kernel_b: ResolvedKernel,
    pub n: usize,
    pub statistic: f64,
    pub null_quantiles: Option<NullSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub n_perm: usize,
    pub seed: u64,
    pub kernel_a: ResolvedKernel,
    pub kernel_b: ResolvedKernel,
    pub null_quantiles: NullSummary,
}

/// Wraps category labels as one-dimensional samples for the delta kernel.
pub fn categorical(labels: &[u32]) -> Vec<Vec<f64>> {
    labels.iter().map(|&l| vec![f64::from(l)]).collect()
}

/// Median pairwise Euclidean distance, on a seeded subsample of at most
/// [`MEDIAN_SUBSAMPLE_CAP`] points.
pub fn median_bandwidth(samples: &[Vec<f64>], seed: u64) -> Result<f64> {
    let idx: Vec<usize> = if samples.len() > MEDIAN_SUBSAMPLE_CAP {
        let mut p = Rng::new(seed).permutation(samples.len());
        p.truncate(MEDIAN_SUBSAMPLE_CAP);
        p
    } else {
        (0..samples.len()).collect()
    };
    let mut dists = Vec::with_capacity(idx.len() * (idx.len().saturating_sub(1)) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push(sq_dist(&samples[i], &samples[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return Err(Error::Bandwidth("need at least two samples".into()));
    }
    let sigma = median(&dists);
    if !(sigma > 0.0) {
        return Err(Error::Bandwidth("median pairwise distance is zero".into()));
    }
    Ok(sigma)
}

pub fn gram_matrix(samples: &[Vec<f64>], kernel: Kernel, seed: u64) -> Result<Gram> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Data(format!("gram matrix needs n >= 2, got {n}")));
    }
    let mut values = vec![0.0; n * n];
    let resolved = match kernel {
        Kernel::Delta => {
            for i in 0..n {
                for j in i..n {
                    let v = if samples[i] == samples[j] { 1.0 } else { 0.0 };
                    values[i * n + j] = v;
                    values[j * n + i] = v;
                }
            }
            ResolvedKernel::Delta
        }
        Kernel::Rbf { bandwidth } => {
            let sigma = match bandwidth {
                Some(s) if s > 0.0 => s,
                Some(s) => return Err(Error::Bandwidth(format!("bandwidth must be positive, got {s}"))),
                None => median_bandwidth(samples, seed)?,
            };
            let scale = -1.0 / (2.0 * sigma * sigma);
            for i in 0..n {
                values[i * n + i] = 1.0;
                for j in i + 1..n {
                    let v = (sq_dist(&samples[i], &samples[j]) * scale).exp();
                    values[i * n + j] = v;
                    values[j * n + i] = v;
                }
            }
            ResolvedKernel::Rbf { sigma }
        }
    };
    Ok(Gram {
        n,
        values,
        kernel: resolved,
    })
}

/// `H K H` with `H = I - (1/n) 11^T`, computed from row and grand means.
fn center(gram: &Gram) -> Vec<f64> {
    let n = gram.n;
    let row_mean: Vec<f64> = (0..n)
        .map(|i| gram.values[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // K is symmetric, so column means equal row means.
            out[i * n + j] = gram.values[i * n + j] - row_mean[i] - row_mean[j] + grand;
        }
    }
    out
}

/// `sum_ij A_ij B_{p(i) p(j)}`, which equals `tr(A P B P^T)` for symmetric B.
fn permuted_inner(a: &[f64], b: &[f64], n: usize, perm: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let pi = perm[i];
        let arow = &a[i * n..(i + 1) * n];
        let brow = &b[pi * n..(pi + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            acc += arow[j] * brow[perm[j]];
        }
        total += acc;
    }
    total
}

fn check_counts(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Data(format!("sample counts differ: {a} vs {b}")));
    }
    if a < 2 {
        return Err(Error::Data(format!("HSIC needs n >= 2, got {a}")));
    }
    Ok(())
}

/// Biased HSIC estimate `(n-1)^{-2} tr(K_a H K_b H)`.
pub fn hsic(
    samples_a: &[Vec<f64>],
    samples_b: &[Vec<f64>],
    kernel_a: Kernel,
    kernel_b: Kernel,
    seed: u64,
) -> Result<HsicComputation> {
    check_counts(samples_a.len(), samples_b.len())?;
    let ga = gram_matrix(samples_a, kernel_a, seed)?;
    let gb = gram_matrix(samples_b, kernel_b, seed)?;
    let n = ga.n;
    let identity: Vec<usize> = (0..n).collect();
    let statistic = permuted_inner(&center(&ga), &center(&gb), n, &identity) / ((n - 1) as f64).powi(2);
    Ok(HsicComputation {
        kernel_a: ga.kernel,
        kernel_b: gb.kernel,
        n,
        statistic,
        null_quantiles: None,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Permutation test: `p = (1 + #{permuted >= observed}) / (n_perm + 1)`,
/// permuting `samples_b` with a seeded RNG.
pub fn hsic_permutation_test(
    samples_a: &[Vec<f64>],
    samples_b: &[Vec<f64>],
    kernel_a: Kernel,
    kernel_b: Kernel,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationTest> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::Config(format!(
            "n_perm must be >= {MIN_PERMUTATIONS}, got {n_perm}"
        )));
    }
    check_counts(samples_a.len(), samples_b.len())?;
    let ga = gram_matrix(samples_a, kernel_a, seed)?;
    let gb = gram_matrix(samples_b, kernel_b, seed)?;
    let n = ga.n;
    let (ca, cb) = (center(&ga), center(&gb));
    let norm = ((n - 1) as f64).powi(2);
    let mut perm: Vec<usize> = (0..n).collect();
    let observed = permuted_inner(&ca, &cb, n, &perm) / norm;

    let mut rng = Rng::new(seed);
    let mut null = Vec::with_capacity(n_perm);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        rng.shuffle(&mut perm);
        let stat = permuted_inner(&ca, &cb, n, &perm) / norm;
        if stat >= observed {
            exceed += 1;
        }
        null.push(stat);
    }
    null.sort_by(f64::total_cmp);
    Ok(PermutationTest {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (n_perm + 1) as f64,
        n,
        n_perm,
        seed,
        kernel_a: ga.kernel,
        kernel_b: gb.kernel,
        null_quantiles: NullSummary {
            q50: quantile(&null, 0.5),
            q95: quantile(&null, 0.95),
            q99: quantile(&null, 0.99),
            max: *null.last().unwrap(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight-line `(n-1)^{-2} tr(K_a H K_b H)` with explicit products.
    fn hsic_by_matrix_products(ka: &[Vec<f64>], kb: &[Vec<f64>]) -> f64 {
        let n = ka.len();
        let h: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - 1.0 / n as f64).collect())
            .collect();
        let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
                .collect()
        };
        let m = mul(&mul(&mul(ka, &h), kb), &h);
        (0..n).map(|i| m[i][i]).sum::<f64>() / ((n - 1) as f64).powi(2)
    }

    fn as_rows(g: &Gram) -> Vec<Vec<f64>> {
        (0..g.n).map(|i| g.values[i * g.n..(i + 1) * g.n].to_vec()).collect()
    }

    #[test]
    fn delta_gram_on_labels() {
        let g = gram_matrix(&categorical(&[1, 1, 2]), Kernel::Delta, 0).unwrap();
        assert_eq!(as_rows(&g), vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn rbf_values() {
        let g = gram_matrix(&[vec![0.0], vec![1.0]], Kernel::Rbf { bandwidth: Some(1.0) }, 0).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert!((g.get(0, 1) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g.get(0, 1) - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn median_heuristic_rejects_identical_samples() {
        let s = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(gram_matrix(&s, Kernel::MEDIAN_RBF, 0), Err(Error::Bandwidth(_))));
    }

    #[test]
    fn constant_variable_gives_zero() {
        let a = categorical(&[0, 1, 2, 1, 0]);
        let b = categorical(&[3, 3, 3, 3, 3]);
        let h = hsic(&a, &b, Kernel::Delta, Kernel::Delta, 0).unwrap();
        assert!(h.statistic.abs() < 1e-15);
    }

    #[test]
    fn two_by_two_matches_matrix_products() {
        // K = I for both; H K H = H and tr(H H) = tr(H) = 1, normalized by (n-1)^2 = 1.
        let a = categorical(&[0, 1]);
        let h = hsic(&a, &a, Kernel::Delta, Kernel::Delta, 0).unwrap();
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let oracle = hsic_by_matrix_products(&eye, &eye);
        assert!((oracle - 1.0).abs() < 1e-15);
        assert!((h.statistic - oracle).abs() < 1e-15);
    }

    #[test]
    fn random_cases_match_matrix_products() {
        let mut rng = Rng::new(4);
        for _ in 0..5 {
            let a: Vec<Vec<f64>> = (0..9).map(|_| vec![rng.normal(), rng.normal()]).collect();
            let b: Vec<Vec<f64>> = (0..9).map(|_| vec![rng.index(3) as f64]).collect();
            let ka = gram_matrix(&a, Kernel::MEDIAN_RBF, 0).unwrap();
            let kb = gram_matrix(&b, Kernel::Delta, 0).unwrap();
            let want = hsic_by_matrix_products(&as_rows(&ka), &as_rows(&kb));
            let got = hsic(&a, &b, Kernel::MEDIAN_RBF, Kernel::Delta, 0).unwrap().statistic;
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn self_dependence_is_frobenius_norm() {
        let a: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let k = Kernel::Rbf { bandwidth: Some(0.5) };
        let h = hsic(&a, &a, k, k, 0).unwrap().statistic;
        let c = center(&gram_matrix(&a, k, 0).unwrap());
        let fro: f64 = c.iter().map(|v| v * v).sum::<f64>() / 121.0;
        assert!((h - fro).abs() < 1e-12);
        assert!(h > 0.0);
    }

    #[test]
    fn permutation_test_extreme_case() {
        let labels: Vec<u32> = (0..200).map(|i| i % 4).collect();
        let a = categorical(&labels);
        let t = hsic_permutation_test(&a, &a, Kernel::Delta, Kernel::Delta, 99, 5).unwrap();
        assert_eq!(t.p_value, 1.0 / 100.0);
        assert!(t.statistic > t.null_quantiles.max);
    }

    #[test]
    fn permutation_test_requires_enough_permutations() {
        let a = categorical(&[0, 1, 0, 1]);
        assert!(hsic_permutation_test(&a, &a, Kernel::Delta, Kernel::Delta, 10, 0).is_err());
    }

    #[test]
    fn mismatched_counts() {
        let a = categorical(&[0, 1, 0]);
        let b = categorical(&[0, 1]);
        assert!(matches!(hsic(&a, &b, Kernel::Delta, Kernel::Delta, 0), Err(Error::Data(_))));
    }
}
