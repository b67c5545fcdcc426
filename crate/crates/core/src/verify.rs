//! Measurements behind the conversion guarantee: reconstruction residual,
//! latent discrepancy across parallel pairs, a sampled decoder Lipschitz
//! constant, the resulting error bound, and checks that the encoder is
//! injective per condition and condition-invariant across conditions.

use serde::Serialize;

use crate::dataset::FrameDataset;
use crate::error::{Error, Result};
use crate::genproc::{nearest_row, GenerativeSpec, ParallelPair};
use crate::icae::{Autoencoder, LabelScale};
use crate::numkit::{median, sq_dist, Rng};

pub const DEFAULT_DENOM_FLOOR: f64 = 1e-10;
pub const DEFAULT_LIPSCHITZ_PAIRS: usize = 1000;
pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;

/// A perfect model for a synthetic spec: the encoder inverts the generator
/// and emits a fixed increasing relabeling of the content index; the decoder
/// snaps back to the nearest label and condition row and regenerates.
#[derive(Debug, Clone)]
pub struct OracleModel<'a> {
    pub spec: &'a GenerativeSpec,
    pub relabel: LabelScale,
}

impl<'a> OracleModel<'a> {
    pub fn new(spec: &'a GenerativeSpec) -> Self {
        Self {
            spec,
            relabel: LabelScale::for_labels(spec.k_s),
        }
    }

    /// Smallest distance between two relabeled content values.
    pub fn relabel_gap(&self) -> f64 {
        self.relabel.scale
    }
}

impl Autoencoder for OracleModel<'_> {
    fn d_x(&self) -> usize {
        self.spec.d_x()
    }

    fn d_c(&self) -> usize {
        self.spec.d_c
    }

    fn d_latent(&self) -> usize {
        1
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (s, _) = self.spec.f_invert(x)?;
        Ok(vec![self.relabel.target(s as u32)])
    }

    fn decode(&self, s: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len("latent", s.len(), 1)?;
        crate::error::check_len("condition", c.len(), self.spec.d_c)?;
        let idx = self.relabel.inverse(s[0]).round().clamp(0.0, (self.spec.k_s - 1) as f64) as usize;
        let (cond, _) = nearest_row(&self.spec.cond_table, c);
        self.spec.observe(idx, cond)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub n: usize,
    /// Largest residual 2-norm.
    pub epsilon: f64,
    /// Largest squared residual norm.
    pub epsilon_sq: f64,
    pub median_sq: f64,
    #[serde(skip)]
    pub residual_norms: Vec<f64>,
}

/// Residuals `||d(e(x), c) - x||` over `(x, c)` items.
pub fn measure_reconstruction_on<'r, M, I>(model: &M, items: I) -> Result<ReconstructionReport>
where
    M: Autoencoder + ?Sized,
    I: IntoIterator<Item = (&'r [f64], &'r [f64])>,
{
    let mut residual_norms = Vec::new();
    for (x, c) in items {
        let x_hat = model.convert(x, c)?;
        residual_norms.push(sq_dist(&x_hat, x).sqrt());
    }
    if residual_norms.is_empty() {
        return Err(Error::Data("reconstruction needs at least one record".into()));
    }
    let epsilon = residual_norms.iter().copied().fold(0.0, f64::max);
    let squares: Vec<f64> = residual_norms.iter().map(|r| r * r).collect();
    Ok(ReconstructionReport {
        n: residual_norms.len(),
        epsilon,
        epsilon_sq: epsilon * epsilon,
        median_sq: median(&squares),
        residual_norms,
    })
}

pub fn measure_reconstruction<M: Autoencoder + ?Sized>(model: &M, ds: &FrameDataset) -> Result<ReconstructionReport> {
    measure_reconstruction_on(model, ds.records.iter().map(|r| (r.x.as_slice(), r.c.as_slice())))
}

/// Largest squared distance between the encodings of the two sides of a pair.
pub fn measure_latent_discrepancy<M: Autoencoder + ?Sized>(model: &M, pairs: &[ParallelPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("latent discrepancy needs at least one pair".into()));
    }
    let mut worst: f64 = 0.0;
    for p in pairs {
        worst = worst.max(sq_dist(&model.encode(&p.x_src)?, &model.encode(&p.x_tgt)?));
    }
    Ok(worst)
}

/// Two latents decoded under the same condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub lipschitz_hat: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Largest `||d(a, c) - d(b, c)||^2 / ||a - b||^2` over `n_pairs` random
/// latent pairs per condition plus every pair in `eval_pairs`. Pairs closer
/// than `denom_floor` in squared distance are skipped.
pub fn estimate_lipschitz<M: Autoencoder + ?Sized>(
    model: &M,
    latents: &[Vec<f64>],
    conditions: &[Vec<f64>],
    eval_pairs: &[LatentPair],
    n_pairs: usize,
    seed: u64,
    denom_floor: f64,
) -> Result<LipschitzEstimate> {
    if !(denom_floor > 0.0) {
        return Err(Error::Config(format!("denom_floor must be positive, got {denom_floor}")));
    }
    if latents.len() < 2 && eval_pairs.is_empty() {
        return Err(Error::Estimation("need at least two latent samples".into()));
    }
    let mut est = LipschitzEstimate {
        lipschitz_hat: 0.0,
        pairs_used: 0,
        pairs_skipped: 0,
    };
    let mut visit = |a: &[f64], b: &[f64], c: &[f64]| -> Result<()> {
        let denom = sq_dist(a, b);
        if denom < denom_floor {
            est.pairs_skipped += 1;
            return Ok(());
        }
        let num = sq_dist(&model.decode(a, c)?, &model.decode(b, c)?);
        est.lipschitz_hat = est.lipschitz_hat.max(num / denom);
        est.pairs_used += 1;
        Ok(())
    };
    if latents.len() >= 2 {
        let mut rng = Rng::new(seed);
        for c in conditions {
            for _ in 0..n_pairs {
                let i = rng.index(latents.len());
                let j = (i + 1 + rng.index(latents.len() - 1)) % latents.len();
                visit(&latents[i], &latents[j], c)?;
            }
        }
    }
    for p in eval_pairs {
        visit(&p.a, &p.b, &p.c)?;
    }
    if est.pairs_used == 0 {
        return Err(Error::Estimation(format!(
            "all {} latent pairs were closer than {denom_floor:e}",
            est.pairs_skipped
        )));
    }
    Ok(est)
}

/// `2 * (lipschitz * epsilon_prime + epsilon^2)`.
pub fn conversion_bound(lipschitz: f64, epsilon_prime: f64, epsilon: f64) -> f64 {
    2.0 * (lipschitz * epsilon_prime + epsilon * epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub n_pairs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub epsilon_sq: f64,
    pub epsilon_prime: f64,
    pub lipschitz_hat: f64,
    pub lipschitz_pairs_used: usize,
    pub lipschitz_pairs_skipped: usize,
    /// Bound with the residual norm squared.
    pub bound: f64,
    /// The same bound when the squared residual itself is taken as epsilon.
    pub bound_squared_epsilon: f64,
    pub holds_fraction: f64,
    pub holds_fraction_squared_epsilon: f64,
    pub median_conv_error: f64,
    pub max_conv_error: f64,
    pub median_recon_error: f64,
    pub median_baseline_error: f64,
    #[serde(skip)]
    pub conv_errors: Vec<f64>,
    #[serde(skip)]
    pub baseline_errors: Vec<f64>,
}

/// Measures every term of the conversion bound on `pairs` and checks it pair
/// by pair. The residual is measured on the target side, and the Lipschitz
/// pair set includes each pair's own encodings under its target condition.
pub fn check_error_bound<M: Autoencoder + ?Sized>(
    model: &M,
    pairs: &[ParallelPair],
    seed: u64,
) -> Result<ErrorBoundReport> {
    check_error_bound_with(model, pairs, seed, DEFAULT_LIPSCHITZ_PAIRS)
}

/// [`check_error_bound`] with `lipschitz_pairs` random latent pairs drawn per
/// target condition.
pub fn check_error_bound_with<M: Autoencoder + ?Sized>(
    model: &M,
    pairs: &[ParallelPair],
    seed: u64,
    lipschitz_pairs: usize,
) -> Result<ErrorBoundReport> {
    if pairs.is_empty() {
        return Err(Error::Data("error bound check needs at least one pair".into()));
    }
    let recon = measure_reconstruction_on(
        model,
        pairs.iter().map(|p| (p.x_tgt.as_slice(), p.c_tgt.as_slice())),
    )?;
    let mut eval_pairs = Vec::with_capacity(pairs.len());
    let mut latents = Vec::with_capacity(2 * pairs.len());
    let mut conditions: Vec<Vec<f64>> = Vec::new();
    let mut epsilon_prime: f64 = 0.0;
    let mut conv_errors = Vec::with_capacity(pairs.len());
    let mut baseline_errors = Vec::with_capacity(pairs.len());
    for p in pairs {
        let a = model.encode(&p.x_src)?;
        let b = model.encode(&p.x_tgt)?;
        epsilon_prime = epsilon_prime.max(sq_dist(&a, &b));
        conv_errors.push(sq_dist(&model.decode(&a, &p.c_tgt)?, &p.x_tgt));
        baseline_errors.push(sq_dist(&p.x_src, &p.x_tgt));
        if !conditions.contains(&p.c_tgt) {
            conditions.push(p.c_tgt.clone());
        }
        latents.push(a.clone());
        latents.push(b.clone());
        eval_pairs.push(LatentPair {
            a,
            b,
            c: p.c_tgt.clone(),
        });
    }
    let lip = estimate_lipschitz(
        model,
        &latents,
        &conditions,
        &eval_pairs,
        lipschitz_pairs,
        seed,
        DEFAULT_DENOM_FLOOR,
    )
    .or_else(|e| match e {
        // Every pair collapsed to one latent: the decoder term vanishes.
        Error::Estimation(_) => Ok(LipschitzEstimate {
            lipschitz_hat: 0.0,
            pairs_used: 0,
            pairs_skipped: eval_pairs.len(),
        }),
        other => Err(other),
    })?;
    let bound = conversion_bound(lip.lipschitz_hat, epsilon_prime, recon.epsilon);
    let bound_sq = conversion_bound(lip.lipschitz_hat, epsilon_prime, recon.epsilon_sq);
    let n = pairs.len() as f64;
    let holds = |b: f64| conv_errors.iter().filter(|&&e| e <= b).count() as f64 / n;
    let recon_sq: Vec<f64> = recon.residual_norms.iter().map(|r| r * r).collect();
    Ok(ErrorBoundReport {
        n_pairs: pairs.len(),
        seed,
        epsilon: recon.epsilon,
        epsilon_sq: recon.epsilon_sq,
        epsilon_prime,
        lipschitz_hat: lip.lipschitz_hat,
        lipschitz_pairs_used: lip.pairs_used,
        lipschitz_pairs_skipped: lip.pairs_skipped,
        bound,
        bound_squared_epsilon: bound_sq,
        holds_fraction: holds(bound),
        holds_fraction_squared_epsilon: holds(bound_sq),
        median_conv_error: median(&conv_errors),
        max_conv_error: conv_errors.iter().copied().fold(0.0, f64::max),
        median_recon_error: median(&recon_sq),
        median_baseline_error: median(&baseline_errors),
        conv_errors,
        baseline_errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub ref_cond: usize,
    pub margin_tol: f64,
    pub min_margin: f64,
    /// Content indices attaining `min_margin`.
    pub closest: (usize, usize),
    pub latents: Vec<Vec<f64>>,
    pub passed: bool,
}

/// Encodes every content value under `ref_cond` and reports the smallest
/// distance between two of the resulting latents.
pub fn check_injectivity<M: Autoencoder + ?Sized>(
    model: &M,
    spec: &GenerativeSpec,
    ref_cond: usize,
    margin_tol: f64,
) -> Result<InjectivityReport> {
    if ref_cond >= spec.k_c {
        return Err(Error::Config(format!(
            "reference condition {ref_cond} out of range for k_c = {}",
            spec.k_c
        )));
    }
    let latents = (0..spec.k_s)
        .map(|s| model.encode(&spec.observe(s, ref_cond)?))
        .collect::<Result<Vec<_>>>()?;
    let mut min_margin = f64::INFINITY;
    let mut closest = (0, 0);
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            let d = sq_dist(&latents[i], &latents[j]).sqrt();
            if d < min_margin {
                min_margin = d;
                closest = (i, j);
            }
        }
    }
    if latents.len() < 2 {
        min_margin = 0.0;
    }
    Ok(InjectivityReport {
        ref_cond,
        margin_tol,
        min_margin,
        closest,
        latents,
        passed: min_margin > margin_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TConsistencyReport {
    /// `latent_table[s][c]` is the encoding of content `s` under condition `c`.
    pub latent_table: Vec<Vec<Vec<f64>>>,
    /// Per content value, the largest distance between its encodings under
    /// two conditions.
    pub cross_cond_spread: Vec<f64>,
    /// Per content value, the distance from its condition-averaged encoding
    /// to the nearest other content value's.
    pub inter_s_gap: Vec<f64>,
    pub median_spread: f64,
    pub median_gap: f64,
    /// `median_spread / median_gap`; `None` when the median gap is zero.
    pub spread_ratio: Option<f64>,
}

impl TConsistencyReport {
    pub fn passes(&self, max_ratio: f64) -> bool {
        self.spread_ratio.is_some_and(|r| r <= max_ratio)
    }
}

pub fn check_t_consistency<M: Autoencoder + ?Sized>(model: &M, spec: &GenerativeSpec) -> Result<TConsistencyReport> {
    if spec.k_s < 2 {
        return Err(Error::Config("condition invariance needs at least two content values".into()));
    }
    let latent_table = (0..spec.k_s)
        .map(|s| {
            (0..spec.k_c)
                .map(|c| model.encode(&spec.observe(s, c)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cross_cond_spread: Vec<f64> = latent_table
        .iter()
        .map(|row| {
            let mut m: f64 = 0.0;
            for i in 0..row.len() {
                for j in i + 1..row.len() {
                    m = m.max(sq_dist(&row[i], &row[j]).sqrt());
                }
            }
            m
        })
        .collect();
    let centers: Vec<Vec<f64>> = latent_table
        .iter()
        .map(|row| {
            let mut mean = vec![0.0; row[0].len()];
            for v in row {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += x / row.len() as f64;
                }
            }
            mean
        })
        .collect();
    let inter_s_gap: Vec<f64> = (0..centers.len())
        .map(|s| {
            (0..centers.len())
                .filter(|&t| t != s)
                .map(|t| sq_dist(&centers[s], &centers[t]).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let median_spread = median(&cross_cond_spread);
    let median_gap = median(&inter_s_gap);
    Ok(TConsistencyReport {
        latent_table,
        spread_ratio: (median_gap > 0.0).then(|| median_spread / median_gap),
        cross_cond_spread,
        inter_s_gap,
        median_spread,
        median_gap,
    })
}

/// Mean silhouette coefficient of `points` under `labels` (Euclidean).
/// Points in singleton clusters contribute 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[u32]) -> Result<f64> {
    crate::error::check_len("labels", labels.len(), points.len())?;
    let k = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l as usize] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Estimation("silhouette needs at least two clusters".into()));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for (i, p) in points.iter().enumerate() {
        sums.fill(0.0);
        for (q, &l) in points.iter().zip(labels) {
            sums[l as usize] += sq_dist(p, q).sqrt();
        }
        let own = labels[i] as usize;
        if counts[own] < 2 {
            continue;
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&l| l != own && counts[l] > 0)
            .map(|l| sums[l] / counts[l] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genproc::{make_spec, Mixing};

    type EncodeFn = Box<dyn Fn(&[f64]) -> Vec<f64>>;
    type DecodeFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64>>;

    struct FnModel {
        dims: (usize, usize, usize),
        enc: EncodeFn,
        dec: DecodeFn,
    }

    impl Autoencoder for FnModel {
        fn d_x(&self) -> usize {
            self.dims.0
        }
        fn d_c(&self) -> usize {
            self.dims.1
        }
        fn d_latent(&self) -> usize {
            self.dims.2
        }
        fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok((self.enc)(x))
        }
        fn decode(&self, s: &[f64], c: &[f64]) -> Result<Vec<f64>> {
            Ok((self.dec)(s, c))
        }
    }

    fn scalar_decoder(f: impl Fn(f64) -> f64 + 'static) -> FnModel {
        FnModel {
            dims: (1, 1, 1),
            enc: Box::new(|x| x.to_vec()),
            dec: Box::new(move |s, _| vec![f(s[0])]),
        }
    }

    fn latents_1d(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64 * 0.37 - 1.0]).collect()
    }

    fn pair(x_src: Vec<f64>, x_tgt: Vec<f64>) -> ParallelPair {
        ParallelPair {
            x_src,
            x_tgt,
            c_src: vec![0.0],
            c_tgt: vec![1.0],
            cond_src: 0,
            cond_tgt: 1,
            shared_s: 0,
        }
    }

    fn spec() -> GenerativeSpec {
        make_spec(6, 3, 3, 2, Mixing::Affine, 17).unwrap()
    }

    #[test]
    fn residual_norm_hand_value() {
        let m = FnModel {
            dims: (2, 1, 1),
            enc: Box::new(|_| vec![0.0]),
            dec: Box::new(|_, _| vec![0.0, 0.0]),
        };
        let r = measure_reconstruction_on(&m, [([0.3, 0.4].as_slice(), [0.0].as_slice())]).unwrap();
        assert!((r.epsilon - 0.5).abs() < 1e-15);
        assert!((r.epsilon_sq - 0.25).abs() < 1e-15);
        assert_eq!(r.epsilon_sq, r.epsilon * r.epsilon);
        assert!(measure_reconstruction_on(&m, std::iter::empty()).is_err());
    }

    #[test]
    fn latent_discrepancy_hand_value_and_monotone() {
        let m = FnModel {
            dims: (1, 1, 1),
            enc: Box::new(|x| x.to_vec()),
            dec: Box::new(|s, _| s.to_vec()),
        };
        let mut pairs = vec![pair(vec![0.1], vec![0.3])];
        let one = measure_latent_discrepancy(&m, &pairs).unwrap();
        assert!((one - 0.04).abs() < 1e-15);
        pairs.push(pair(vec![0.0], vec![0.05]));
        assert!(measure_latent_discrepancy(&m, &pairs).unwrap() >= one);
        assert!(measure_latent_discrepancy(&m, &[]).is_err());
    }

    #[test]
    fn lipschitz_of_simple_decoders() {
        let lat = latents_1d(12);
        let conds = vec![vec![0.0], vec![1.0]];
        let est = |m: &FnModel| {
            estimate_lipschitz(m, &lat, &conds, &[], 50, 3, DEFAULT_DENOM_FLOOR)
                .unwrap()
                .lipschitz_hat
        };
        assert_eq!(est(&scalar_decoder(|_| 0.7)), 0.0);
        assert!((est(&scalar_decoder(|s| s)) - 1.0).abs() < 1e-12);
        assert!((est(&scalar_decoder(|s| 2.0 * s)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_degenerate_and_eval_pairs() {
        let m = scalar_decoder(|s| 3.0 * s);
        let same = vec![vec![0.5]; 4];
        assert!(matches!(
            estimate_lipschitz(&m, &same, &[vec![0.0]], &[], 10, 0, DEFAULT_DENOM_FLOOR),
            Err(Error::Estimation(_))
        ));
        let ev = [LatentPair {
            a: vec![0.0],
            b: vec![1.0],
            c: vec![0.0],
        }];
        let e = estimate_lipschitz(&m, &same, &[vec![0.0]], &ev, 10, 0, DEFAULT_DENOM_FLOOR).unwrap();
        assert!((e.lipschitz_hat - 9.0).abs() < 1e-12);
        assert_eq!(e.pairs_used, 1);
    }

    #[test]
    fn bound_formula() {
        assert!((conversion_bound(2.0, 0.01, 0.1) - 0.06).abs() < 1e-15);
    }

    #[test]
    fn oracle_collapses_every_report() {
        let spec = spec();
        let oracle = OracleModel::new(&spec);
        let ds = spec.sample_dataset(200, 1).unwrap();
        assert_eq!(measure_reconstruction(&oracle, &ds).unwrap().epsilon, 0.0);
        let pairs = spec.sample_pairs(100, 2).unwrap();
        assert_eq!(measure_latent_discrepancy(&oracle, &pairs).unwrap(), 0.0);
        let rep = check_error_bound(&oracle, &pairs, 3).unwrap();
        assert_eq!(rep.epsilon, 0.0);
        assert_eq!(rep.epsilon_prime, 0.0);
        assert!(rep.conv_errors.iter().all(|&e| e == 0.0));
        assert_eq!(rep.holds_fraction, 1.0);

        let inj = check_injectivity(&oracle, &spec, 0, DEFAULT_MARGIN_TOL).unwrap();
        assert!(inj.passed);
        assert!((inj.min_margin - oracle.relabel_gap()).abs() < 1e-15);

        let t = check_t_consistency(&oracle, &spec).unwrap();
        assert!(t.cross_cond_spread.iter().all(|&s| s == 0.0));
        assert_eq!(t.spread_ratio, Some(0.0));
        assert!(t.passes(0.25));
    }

    #[test]
    fn constant_encoder_fails_injectivity() {
        let spec = spec();
        let m = FnModel {
            dims: (5, 2, 1),
            enc: Box::new(|_| vec![0.25]),
            dec: Box::new(|_, _| vec![0.0; 5]),
        };
        let inj = check_injectivity(&m, &spec, 1, DEFAULT_MARGIN_TOL).unwrap();
        assert_eq!(inj.min_margin, 0.0);
        assert!(!inj.passed);
    }

    #[test]
    fn condition_leak_is_flagged() {
        let spec = spec();
        let leak_spec = spec.clone();
        let m = FnModel {
            dims: (5, 2, 1),
            enc: Box::new(move |x| {
                let (_, c) = leak_spec.f_invert(x).unwrap();
                vec![leak_spec.cond_table[c][0]]
            }),
            dec: Box::new(|_, _| vec![0.0; 5]),
        };
        let t = check_t_consistency(&m, &spec).unwrap();
        assert!(t.median_spread > 0.0);
        assert!(!t.passes(0.25));
        assert!(t.spread_ratio.is_none_or(|r| r > 1.0));
    }

    #[test]
    fn t_consistency_needs_two_values() {
        let mut spec = make_spec(2, 3, 2, 2, Mixing::Affine, 1).unwrap();
        spec.k_s = 1;
        let oracle = OracleModel::new(&spec);
        assert!(matches!(check_t_consistency(&oracle, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn bound_holds_for_a_perturbed_model() {
        // Encoder with a condition-dependent wobble and a decoder that is the
        // oracle plus a smooth distortion: every term of the bound is positive.
        let spec = spec();
        let s1 = spec.clone();
        let s2 = spec.clone();
        let m = FnModel {
            dims: (5, 2, 1),
            enc: Box::new(move |x| {
                let (s, c) = s1.f_invert(x).unwrap();
                vec![s as f64 + 0.05 * c as f64]
            }),
            dec: Box::new(move |z, c| {
                let s = z[0].round().clamp(0.0, 5.0) as usize;
                let (ci, _) = nearest_row(&s2.cond_table, c);
                let mut x = s2.f_apply(s, ci).unwrap();
                x[0] += 0.3 * z[0].sin();
                x
            }),
        };
        let pairs = spec.sample_pairs(200, 9).unwrap();
        let rep = check_error_bound(&m, &pairs, 4).unwrap();
        assert!(rep.epsilon > 0.0 && rep.epsilon_prime > 0.0 && rep.lipschitz_hat > 0.0);
        assert_eq!(rep.holds_fraction, 1.0, "{rep:?}");
    }

    #[test]
    fn silhouette_of_separated_and_mixed_clusters() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 10.0, 10.1, 10.2].iter().map(|&v| vec![v]).collect();
        let good = silhouette(&pts, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(good > 0.98);
        let bad = silhouette(&pts, &[0, 1, 0, 1, 0, 1]).unwrap();
        assert!(bad < 0.0);
        assert!(silhouette(&pts, &[0; 6]).is_err());
    }
}
