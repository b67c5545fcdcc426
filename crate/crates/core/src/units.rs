//! Discrete proxy units: k-means fitted on one reference condition and
//! applied to every record, plus the prior-asymmetry audit over the
//! resulting label histogram.

use serde::Serialize;

use crate::codec::{ByteReader, ByteWriter};
use crate::dataset::FrameDataset;
use crate::error::{check_len, Error, Result};
use crate::numkit::{round_f32, sq_dist, Rng};

pub const UNITS_MAGIC: &[u8; 4] = b"ICAU";
pub const UNITS_VERSION: u16 = 1;

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_UNITS: usize = 100;

/// Outcome of [`kmeans_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step, ending with
    /// the assignment to the final centroids.
    pub inertia_trace: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    /// True when no trace entry exceeds its predecessor by more than
    /// round-off.
    pub fn is_monotone(&self) -> bool {
        self.inertia_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
    }
}

pub fn inertia(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<()> {
    if let Some(i) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::Shape(format!(
            "point {i} has dimension {}, expected {dim}",
            points[i].len()
        )));
    }
    Ok(())
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
pub fn kmeans_assign(centroids: &[Vec<f64>], points: &[Vec<f64>]) -> Result<Vec<usize>> {
    let dim = centroids
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Config("no centroids".into()))?;
    check_dims(centroids, dim)?;
    check_dims(points, dim)?;
    Ok(points.iter().map(|p| nearest(centroids, p).0).collect())
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding: first center uniform, the rest drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.index(points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = points[rng.weighted_index(&d2)].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

/// Lloyd's algorithm from a k-means++ start. Stops once the largest centroid
/// move drops below `tol` or after `max_iters` rounds. An empty cluster is
/// moved onto the point farthest from its current centroid.
pub fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::Config(format!(
            "k-means needs at least k = {k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    check_dims(points, dim)?;
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite point".into()));
    }

    let mut rng = Rng::new(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = points.iter().map(|p| nearest(&centroids, p)).collect();
        trace.push(assigned.iter().map(|a| a.1).sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &(l, _)) in points.iter().zip(&assigned) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();

        let mut taken = vec![false; points.len()];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = assigned
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .fold(None::<(usize, f64)>, |best, (i, a)| match best {
                    Some((_, d)) if d >= a.1 => best,
                    _ => Some((i, a.1)),
                });
            if let Some((i, _)) = far {
                taken[i] = true;
                next[j] = points[i].clone();
            }
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < tol {
            converged = true;
            break;
        }
    }

    let labels = kmeans_assign(&centroids, points)?;
    let final_inertia = inertia(points, &centroids, &labels);
    trace.push(final_inertia);
    Ok(KMeansFit {
        centroids,
        labels,
        inertia_trace: trace,
        inertia: final_inertia,
        iterations,
        converged,
    })
}

/// How the reference condition for fitting is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefCondPolicy {
    /// The condition with the most records; ties go to the lowest id.
    #[default]
    MostRecords,
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub ref_cond: u32,
    pub prior_hist: Vec<f64>,
    pub dist_matrix: Vec<Vec<f64>>,
}

/// `D_ij = |p_i - p_j|^{1/2}`.
pub fn distance_matrix(prior: &[f64]) -> Vec<Vec<f64>> {
    prior
        .iter()
        .map(|pi| prior.iter().map(|pj| (pi - pj).abs().sqrt()).collect())
        .collect()
}

/// Label frequencies `count(label = k) / N`.
pub fn label_histogram(labels: &[u32], k: usize) -> Vec<f64> {
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / labels.len() as f64)
        .collect()
}

impl UnitModel {
    pub fn new(centroids: Vec<Vec<f64>>, ref_cond: u32, prior_hist: Vec<f64>) -> Result<Self> {
        let k = centroids.len();
        check_len("prior histogram", prior_hist.len(), k)?;
        let total: f64 = prior_hist.iter().sum();
        if (total - 1.0).abs() > 1e-12 || prior_hist.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Data(format!(
                "prior histogram must be non-negative and sum to 1, sums to {total}"
            )));
        }
        let dist_matrix = distance_matrix(&prior_hist);
        Ok(Self {
            k,
            centroids,
            ref_cond,
            prior_hist,
            dist_matrix,
        })
    }

    pub fn d_x(&self) -> usize {
        self.centroids.first().map(Vec::len).unwrap_or(0)
    }

    pub fn assign(&self, points: &[Vec<f64>]) -> Result<Vec<usize>> {
        kmeans_assign(&self.centroids, points)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(UNITS_MAGIC);
        w.u16(UNITS_VERSION);
        w.u32(self.k as u32);
        w.u32(self.d_x() as u32);
        w.u32(self.ref_cond);
        for c in &self.centroids {
            w.f32_slice(c);
        }
        for &p in &self.prior_hist {
            w.f64(p);
        }
        w.buf
    }

    /// Reads an `ICAU` file; the distance matrix is recomputed.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(UNITS_MAGIC)?;
        r.version(UNITS_VERSION)?;
        let at = r.offset();
        let k = r.u32()? as usize;
        let d_x = r.u32()? as usize;
        if k == 0 || d_x == 0 {
            return Err(Error::format(at, "k and d_x must be positive"));
        }
        let ref_cond = r.u32()?;
        let need = (k as u64) * (d_x as u64) * 4 + k as u64 * 8;
        if need > bytes.len() as u64 - r.offset() {
            return Err(Error::format(r.offset(), "truncated unit model payload"));
        }
        let centroids = (0..k).map(|_| r.f32_vec(d_x)).collect::<Result<Vec<_>>>()?;
        let prior_hist = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Self::new(centroids, ref_cond, prior_hist)
    }
}

fn choose_ref_cond(cond_ids: &[u32], policy: RefCondPolicy) -> u32 {
    match policy {
        RefCondPolicy::Fixed(c) => c,
        RefCondPolicy::MostRecords => {
            let max_id = cond_ids.iter().copied().max().unwrap_or(0) as usize;
            let mut counts = vec![0usize; max_id + 1];
            for &c in cond_ids {
                counts[c as usize] += 1;
            }
            let mut best = 0;
            for (c, &n) in counts.iter().enumerate() {
                if n > counts[best] {
                    best = c;
                }
            }
            best as u32
        }
    }
}

/// Fits centroids on the reference-condition subset, then labels every
/// record with its nearest centroid. Centroids are rounded to `f32` before
/// assignment so a persisted model reproduces the labels exactly.
pub fn build_proxy(
    ds: &FrameDataset,
    k: usize,
    policy: RefCondPolicy,
    seed: u64,
) -> Result<(UnitModel, FrameDataset)> {
    if !ds.has_cond_id() {
        return Err(Error::Data("building proxy units requires cond_id on every record".into()));
    }
    let cond_ids = ds.cond_ids()?;
    let ref_cond = choose_ref_cond(&cond_ids, policy);
    let subset: Vec<Vec<f64>> = ds
        .records
        .iter()
        .filter(|r| r.cond_id == Some(ref_cond))
        .map(|r| r.x.clone())
        .collect();
    if subset.len() < k {
        return Err(Error::Config(format!(
            "reference condition {ref_cond} has {} records, fewer than k = {k}",
            subset.len()
        )));
    }
    let fit = kmeans_fit(&subset, k, seed, DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
    let mut centroids = fit.centroids;
    for c in centroids.iter_mut() {
        round_f32(c);
    }
    let points: Vec<Vec<f64>> = ds.records.iter().map(|r| r.x.clone()).collect();
    let labels: Vec<u32> = kmeans_assign(&centroids, &points)?
        .into_iter()
        .map(|l| l as u32)
        .collect();
    let model = UnitModel::new(centroids, ref_cond, label_histogram(&labels, k))?;
    let labelled = ds.with_proxy(&labels)?;
    Ok((model, labelled))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearTie {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymmetryReport {
    pub k: usize,
    pub gap_tol: f64,
    pub min_off_diagonal: f64,
    pub diagonal_zero: bool,
    /// Off-diagonal pairs at or below `gap_tol`.
    pub near_ties: Vec<NearTie>,
    pub passed: bool,
}

/// Passes iff the diagonal of D is exactly zero and every off-diagonal entry
/// exceeds `gap_tol`.
pub fn asymmetry_check(model: &UnitModel, gap_tol: f64) -> AsymmetryReport {
    let d = &model.dist_matrix;
    let k = d.len();
    let diagonal_zero = (0..k).all(|i| d[i][i] == 0.0);
    let mut min_off = f64::INFINITY;
    let mut near_ties = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            min_off = min_off.min(d[i][j]);
            if !(d[i][j] > gap_tol) {
                near_ties.push(NearTie {
                    i,
                    j,
                    distance: d[i][j],
                });
            }
        }
    }
    AsymmetryReport {
        k,
        gap_tol,
        min_off_diagonal: if k < 2 { 0.0 } else { min_off },
        diagonal_zero,
        passed: diagonal_zero && k >= 2 && near_ties.is_empty(),
        near_ties,
    }
}
