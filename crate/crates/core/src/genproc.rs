//! Synthetic ground-truth processes `x = f(s, c)`.
//!
//! Content `s` is a discrete category drawn from a strictly descending
//! geometric prior and condition `c` is a uniformly drawn category; both are
//! embedded through lookup tables, concatenated, and pushed through an
//! invertible square mixing. Every spec exposes `f`, its inverse, and the
//! latent assignments so downstream checks have an exact reference.

use serde::Serialize;

use crate::dataset::{FrameDataset, Record};
use crate::error::{check_len, Error, Result};
use crate::numkit::{matvec, round_f32, sq_dist, Lu, Rng};

/// Maximum rejection-sampling attempts for one table row.
pub const MAX_TABLE_ATTEMPTS: usize = 1000;
pub const NEWTON_MAX_ITERS: usize = 50;
pub const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixing {
    Affine,
    Smooth,
}

impl Mixing {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "affine" => Some(Mixing::Affine),
            "smooth" => Some(Mixing::Smooth),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mixing::Affine => "affine",
            Mixing::Smooth => "smooth",
        }
    }
}

/// Construction parameters for [`GenerativeSpec::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpecParams {
    pub k_s: usize,
    pub k_c: usize,
    pub d_u: usize,
    pub d_c: usize,
    pub mixing: Mixing,
    /// Strength of the elementwise `t + alpha * tanh(t)` map, in `[0, 1)`.
    pub alpha: f64,
    /// Ratio of the geometric content prior.
    pub prior_ratio: f64,
    /// Minimum Euclidean distance between rows of each embedding table.
    pub sep_min: f64,
    pub seed: u64,
}

impl SpecParams {
    pub fn new(k_s: usize, k_c: usize, d_u: usize, d_c: usize, mixing: Mixing, seed: u64) -> Self {
        Self {
            k_s,
            k_c,
            d_u,
            d_c,
            mixing,
            alpha: 0.5,
            prior_ratio: 0.8,
            sep_min: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerativeSpec {
    pub k_s: usize,
    pub k_c: usize,
    pub d_u: usize,
    pub d_c: usize,
    pub prior: Vec<f64>,
    pub content_table: Vec<Vec<f64>>,
    pub cond_table: Vec<Vec<f64>>,
    pub mixing: Mixing,
    /// Row-major `(d_u + d_c)^2` mixing matrix.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: f64,
    pub sep_min: f64,
    pub seed: u64,
    #[serde(skip)]
    lu: Lu,
}

/// A pair of observations sharing content but not condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub x_src: Vec<f64>,
    pub x_tgt: Vec<f64>,
    pub c_src: Vec<f64>,
    pub c_tgt: Vec<f64>,
    pub cond_src: usize,
    pub cond_tgt: usize,
    pub shared_s: usize,
}

/// Result of inverting an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub s: usize,
    pub c: usize,
    /// Distance from the recovered embedding to the snapped table rows.
    pub snap_distance: f64,
    /// `||f(s, c) - x||`.
    pub residual: f64,
}

/// Normalized geometric sequence `r^i / sum_j r^j`.
pub fn geometric_prior(k: usize, ratio: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|i| ratio.powi(i as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Builds a spec from the default parameters (prior ratio 0.8, alpha 0.5).
pub fn make_spec(
    k_s: usize,
    k_c: usize,
    d_u: usize,
    d_c: usize,
    mixing: Mixing,
    seed: u64,
) -> Result<GenerativeSpec> {
    GenerativeSpec::build(&SpecParams::new(k_s, k_c, d_u, d_c, mixing, seed))
}

fn sample_table(rows: usize, dim: usize, sep_min: f64, rng: &mut Rng, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for row in 0..rows {
        let mut accepted = None;
        for _ in 0..MAX_TABLE_ATTEMPTS {
            let cand: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            if table.iter().all(|r| sq_dist(r, &cand).sqrt() >= sep_min) {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(r) => table.push(r),
            None => {
                return Err(Error::Config(format!(
                    "{what} row {row}: separation {sep_min} unreachable after {MAX_TABLE_ATTEMPTS} attempts"
                )))
            }
        }
    }
    Ok(table)
}

fn min_row_separation(table: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            best = best.min(sq_dist(&table[i], &table[j]).sqrt());
        }
    }
    best
}

pub(crate) fn nearest_row(table: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, row) in table.iter().enumerate() {
        let d = sq_dist(row, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

#[inline]
fn smooth(t: f64, alpha: f64) -> f64 {
    t + alpha * t.tanh()
}

/// Inverts `t + alpha * tanh(t)` by Newton's method. The derivative lies in
/// `[1, 1 + alpha]`, so each step contracts the error by at least
/// `alpha / (1 + alpha)`.
fn smooth_inverse(y: f64, alpha: f64) -> Option<f64> {
    let mut t = y / (1.0 + alpha);
    for _ in 0..NEWTON_MAX_ITERS {
        let th = t.tanh();
        let step = (t + alpha * th - y) / (1.0 + alpha * (1.0 - th * th));
        t -= step;
        if step.abs() <= NEWTON_TOL * (1.0 + t.abs()) {
            return Some(t);
        }
    }
    None
}

impl GenerativeSpec {
    pub fn build(p: &SpecParams) -> Result<Self> {
        if p.k_s < 2 || p.k_c < 2 {
            return Err(Error::Config(format!(
                "need k_s >= 2 and k_c >= 2, got k_s = {}, k_c = {}",
                p.k_s, p.k_c
            )));
        }
        if p.d_u == 0 || p.d_c == 0 {
            return Err(Error::Config("embedding dims must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&p.alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1), got {}", p.alpha)));
        }
        if !(p.prior_ratio > 0.0 && p.prior_ratio < 1.0) {
            return Err(Error::Config(format!(
                "prior ratio must be in (0, 1), got {}",
                p.prior_ratio
            )));
        }
        if !(p.sep_min > 0.0) {
            return Err(Error::Config("sep_min must be positive".into()));
        }
        let mut rng = Rng::new(p.seed);
        let content_table = sample_table(p.k_s, p.d_u, p.sep_min, &mut rng, "content table")?;
        let cond_table = sample_table(p.k_c, p.d_c, p.sep_min, &mut rng, "condition table")?;

        // Orthogonal mixing: a Gram-Schmidt pass over a Gaussian draw,
        // re-drawn until the LU invertibility check passes.
        let n = p.d_u + p.d_c;
        let mut w = None;
        for _ in 0..MAX_TABLE_ATTEMPTS {
            let g: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
            if let Some(q) = crate::numkit::orthonormalize(&g, n) {
                if Lu::factor(&q, n).is_ok() {
                    w = Some(q);
                    break;
                }
            }
        }
        let w = w.ok_or_else(|| Error::Config("could not draw an invertible mixing".into()))?;
        let b: Vec<f64> = (0..n).map(|_| rng.uniform_in(-0.5, 0.5)).collect();

        Self::from_parts(
            geometric_prior(p.k_s, p.prior_ratio),
            content_table,
            cond_table,
            p.mixing,
            w,
            b,
            p.alpha,
            p.sep_min,
            p.seed,
        )
    }

    /// Assembles a spec from explicit parts, enforcing every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        prior: Vec<f64>,
        content_table: Vec<Vec<f64>>,
        cond_table: Vec<Vec<f64>>,
        mixing: Mixing,
        w: Vec<f64>,
        b: Vec<f64>,
        alpha: f64,
        sep_min: f64,
        seed: u64,
    ) -> Result<Self> {
        let k_s = content_table.len();
        let k_c = cond_table.len();
        if k_s < 2 || k_c < 2 {
            return Err(Error::Config("need at least two content and two condition rows".into()));
        }
        check_len("prior", prior.len(), k_s)?;
        let d_u = content_table[0].len();
        let d_c = cond_table[0].len();
        if content_table.iter().any(|r| r.len() != d_u) || cond_table.iter().any(|r| r.len() != d_c) {
            return Err(Error::shape("ragged embedding table"));
        }
        let n = d_u + d_c;
        check_len("mixing matrix", w.len(), n * n)?;
        check_len("mixing offset", b.len(), n)?;
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 || prior.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config(format!("prior must be positive and sum to 1, sums to {total}")));
        }
        if prior.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Config("prior must be strictly descending".into()));
        }
        if min_row_separation(&content_table) < sep_min || min_row_separation(&cond_table) < sep_min {
            return Err(Error::Config(format!("embedding rows closer than sep_min = {sep_min}")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1), got {alpha}")));
        }
        let lu = Lu::factor(&w, n)?;
        Ok(Self {
            k_s,
            k_c,
            d_u,
            d_c,
            prior,
            content_table,
            cond_table,
            mixing,
            w,
            b,
            alpha,
            sep_min,
            seed,
            lu,
        })
    }

    pub fn d_x(&self) -> usize {
        self.d_u + self.d_c
    }

    /// Smallest gap between any two prior entries.
    pub fn prior_gap(&self) -> f64 {
        self.prior
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn condition(&self, c: usize) -> &[f64] {
        &self.cond_table[c]
    }

    pub fn f_apply(&self, s: usize, c: usize) -> Result<Vec<f64>> {
        if s >= self.k_s || c >= self.k_c {
            return Err(Error::Data(format!(
                "index out of range: s = {s} (k_s = {}), c = {c} (k_c = {})",
                self.k_s, self.k_c
            )));
        }
        let z: Vec<f64> = self.content_table[s]
            .iter()
            .chain(&self.cond_table[c])
            .copied()
            .collect();
        let n = self.d_x();
        let mut x = matvec(&self.w, n, n, &z);
        for (xi, bi) in x.iter_mut().zip(&self.b) {
            *xi += bi;
        }
        if self.mixing == Mixing::Smooth {
            for xi in x.iter_mut() {
                *xi = smooth(*xi, self.alpha);
            }
        }
        Ok(x)
    }

    pub fn f_invert(&self, x: &[f64]) -> Result<(usize, usize)> {
        self.invert_detailed(x).map(|inv| (inv.s, inv.c))
    }

    pub fn invert_detailed(&self, x: &[f64]) -> Result<Inversion> {
        check_len("observation", x.len(), self.d_x())?;
        let mut y = x.to_vec();
        if self.mixing == Mixing::Smooth {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = smooth_inverse(*yi, self.alpha).ok_or_else(|| {
                    Error::NotInImage(format!("Newton inversion did not converge at coordinate {i}"))
                })?;
            }
        }
        for (yi, bi) in y.iter_mut().zip(&self.b) {
            *yi -= bi;
        }
        let z = self.lu.solve(&y);
        let (s, ds) = nearest_row(&self.content_table, &z[..self.d_u]);
        let (c, dc) = nearest_row(&self.cond_table, &z[self.d_u..]);
        let limit = self.sep_min / 2.0;
        if ds > limit || dc > limit {
            return Err(Error::NotInImage(format!(
                "nearest table rows at distance {ds:.3e} (content) / {dc:.3e} (condition), limit {limit:.3e}"
            )));
        }
        let residual = sq_dist(&self.f_apply(s, c)?, x).sqrt();
        Ok(Inversion {
            s,
            c,
            snap_distance: ds.max(dc),
            residual,
        })
    }

    fn draw_content(&self, rng: &mut Rng) -> usize {
        rng.weighted_index(&self.prior)
    }

    /// Observation as stored on disk (`f32` precision).
    pub fn observe(&self, s: usize, c: usize) -> Result<Vec<f64>> {
        let mut x = self.f_apply(s, c)?;
        round_f32(&mut x);
        Ok(x)
    }

    /// Condition vector as stored with each record (`f32` precision).
    pub fn observed_condition(&self, c: usize) -> Vec<f64> {
        let mut v = self.cond_table[c].clone();
        round_f32(&mut v);
        v
    }

    /// Draws `n` records with `s ~ prior` and `c ~ uniform`, independently.
    /// Values are kept at `f32` precision so that a persisted dataset reads
    /// back bit-identical.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Result<FrameDataset> {
        let mut rng = Rng::new(seed);
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let s = self.draw_content(&mut rng);
            let c = rng.index(self.k_c);
            records.push(Record {
                x: self.observe(s, c)?,
                c: self.observed_condition(c),
                cond_id: Some(c as u32),
                true_s: Some(s as u32),
                proxy_s: None,
            });
        }
        FrameDataset::new(self.d_x(), self.d_c, records)
    }

    /// Draws `n` parallel pairs: shared `s ~ prior`, source condition uniform,
    /// target condition uniform over the remaining ones.
    pub fn sample_pairs(&self, n: usize, seed: u64) -> Result<Vec<ParallelPair>> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                let s = self.draw_content(&mut rng);
                let cond_src = rng.index(self.k_c);
                let mut cond_tgt = rng.index(self.k_c - 1);
                if cond_tgt >= cond_src {
                    cond_tgt += 1;
                }
                Ok(ParallelPair {
                    x_src: self.observe(s, cond_src)?,
                    x_tgt: self.observe(s, cond_tgt)?,
                    c_src: self.observed_condition(cond_src),
                    c_tgt: self.observed_condition(cond_tgt),
                    cond_src,
                    cond_tgt,
                    shared_s: s,
                })
            })
            .collect()
    }
}

/// Splits pairs into aligned source and target datasets.
pub fn pairs_to_datasets(pairs: &[ParallelPair], d_x: usize, d_c: usize) -> Result<(FrameDataset, FrameDataset)> {
    let side = |tgt: bool| {
        pairs
            .iter()
            .map(|p| Record {
                x: if tgt { p.x_tgt.clone() } else { p.x_src.clone() },
                c: if tgt { p.c_tgt.clone() } else { p.c_src.clone() },
                cond_id: Some(if tgt { p.cond_tgt } else { p.cond_src } as u32),
                true_s: Some(p.shared_s as u32),
                proxy_s: None,
            })
            .collect::<Vec<_>>()
    };
    Ok((
        FrameDataset::new(d_x, d_c, side(false))?,
        FrameDataset::new(d_x, d_c, side(true))?,
    ))
}

/// Inverse of [`pairs_to_datasets`]. Both datasets need `cond_id` and `true_s`,
/// and the shared content must agree record by record.
pub fn datasets_to_pairs(src: &FrameDataset, tgt: &FrameDataset) -> Result<Vec<ParallelPair>> {
    if src.len() != tgt.len() {
        return Err(Error::Data(format!(
            "pair datasets differ in length: {} vs {}",
            src.len(),
            tgt.len()
        )));
    }
    src.records
        .iter()
        .zip(&tgt.records)
        .enumerate()
        .map(|(i, (a, b))| {
            let (Some(ca), Some(cb), Some(sa), Some(sb)) = (a.cond_id, b.cond_id, a.true_s, b.true_s) else {
                return Err(Error::Data(format!("pair {i}: cond_id and true_s are required")));
            };
            if sa != sb {
                return Err(Error::Data(format!("pair {i}: content differs ({sa} vs {sb})")));
            }
            Ok(ParallelPair {
                x_src: a.x.clone(),
                x_tgt: b.x.clone(),
                c_src: a.c.clone(),
                c_tgt: b.c.clone(),
                cond_src: ca as usize,
                cond_tgt: cb as usize,
                shared_s: sa as usize,
            })
        })
        .collect()
}
