//! Encoder/decoder pair trained with a reconstruction term plus a regression
//! of the latent onto scaled proxy labels, and conversion by swapping the
//! condition vector at decode time.

use serde::Serialize;

use crate::codec::{ByteReader, ByteWriter};
use crate::dataset::{FrameDataset, Record};
use crate::error::{check_len, Error, Result};
use crate::numkit::{Activation, AdamConfig, AdamState, DenseNet, NetGrads, Rng, Workspace};

pub const MODEL_MAGIC: &[u8; 4] = b"ICAP";
pub const MODEL_VERSION: u16 = 1;

/// Anything that maps frames to latents and back under a condition.
pub trait Autoencoder {
    fn d_x(&self) -> usize;
    fn d_c(&self) -> usize;
    fn d_latent(&self) -> usize;
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn decode(&self, s: &[f64], c: &[f64]) -> Result<Vec<f64>>;

    fn convert(&self, x_src: &[f64], c_tgt: &[f64]) -> Result<Vec<f64>> {
        let s = self.encode(x_src)?;
        self.decode(&s, c_tgt)
    }

    fn encode_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.encode(x)).collect()
    }
}

/// Affine label map `t(k) = (k - offset) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabelScale {
    pub offset: f64,
    pub scale: f64,
}

impl LabelScale {
    /// Centers labels `0..k` on zero with spacing `1/sqrt(k)`.
    pub fn for_labels(k: usize) -> Self {
        Self {
            offset: (k as f64 - 1.0) / 2.0,
            scale: 1.0 / (k.max(1) as f64).sqrt(),
        }
    }

    pub fn target(&self, label: u32) -> f64 {
        (label as f64 - self.offset) * self.scale
    }

    pub fn inverse(&self, t: f64) -> f64 {
        t / self.scale + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaeModel {
    pub encoder: DenseNet,
    pub decoder: DenseNet,
    pub d_latent: usize,
    pub k: usize,
    pub label_scale: LabelScale,
}

impl IcaeModel {
    /// Randomly initialized model with the given hidden widths on both nets.
    pub fn new(
        d_x: usize,
        d_c: usize,
        d_latent: usize,
        hidden: &[usize],
        activation: Activation,
        k: usize,
        seed: u64,
    ) -> Result<Self> {
        if d_latent == 0 || k == 0 {
            return Err(Error::Config("d_latent and k must be positive".into()));
        }
        let mut rng = Rng::new(seed);
        let enc_dims: Vec<usize> = [d_x].iter().chain(hidden).chain(&[d_latent]).copied().collect();
        let dec_dims: Vec<usize> = [d_latent + d_c].iter().chain(hidden).chain(&[d_x]).copied().collect();
        let encoder = DenseNet::random(&enc_dims, activation, &mut rng)?;
        let decoder = DenseNet::random(&dec_dims, activation, &mut rng)?;
        Self::from_parts(encoder, decoder, k, LabelScale::for_labels(k))
    }

    pub fn from_parts(encoder: DenseNet, decoder: DenseNet, k: usize, label_scale: LabelScale) -> Result<Self> {
        let d_latent = encoder.output_dim();
        if decoder.input_dim() < d_latent {
            return Err(Error::shape(format!(
                "decoder input {} is narrower than the latent {d_latent}",
                decoder.input_dim()
            )));
        }
        check_len("decoder output", decoder.output_dim(), encoder.input_dim())?;
        if !(label_scale.scale.is_finite() && label_scale.scale > 0.0 && label_scale.offset.is_finite()) {
            return Err(Error::Config(format!(
                "label scale must be finite and positive, got {label_scale:?}"
            )));
        }
        Ok(Self {
            encoder,
            decoder,
            d_latent,
            k,
            label_scale,
        })
    }

    /// Regression target for a proxy label, repeated over every latent
    /// coordinate.
    pub fn target(&self, label: u32) -> Result<Vec<f64>> {
        if label as usize >= self.k {
            return Err(Error::Data(format!("proxy label {label} out of range for k = {}", self.k)));
        }
        Ok(vec![self.label_scale.target(label); self.d_latent])
    }

    pub fn reconstruct(&self, x: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        self.convert(x, c)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_VERSION);
        w.u32(self.d_latent as u32);
        w.u32(self.k as u32);
        w.f64(self.label_scale.offset);
        w.f64(self.label_scale.scale);
        self.encoder.encode_into(&mut w);
        self.decoder.encode_into(&mut w);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(MODEL_MAGIC)?;
        r.version(MODEL_VERSION)?;
        let at = r.offset();
        let d_latent = r.u32()? as usize;
        let k = r.u32()? as usize;
        let label_scale = LabelScale {
            offset: r.f64()?,
            scale: r.f64()?,
        };
        let encoder = DenseNet::decode_from(&mut r)?;
        let decoder = DenseNet::decode_from(&mut r)?;
        r.finish()?;
        if encoder.output_dim() != d_latent {
            return Err(Error::format(
                at,
                format!("header says d_latent {d_latent}, encoder emits {}", encoder.output_dim()),
            ));
        }
        Self::from_parts(encoder, decoder, k, label_scale)
    }

    fn decoder_input(&self, s: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        check_len("latent", s.len(), self.d_latent)?;
        check_len("condition", c.len(), self.d_c())?;
        Ok(s.iter().chain(c).copied().collect())
    }
}

impl Autoencoder for IcaeModel {
    fn d_x(&self) -> usize {
        self.encoder.input_dim()
    }

    fn d_c(&self) -> usize {
        self.decoder.input_dim() - self.d_latent
    }

    fn d_latent(&self) -> usize {
        self.d_latent
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.encoder.forward(x)
    }

    fn decode(&self, s: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        self.decoder.forward(&self.decoder_input(s, c)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub indep: f64,
}

/// Batch means of the reconstruction and latent-regression terms, and
/// `total = recon + lambda * indep`.
pub fn loss_eval(model: &IcaeModel, records: &[Record], lambda: f64) -> Result<LossParts> {
    if records.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let mut recon = 0.0;
    let mut indep = 0.0;
    for (i, r) in records.iter().enumerate() {
        let label = r
            .proxy_s
            .ok_or_else(|| Error::Data(format!("record {i} has no proxy label")))?;
        let target = model.target(label)?;
        let s = model.encode(&r.x)?;
        let x_hat = model.decode(&s, &r.c)?;
        recon += crate::numkit::sq_dist(&x_hat, &r.x);
        indep += crate::numkit::sq_dist(&s, &target);
    }
    let n = records.len() as f64;
    let (recon, indep) = (recon / n, indep / n);
    Ok(LossParts {
        total: recon + lambda * indep,
        recon,
        indep,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lr: 1e-3,
            batch_size: 64,
            epochs: 50,
            seed: 0,
            shuffle: true,
        }
    }
}

/// Sample-weighted loss averages over one epoch of minibatch updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub recon: f64,
    pub indep: f64,
    pub total: f64,
}

struct Trainer {
    enc_ws: Workspace,
    dec_ws: Workspace,
    enc_grads: NetGrads,
    dec_grads: NetGrads,
    dec_in: Vec<f64>,
    dec_in_grad: Vec<f64>,
    grad_x: Vec<f64>,
    grad_s: Vec<f64>,
}

impl Trainer {
    fn new(model: &IcaeModel) -> Self {
        Self {
            enc_ws: Workspace::new(&model.encoder),
            dec_ws: Workspace::new(&model.decoder),
            enc_grads: NetGrads::zeros_like(&model.encoder),
            dec_grads: NetGrads::zeros_like(&model.decoder),
            dec_in: vec![0.0; model.decoder.input_dim()],
            dec_in_grad: vec![0.0; model.decoder.input_dim()],
            grad_x: vec![0.0; model.d_x()],
            grad_s: vec![0.0; model.d_latent],
        }
    }

    /// Accumulates gradients of the batch-mean loss over `batch`; returns the
    /// summed (recon, indep) terms.
    fn accumulate(&mut self, model: &IcaeModel, batch: &[&Record], lambda: f64) -> Result<(f64, f64)> {
        self.enc_grads.clear();
        self.dec_grads.clear();
        let inv_b = 1.0 / batch.len() as f64;
        let dl = model.d_latent;
        let (mut recon, mut indep) = (0.0, 0.0);
        for r in batch {
            let t = model.label_scale.target(r.proxy_s.unwrap_or(0));
            model.encoder.forward_ws(&r.x, &mut self.enc_ws)?;
            let s = self.enc_ws.output();
            self.dec_in[..dl].copy_from_slice(s);
            self.dec_in[dl..].copy_from_slice(&r.c);
            for (g, v) in self.grad_s.iter_mut().zip(s) {
                indep += (v - t) * (v - t);
                *g = lambda * 2.0 * (v - t) * inv_b;
            }
            model.decoder.forward_ws(&self.dec_in, &mut self.dec_ws)?;
            for ((g, xh), x) in self.grad_x.iter_mut().zip(self.dec_ws.output()).zip(&r.x) {
                recon += (xh - x) * (xh - x);
                *g = 2.0 * (xh - x) * inv_b;
            }
            model.decoder.backward_ws(
                &mut self.dec_ws,
                &self.grad_x,
                &mut self.dec_grads,
                Some(&mut self.dec_in_grad),
            )?;
            for (g, d) in self.grad_s.iter_mut().zip(&self.dec_in_grad[..dl]) {
                *g += d;
            }
            model
                .encoder
                .backward_ws(&mut self.enc_ws, &self.grad_s, &mut self.enc_grads, None)?;
        }
        Ok((recon, indep))
    }
}

/// Minibatch Adam on both networks. The final short batch is kept. Parameters
/// are rounded to `f32` at the end so the saved model reproduces exactly.
pub fn train(model: &mut IcaeModel, ds: &FrameDataset, cfg: &TrainConfig) -> Result<Vec<EpochLoss>> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be non-negative, got {}", cfg.lambda)));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if cfg.batch_size == 0 || cfg.batch_size > ds.len() {
        return Err(Error::Config(format!(
            "batch size {} must be in 1..={}",
            cfg.batch_size,
            ds.len()
        )));
    }
    check_len("dataset d_x", ds.d_x, model.d_x())?;
    check_len("dataset d_c", ds.d_c, model.d_c())?;
    for label in ds.proxy_labels()? {
        if label as usize >= model.k {
            return Err(Error::Data(format!("proxy label {label} out of range for k = {}", model.k)));
        }
    }
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }

    let adam = AdamConfig::with_lr(cfg.lr);
    let mut enc_opt = AdamState::for_net(&model.encoder, adam);
    let mut dec_opt = AdamState::for_net(&model.decoder, adam);
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut trainer = Trainer::new(model);
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            rng.shuffle(&mut order);
        }
        let (mut recon, mut indep) = (0.0, 0.0);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Record> = chunk.iter().map(|&i| &ds.records[i]).collect();
            let (r, q) = trainer.accumulate(model, &batch, cfg.lambda)?;
            if !(r + cfg.lambda * q).is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            recon += r;
            indep += q;
            enc_opt
                .step_net(&mut model.encoder, &trainer.enc_grads)
                .map_err(|e| Error::Numeric(format!("encoder at epoch {epoch}, batch {b}: {e}")))?;
            dec_opt
                .step_net(&mut model.decoder, &trainer.dec_grads)
                .map_err(|e| Error::Numeric(format!("decoder at epoch {epoch}, batch {b}: {e}")))?;
        }
        let n = ds.len() as f64;
        let (recon, indep) = (recon / n, indep / n);
        trace.push(EpochLoss {
            epoch,
            recon,
            indep,
            total: recon + cfg.lambda * indep,
        });
    }
    model.encoder.round_to_f32();
    model.decoder.round_to_f32();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genproc::{make_spec, Mixing};

    fn identity_net(d: usize) -> DenseNet {
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            w[i * d + i] = 1.0;
        }
        DenseNet::from_parts(vec![d, d], vec![w], vec![vec![0.0; d]], Activation::Identity).unwrap()
    }

    /// 1-D model: encoder maps x to 0, decoder copies its latent input.
    fn scalar_model(k: usize) -> IcaeModel {
        let enc = DenseNet::zeros(&[1, 1], Activation::Identity).unwrap();
        let dec = DenseNet::from_parts(vec![2, 1], vec![vec![1.0, 0.0]], vec![vec![0.0]], Activation::Identity).unwrap();
        IcaeModel::from_parts(enc, dec, k, LabelScale::for_labels(k)).unwrap()
    }

    fn record(x: Vec<f64>, c: Vec<f64>, proxy: u32) -> Record {
        Record {
            x,
            c,
            cond_id: None,
            true_s: None,
            proxy_s: Some(proxy),
        }
    }

    fn small_task() -> (IcaeModel, FrameDataset) {
        let spec = make_spec(4, 3, 3, 2, Mixing::Affine, 5).unwrap();
        let ds = spec.sample_dataset(200, 6).unwrap();
        let labels: Vec<u32> = ds.records.iter().map(|r| r.true_s.unwrap()).collect();
        let ds = ds.with_proxy(&labels).unwrap();
        let model = IcaeModel::new(5, 2, 1, &[8], Activation::Tanh, 4, 7).unwrap();
        (model, ds)
    }

    #[test]
    fn hand_evaluated_loss() {
        // x = 0.3, x_hat = 0 (residual 0.3); k = 1 gives target 0, and the
        // encoder bias puts the latent at 0.2.
        let mut m = scalar_model(1);
        m.encoder.biases_mut()[0][0] = 0.2;
        m.decoder.weights_mut()[0][0] = 0.0;
        let l = loss_eval(&m, &[record(vec![0.3], vec![0.0], 0)], 1.0).unwrap();
        assert!((l.recon - 0.09).abs() < 1e-15);
        assert!((l.indep - 0.04).abs() < 1e-15);
        assert!((l.total - 0.13).abs() < 1e-15);
    }

    #[test]
    fn lambda_zero_is_pure_reconstruction() {
        let (m, ds) = small_task();
        let l = loss_eval(&m, &ds.records, 0.0).unwrap();
        assert_eq!(l.total, l.recon);
        let l2 = loss_eval(&m, &ds.records, 2.5).unwrap();
        assert!((l2.total - (l2.recon + 2.5 * l2.indep)).abs() <= 1e-12 * l2.total);
    }

    #[test]
    fn oracle_wiring_gives_zero_loss() {
        // d_x = 1, d_c = 1; encoder x -> x, decoder (s, c) -> s, data x = t(label).
        let k = 3;
        let ls = LabelScale::for_labels(k);
        let enc = identity_net(1);
        let dec = DenseNet::from_parts(vec![2, 1], vec![vec![1.0, 0.0]], vec![vec![0.0]], Activation::Identity).unwrap();
        let m = IcaeModel::from_parts(enc, dec, k, ls).unwrap();
        let recs: Vec<Record> = (0..k as u32).map(|l| record(vec![ls.target(l)], vec![0.7], l)).collect();
        assert_eq!(loss_eval(&m, &recs, 1.0).unwrap().total, 0.0);
    }

    #[test]
    fn missing_proxy_is_a_data_error() {
        let m = scalar_model(2);
        let mut r = record(vec![0.0], vec![0.0], 0);
        r.proxy_s = None;
        assert!(matches!(loss_eval(&m, &[r], 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn label_map_is_monotone_and_centered() {
        for k in [1usize, 2, 5, 100] {
            let ls = LabelScale::for_labels(k);
            let t: Vec<f64> = (0..k as u32).map(|l| ls.target(l)).collect();
            assert!(t.windows(2).all(|w| w[0] < w[1]));
            assert!(t.iter().sum::<f64>().abs() < 1e-9);
            for (l, v) in t.iter().enumerate() {
                assert!((ls.inverse(*v) - l as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_nets_output_their_biases() {
        let mut enc = DenseNet::zeros(&[3, 4, 2], Activation::Tanh).unwrap();
        enc.biases_mut()[1].copy_from_slice(&[0.5, -0.25]);
        let mut dec = DenseNet::zeros(&[4, 4, 3], Activation::Tanh).unwrap();
        dec.biases_mut()[1].copy_from_slice(&[1.0, 2.0, 3.0]);
        let m = IcaeModel::from_parts(enc, dec, 3, LabelScale::for_labels(3)).unwrap();
        assert_eq!(m.encode(&[9.0, -1.0, 0.3]).unwrap(), vec![0.5, -0.25]);
        assert_eq!(m.decode(&[4.0, 4.0], &[1.0, -1.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(m.decode(&[-7.0, 0.0], &[0.0, 5.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(m.encode(&[1.0]), Err(Error::Shape(_))));
        assert!(matches!(m.decode(&[1.0, 1.0], &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn convert_is_decode_of_encode_and_condition_matters() {
        let (m, ds) = small_task();
        let r = &ds.records[0];
        let s = m.encode(&r.x).unwrap();
        let a = m.convert(&r.x, &[0.3, -0.8]).unwrap();
        let b = m.decode(&s, &[0.3, -0.8]).unwrap();
        assert_eq!(a, b);
        assert_eq!(m.convert(&r.x, &r.c).unwrap(), m.reconstruct(&r.x, &r.c).unwrap());
        assert_ne!(m.decode(&s, &[1.0, 0.0]).unwrap(), m.decode(&s, &[0.0, 1.0]).unwrap());
        let batch = m.encode_batch(&[r.x.clone(), ds.records[1].x.clone()]).unwrap();
        assert_eq!(batch[0], s);
        assert_eq!(batch[1], m.encode(&ds.records[1].x).unwrap());
    }

    /// Central differences of the full batch loss against the accumulated
    /// weight gradients of both networks.
    #[test]
    fn training_gradients_match_finite_differences() {
        let (m, ds) = small_task();
        let batch: Vec<&Record> = ds.records.iter().take(5).collect();
        let owned: Vec<Record> = batch.iter().map(|r| (*r).clone()).collect();
        let lambda = 0.7;
        let mut tr = Trainer::new(&m);
        tr.accumulate(&m, &batch, lambda).unwrap();

        let h = 1e-6;
        let loss = |mm: &IcaeModel| loss_eval(mm, &owned, lambda).unwrap().total;
        let mut worst: f64 = 0.0;
        for (net_idx, grads) in [(0, &tr.enc_grads), (1, &tr.dec_grads)] {
            let net = if net_idx == 0 { &m.encoder } else { &m.decoder };
            for l in 0..net.layer_count() {
                for i in 0..net.weights()[l].len() {
                    let mut p = m.clone();
                    let mut q = m.clone();
                    let (np, nq) = if net_idx == 0 {
                        (&mut p.encoder, &mut q.encoder)
                    } else {
                        (&mut p.decoder, &mut q.decoder)
                    };
                    np.weights_mut()[l][i] += h;
                    nq.weights_mut()[l][i] -= h;
                    let fd = (loss(&p) - loss(&q)) / (2.0 * h);
                    let an = grads.weights[l][i];
                    worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
                }
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");

    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let (mut m, ds) = small_task();
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(train(&mut m, &ds, &cfg).unwrap().is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let (m0, ds) = small_task();
        let cfg = TrainConfig {
            lr: 3e-3,
            batch_size: 32,
            epochs: 40,
            seed: 9,
            ..TrainConfig::default()
        };
        let mut a = m0.clone();
        let mut b = m0.clone();
        let ta = train(&mut a, &ds, &cfg).unwrap();
        let tb = train(&mut b, &ds, &cfg).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(a, b);
        assert_eq!(ta.len(), 40);
        assert!(ta.last().unwrap().total < 0.5 * ta[0].total, "{:?}", (ta[0], ta[39]));
        for e in &ta {
            assert!((e.total - (e.recon + e.indep)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let (mut m, ds) = small_task();
        let too_big = TrainConfig {
            batch_size: 201,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&mut m, &ds, &too_big), Err(Error::Config(_))));
        let neg = TrainConfig {
            lambda: -1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&mut m, &ds, &neg), Err(Error::Config(_))));
    }

    #[test]
    fn divergence_reports_location() {
        let (mut m, ds) = small_task();
        m.decoder.weights_mut()[0][0] = f64::NAN;
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let err = train(&mut m, &ds, &cfg).unwrap_err();
        assert!(err.to_string().contains("epoch 1, batch 0"), "{err}");
    }

    #[test]
    fn model_file_round_trip() {
        let (mut m, ds) = small_task();
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        train(&mut m, &ds, &cfg).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"ICAP");
        let back = IcaeModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        let x = &ds.records[3].x;
        assert_eq!(back.convert(x, &[0.1, 0.2]).unwrap(), m.convert(x, &[0.1, 0.2]).unwrap());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(IcaeModel::from_bytes(&bad), Err(Error::Format { offset: 0, .. })));
        assert!(IcaeModel::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }
}
