//! Pipeline stages. Each stage reads the artifacts of the previous ones from
//! the output directory and writes its own; files land atomically and a
//! failing stage removes whatever it had already written.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use icae_core::dataset::{FrameDataset, Record};
use icae_core::genproc::{datasets_to_pairs, pairs_to_datasets, GenerativeSpec, SpecParams};
use icae_core::icae::{train, Autoencoder, IcaeModel, TrainConfig};
use icae_core::indep::{categorical, hsic_permutation_test, Kernel, PermutationTest};
use icae_core::numkit::{median, round_f32, sq_dist, sub_seed, Rng};
use icae_core::units::{asymmetry_check, build_proxy, RefCondPolicy, UnitModel};
use icae_core::verify::{
    check_error_bound_with, check_injectivity, check_t_consistency, measure_reconstruction, silhouette,
};

use crate::config::ExperimentConfig;
use crate::ingest::ingest_external;

pub const TRAIN_DATA: &str = "train.icae";
pub const TRAIN_PROXY: &str = "train_proxy.icae";
pub const EVAL_SRC: &str = "eval_src.icae";
pub const EVAL_TGT: &str = "eval_tgt.icae";
pub const CONVERTED: &str = "converted.icae";
pub const UNITS: &str = "units.icau";
pub const MODEL: &str = "model.icap";
pub const LOSS_TRACE: &str = "loss_trace.csv";
pub const CONVERSION_CSV: &str = "conversion_errors.csv";

/// Fixed stage indices for [`sub_seed`].
mod seed_stage {
    pub const SPEC: u64 = 1;
    pub const TRAIN_DATA: u64 = 2;
    pub const PAIRS: u64 = 3;
    pub const UNITS: u64 = 4;
    pub const INIT: u64 = 5;
    pub const SHUFFLE: u64 = 6;
    pub const HSIC: u64 = 7;
    pub const VERIFY: u64 = 8;
}

/// Samples used for the silhouette of trained latents.
const SILHOUETTE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Gen,
    Units,
    Train,
    Convert,
    Verify,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Units => "units",
            Stage::Train => "train",
            Stage::Convert => "convert",
            Stage::Verify => "verify",
            Stage::All => "all",
        }
    }

    fn expand(self) -> Vec<Stage> {
        match self {
            Stage::All => vec![Stage::Gen, Stage::Units, Stage::Train, Stage::Convert, Stage::Verify],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(self.dir)
            .with_context(|| format!("creating temporary file in {}", self.dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("writing {}", target.display()))?;
        self.written.push(target);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(name, &bytes)
    }

    fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn read_dataset(dir: &Path, name: &str) -> Result<FrameDataset> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    FrameDataset::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn read_units(dir: &Path) -> Result<UnitModel> {
    let path = dir.join(UNITS);
    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    UnitModel::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn read_model(dir: &Path) -> Result<IcaeModel> {
    let path = dir.join(MODEL);
    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    IcaeModel::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// The generative spec implied by the configuration and seed.
pub fn synthetic_spec(cfg: &ExperimentConfig) -> Result<GenerativeSpec> {
    let mut p = SpecParams::new(
        cfg.k_s,
        cfg.k_c,
        cfg.d_u,
        cfg.d_c,
        cfg.mixing,
        sub_seed(cfg.seed, seed_stage::SPEC),
    );
    p.alpha = cfg.alpha;
    Ok(GenerativeSpec::build(&p)?)
}

/// Runs `stage` (or every stage for [`Stage::All`]) inside `out`.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    out: &Path,
    stage: Stage,
    log: &mut dyn FnMut(&str),
) -> Result<RunSummary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut summary = RunSummary::default();
    for s in stage.expand() {
        let mut art = Artifacts::new(out);
        let result = match s {
            Stage::Gen => stage_gen(cfg, &mut art, log),
            Stage::Units => stage_units(cfg, &mut art, log),
            Stage::Train => stage_train(cfg, &mut art, log),
            Stage::Convert => stage_convert(&mut art, log),
            Stage::Verify => stage_verify(cfg, &mut art, log),
            Stage::All => unreachable!("expanded above"),
        };
        match result {
            Ok(checks) => {
                for c in &checks {
                    log(&format!(
                        "  check {}: {} ({})",
                        c.name,
                        if c.passed { "pass" } else { "FAIL" },
                        c.detail
                    ));
                }
                summary.checks.extend(checks);
                summary.artifacts.append(&mut art.written);
            }
            Err(e) => {
                art.rollback();
                return Err(e.context(format!("stage {} failed", s.name())));
            }
        }
    }
    Ok(summary)
}

fn stage_gen(cfg: &ExperimentConfig, art: &mut Artifacts, log: &mut dyn FnMut(&str)) -> Result<Vec<Check>> {
    art.write("config.txt", cfg.serialize().as_bytes())?;
    if let Some(input) = &cfg.input {
        let ds = ingest_external(input, cfg.input_d_x, cfg.input_d_c, cfg.input_format)?;
        log(&format!("gen: ingested {} records from {}", ds.len(), input.display()));
        art.write(TRAIN_DATA, &ds.to_bytes())?;
        return Ok(Vec::new());
    }
    let spec = synthetic_spec(cfg)?;
    let ds = spec.sample_dataset(cfg.n_train, sub_seed(cfg.seed, seed_stage::TRAIN_DATA))?;
    let pairs = spec.sample_pairs(cfg.n_eval, sub_seed(cfg.seed, seed_stage::PAIRS))?;
    let (src, tgt) = pairs_to_datasets(&pairs, spec.d_x(), spec.d_c)?;
    art.write(TRAIN_DATA, &ds.to_bytes())?;
    art.write(EVAL_SRC, &src.to_bytes())?;
    art.write(EVAL_TGT, &tgt.to_bytes())?;
    art.json("spec.json", &serde_json::to_value(&spec)?)?;
    log(&format!(
        "gen: {} training records, {} parallel pairs, d_x = {}",
        ds.len(),
        pairs.len(),
        spec.d_x()
    ));
    Ok(Vec::new())
}

fn subsample(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    let mut idx = Rng::new(seed).permutation(n);
    idx.truncate(cap.min(n));
    idx
}

fn permutation_json(t: &PermutationTest) -> serde_json::Value {
    serde_json::to_value(t).unwrap_or(serde_json::Value::Null)
}

fn stage_units(cfg: &ExperimentConfig, art: &mut Artifacts, log: &mut dyn FnMut(&str)) -> Result<Vec<Check>> {
    let ds = read_dataset(art.dir, TRAIN_DATA)?;
    let k = cfg.units();
    let policy = cfg.ref_cond.map_or(RefCondPolicy::MostRecords, RefCondPolicy::Fixed);
    let (model, labelled) = build_proxy(&ds, k, policy, sub_seed(cfg.seed, seed_stage::UNITS))?;
    art.write(UNITS, &model.to_bytes())?;
    art.write(TRAIN_PROXY, &labelled.to_bytes())?;

    let asym = asymmetry_check(&model, cfg.gap_tol);
    art.json(
        "asymmetry.json",
        &json!({
            "seed": cfg.seed,
            "ref_cond": model.ref_cond,
            "prior_hist": model.prior_hist,
            "dist_matrix": model.dist_matrix,
            "report": asym,
        }),
    )?;

    let hsic_seed = sub_seed(cfg.seed, seed_stage::HSIC);
    let idx = subsample(labelled.len(), cfg.hsic_n, hsic_seed);
    let proxy = labelled.proxy_labels()?;
    let cond = labelled.cond_ids()?;
    let pick = |v: &[u32]| -> Vec<u32> { idx.iter().map(|&i| v[i]).collect() };
    let cond_s = categorical(&pick(&cond));
    let proxy_test = hsic_permutation_test(
        &categorical(&pick(&proxy)),
        &cond_s,
        Kernel::Delta,
        Kernel::Delta,
        cfg.n_perm,
        hsic_seed,
    )?;
    let raw: Vec<Vec<f64>> = idx.iter().map(|&i| labelled.records[i].x.clone()).collect();
    let contrast = hsic_permutation_test(&raw, &cond_s, Kernel::MEDIAN_RBF, Kernel::Delta, cfg.n_perm, hsic_seed)?;
    art.json(
        "hsic_proxy.json",
        &json!({
            "seed": cfg.seed,
            "proxy_vs_condition": permutation_json(&proxy_test),
            "raw_vs_condition": permutation_json(&contrast),
        }),
    )?;
    log(&format!(
        "units: k = {k}, reference condition {}, min off-diagonal D = {:.4e}",
        model.ref_cond, asym.min_off_diagonal
    ));
    Ok(vec![
        Check {
            name: "prior_asymmetry".into(),
            passed: asym.passed,
            detail: format!("min off-diagonal {:.4e}, tolerance {:.1e}", asym.min_off_diagonal, cfg.gap_tol),
        },
        Check {
            name: "proxy_independence".into(),
            passed: proxy_test.p_value > 0.05,
            detail: format!("p = {:.4}", proxy_test.p_value),
        },
    ])
}

#[derive(Serialize)]
struct TraceRow {
    epoch: usize,
    recon: f64,
    indep: f64,
    total: f64,
}

fn rmse_per_element(model: &IcaeModel, records: &[Record]) -> Result<f64> {
    let mut se = 0.0;
    let mut count = 0usize;
    for r in records {
        se += sq_dist(&model.convert(&r.x, &r.c)?, &r.x);
        count += r.x.len();
    }
    Ok((se / count.max(1) as f64).sqrt())
}

fn stage_train(cfg: &ExperimentConfig, art: &mut Artifacts, log: &mut dyn FnMut(&str)) -> Result<Vec<Check>> {
    let ds = read_dataset(art.dir, TRAIN_PROXY)?;
    let units = read_units(art.dir)?;
    let mut model = IcaeModel::new(
        ds.d_x,
        ds.d_c,
        cfg.d_latent,
        &cfg.hidden_dims,
        cfg.activation,
        units.k,
        sub_seed(cfg.seed, seed_stage::INIT),
    )?;
    let tc = TrainConfig {
        lambda: cfg.lambda,
        lr: cfg.lr,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        seed: sub_seed(cfg.seed, seed_stage::SHUFFLE),
        shuffle: true,
    };
    let trace = train(&mut model, &ds, &tc)?;
    art.write(MODEL, &model.to_bytes())?;
    let rows: Vec<TraceRow> = trace
        .iter()
        .map(|e| TraceRow {
            epoch: e.epoch,
            recon: e.recon,
            indep: e.indep,
            total: e.total,
        })
        .collect();
    art.csv(LOSS_TRACE, &rows)?;
    let train_rmse = rmse_per_element(&model, &ds.records)?;
    art.json(
        "train.json",
        &json!({
            "seed": cfg.seed,
            "train_config": tc,
            "hidden_dims": cfg.hidden_dims,
            "d_latent": cfg.d_latent,
            "k": units.k,
            "label_scale": model.label_scale,
            "first_epoch": trace.first(),
            "final_epoch": trace.last(),
            "train_rmse": train_rmse,
        }),
    )?;
    if let Some(last) = trace.last() {
        log(&format!(
            "train: {} epochs, final recon {:.4e}, indep {:.4e}, rmse {:.4}",
            trace.len(),
            last.recon,
            last.indep,
            train_rmse
        ));
    }
    Ok(Vec::new())
}

#[derive(Serialize)]
struct ConversionRow {
    pair: usize,
    shared_s: usize,
    cond_src: usize,
    cond_tgt: usize,
    conv_error: f64,
    recon_error: f64,
    baseline_error: f64,
}

fn stage_convert(art: &mut Artifacts, log: &mut dyn FnMut(&str)) -> Result<Vec<Check>> {
    let model = read_model(art.dir)?;
    let src = read_dataset(art.dir, EVAL_SRC).context("conversion needs parallel evaluation pairs")?;
    let tgt = read_dataset(art.dir, EVAL_TGT)?;
    let pairs = datasets_to_pairs(&src, &tgt)?;
    let mut rows = Vec::with_capacity(pairs.len());
    let mut converted = Vec::with_capacity(pairs.len());
    let mut se = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        let mut x_hat = model.convert(&p.x_src, &p.c_tgt)?;
        let recon = model.convert(&p.x_tgt, &p.c_tgt)?;
        let recon_error = sq_dist(&recon, &p.x_tgt);
        se += recon_error;
        rows.push(ConversionRow {
            pair: i,
            shared_s: p.shared_s,
            cond_src: p.cond_src,
            cond_tgt: p.cond_tgt,
            conv_error: sq_dist(&x_hat, &p.x_tgt),
            recon_error,
            baseline_error: sq_dist(&p.x_src, &p.x_tgt),
        });
        round_f32(&mut x_hat);
        converted.push(Record {
            x: x_hat,
            c: p.c_tgt.clone(),
            cond_id: Some(p.cond_tgt as u32),
            true_s: Some(p.shared_s as u32),
            proxy_s: None,
        });
    }
    let out = FrameDataset::new(src.d_x, src.d_c, converted)?;
    art.write(CONVERTED, &out.to_bytes())?;
    art.csv(CONVERSION_CSV, &rows)?;
    let col = |f: fn(&ConversionRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let med_conv = median(&col(|r| r.conv_error));
    let med_recon = median(&col(|r| r.recon_error));
    let med_base = median(&col(|r| r.baseline_error));
    let rmse = (se / (pairs.len() * src.d_x) as f64).sqrt();
    art.json(
        "conversion.json",
        &json!({
            "n_pairs": pairs.len(),
            "recon_rmse": rmse,
            "median_conv_error": med_conv,
            "median_recon_error": med_recon,
            "median_baseline_error": med_base,
            "conv_over_recon": med_conv / med_recon,
            "conv_over_baseline": med_conv / med_base,
        }),
    )?;
    log(&format!(
        "convert: {} pairs, median conversion {:.4e}, reconstruction {:.4e}, baseline {:.4e}",
        pairs.len(),
        med_conv,
        med_recon,
        med_base
    ));
    Ok(Vec::new())
}

fn stage_verify(cfg: &ExperimentConfig, art: &mut Artifacts, log: &mut dyn FnMut(&str)) -> Result<Vec<Check>> {
    let model = read_model(art.dir)?;
    let units = read_units(art.dir)?;
    let ds = read_dataset(art.dir, TRAIN_PROXY)?;
    let verify_seed = sub_seed(cfg.seed, seed_stage::VERIFY);
    let mut checks = Vec::new();

    let hsic_seed = sub_seed(cfg.seed, seed_stage::HSIC);
    let idx = subsample(ds.len(), cfg.hsic_n, hsic_seed);
    let cond = ds.cond_ids()?;
    let latents: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| model.encode(&ds.records[i].x))
        .collect::<icae_core::Result<_>>()?;
    let cond_s = categorical(&idx.iter().map(|&i| cond[i]).collect::<Vec<_>>());
    let latent_test = hsic_permutation_test(&latents, &cond_s, Kernel::MEDIAN_RBF, Kernel::Delta, cfg.n_perm, hsic_seed);
    art.json(
        "hsic_latent.json",
        &json!({
            "seed": cfg.seed,
            "latent_vs_condition": latent_test.as_ref().map(permutation_json).unwrap_or_else(|e| json!({"error": e.to_string()})),
        }),
    )?;

    if !cfg.synthetic() {
        let recon = measure_reconstruction(&model, &ds)?;
        art.json("reconstruction.json", &json!({ "seed": cfg.seed, "report": recon }))?;
        log(&format!("verify: reconstruction epsilon {:.4e}", recon.epsilon));
        return Ok(checks);
    }

    let spec = synthetic_spec(cfg)?;
    let src = read_dataset(art.dir, EVAL_SRC)?;
    let tgt = read_dataset(art.dir, EVAL_TGT)?;
    let pairs = datasets_to_pairs(&src, &tgt)?;
    if pairs.is_empty() {
        bail!("no evaluation pairs");
    }

    let bound = check_error_bound_with(&model, &pairs, verify_seed, cfg.lipschitz_pairs)?;
    art.json("error_bound.json", &json!({ "seed": cfg.seed, "report": bound }))?;
    checks.push(Check {
        name: "error_bound".into(),
        passed: bound.holds_fraction == 1.0,
        detail: format!(
            "holds for {:.4} of pairs, bound {:.4e}, max conversion error {:.4e}",
            bound.holds_fraction, bound.bound, bound.max_conv_error
        ),
    });

    let ref_cond = units.ref_cond as usize;
    let inj = check_injectivity(&model, &spec, ref_cond.min(spec.k_c - 1), cfg.margin_tol)?;
    art.json("injectivity.json", &json!({ "seed": cfg.seed, "report": inj }))?;
    checks.push(Check {
        name: "injectivity".into(),
        passed: inj.passed,
        detail: format!("min margin {:.4e}, tolerance {:.1e}", inj.min_margin, cfg.margin_tol),
    });

    let tcons = check_t_consistency(&model, &spec)?;
    let sil_idx = subsample(tgt.len(), SILHOUETTE_CAP, verify_seed);
    let sil_points: Vec<Vec<f64>> = sil_idx
        .iter()
        .map(|&i| model.encode(&tgt.records[i].x))
        .collect::<icae_core::Result<_>>()?;
    let sil_labels: Vec<u32> = sil_idx.iter().map(|&i| tgt.records[i].true_s.unwrap_or(0)).collect();
    let sil = silhouette(&sil_points, &sil_labels).ok();
    art.json(
        "t_consistency.json",
        &json!({
            "seed": cfg.seed,
            "spread_tol": cfg.spread_tol,
            "latent_silhouette": sil,
            "report": tcons,
        }),
    )?;
    checks.push(Check {
        name: "t_consistency".into(),
        passed: tcons.passes(cfg.spread_tol),
        detail: format!(
            "spread ratio {}, tolerance {}",
            tcons.spread_ratio.map_or("undefined".into(), |r| format!("{r:.4}")),
            cfg.spread_tol
        ),
    });
    log(&format!(
        "verify: epsilon {:.4e}, epsilon' {:.4e}, L {:.4e}, bound {:.4e}",
        bound.epsilon, bound.epsilon_prime, bound.lipschitz_hat, bound.bound
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            k_s: 4,
            k_c: 3,
            d_u: 3,
            d_c: 2,
            n_train: 600,
            n_eval: 50,
            hidden_dims: vec![8],
            epochs: 3,
            batch_size: 32,
            hsic_n: 200,
            lipschitz_pairs: 50,
            ..ExperimentConfig::default()
        }
    }

    fn quiet() -> impl FnMut(&str) {
        |_: &str| {}
    }

    #[test]
    fn full_run_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_pipeline(&small(), dir.path(), Stage::All, &mut quiet()).unwrap();
        for name in [
            TRAIN_DATA,
            TRAIN_PROXY,
            EVAL_SRC,
            EVAL_TGT,
            UNITS,
            MODEL,
            CONVERTED,
            LOSS_TRACE,
            CONVERSION_CSV,
            "asymmetry.json",
            "hsic_proxy.json",
            "train.json",
            "conversion.json",
            "error_bound.json",
            "injectivity.json",
            "t_consistency.json",
            "hsic_latent.json",
            "spec.json",
            "config.txt",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        assert_eq!(summary.checks.len(), 5);
        let trace = std::fs::read_to_string(dir.path().join(LOSS_TRACE)).unwrap();
        assert_eq!(trace.lines().count(), 4);
        assert!(trace.starts_with("epoch,recon,indep,total"));
    }

    #[test]
    fn stages_run_one_at_a_time() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        for s in [Stage::Gen, Stage::Units, Stage::Train, Stage::Convert, Stage::Verify] {
            run_pipeline(&cfg, dir.path(), s, &mut quiet()).unwrap();
        }
        let other = tempfile::tempdir().unwrap();
        run_pipeline(&cfg, other.path(), Stage::All, &mut quiet()).unwrap();
        for name in ["error_bound.json", "conversion.json", MODEL] {
            assert_eq!(
                std::fs::read(dir.path().join(name)).unwrap(),
                std::fs::read(other.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn missing_condition_ids_fail_units_and_leave_no_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = synthetic_spec(&small()).unwrap();
        let mut ds = spec.sample_dataset(100, 1).unwrap();
        for r in ds.records.iter_mut() {
            r.cond_id = None;
        }
        let input = dir.path().join("ext.icae");
        std::fs::write(&input, ds.to_bytes()).unwrap();
        let out = dir.path().join("run");
        let cfg = ExperimentConfig {
            input: Some(input),
            k_units: Some(4),
            ..small()
        };
        run_pipeline(&cfg, &out, Stage::Gen, &mut quiet()).unwrap();
        let err = run_pipeline(&cfg, &out, Stage::Units, &mut quiet()).unwrap_err();
        assert!(format!("{err:#}").contains("cond_id"), "{err:#}");
        assert!(!out.join(UNITS).exists());
        assert!(!out.join(TRAIN_PROXY).exists());
        let leftovers: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(leftovers.len(), 2, "{leftovers:?}");
    }

    #[test]
    fn later_stage_without_inputs_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(run_pipeline(&small(), dir.path(), Stage::Train, &mut quiet()).is_err());
    }

    #[test]
    fn artifacts_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        run_pipeline(&small(), dir.path(), Stage::All, &mut quiet()).unwrap();
        for name in [TRAIN_DATA, TRAIN_PROXY, EVAL_SRC, CONVERTED] {
            let bytes = std::fs::read(dir.path().join(name)).unwrap();
            assert_eq!(FrameDataset::from_bytes(&bytes).unwrap().to_bytes(), bytes, "{name}");
        }
        let bytes = std::fs::read(dir.path().join(UNITS)).unwrap();
        assert_eq!(UnitModel::from_bytes(&bytes).unwrap().to_bytes(), bytes);
        let bytes = std::fs::read(dir.path().join(MODEL)).unwrap();
        assert_eq!(IcaeModel::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }
}
