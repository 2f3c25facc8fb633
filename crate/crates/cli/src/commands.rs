use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device};
use primasm_core::dataset::{
    read_dataset, read_point_file, read_record_dir, read_record_file, write_dataset, write_record_file, DatasetRecord,
};
use primasm_core::geometry::canonicalize_assembly;
use primasm_core::metrics::{evaluate, evaluate_batch, write_report_csv, write_report_json, EvalReport, GroundTruth};
use primasm_core::synthetic::generate_dataset;
use primasm_core::{Assembly, PointCloud};
use primasm_model::checkpoint::load_model;
use primasm_model::train::LogWriter;
use primasm_model::{generate, prepare_samples, PrimitiveTransformer, Trainer};

use crate::config::{prepare_output, RunConfig};
use crate::error::{io_error, CliError, Kind, Result};
use crate::obj::assembly_to_obj;

fn not_found(path: &Path) -> CliError {
    CliError::new(Kind::NotFound, format!("{}: no such file or directory", path.display()))
}

/// Records from a `.jsonl` dataset, a single `.json` record, or a directory
/// of either.
pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>> {
    if path.is_dir() {
        return Ok(read_record_dir(path)?);
    }
    if !path.exists() {
        return Err(not_found(path));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(vec![read_record_file(path)?]),
        _ => Ok(read_dataset(path)?),
    }
}

fn write_records(records: &[DatasetRecord], path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") if records.len() == 1 => Ok(write_record_file(&records[0], path)?),
        _ => Ok(write_dataset(records, path)?),
    }
}

fn file_name(path: &Path) -> Result<&std::ffi::OsStr> {
    path.file_name()
        .ok_or_else(|| CliError::validation(format!("{} has no file name", path.display())))
}

pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.require_seed("gen-data")?;
    prepare_output(out, cfg)?;
    let d = &cfg.data;
    let mut records = generate_dataset(&d.generator, d.count + d.val_count, d.points)?;
    let val = records.split_off(d.count);
    write_dataset(&records, &out.join("train.jsonl"))?;
    if !val.is_empty() {
        write_dataset(&val, &out.join("val.jsonl"))?;
    }
    log::info!("wrote {} training and {} held-out records to {}", records.len(), val.len(), out.display());
    Ok(())
}

pub fn train(cfg: &RunConfig, out: &Path, data: Option<&Path>, resume: Option<&Path>) -> Result<()> {
    cfg.require_seed("train")?;
    let data = data
        .or(cfg.paths.data.as_deref())
        .ok_or_else(|| CliError::validation("train needs --data or paths.data"))?;
    let records = read_records(data)?;
    let device = Device::Cpu;
    let mut trainer = match resume {
        Some(ckpt) => Trainer::resume(ckpt, &device, DType::F32)?,
        None => Trainer::new(PrimitiveTransformer::new(&cfg.model, &device, DType::F32)?, cfg.train.clone())?,
    };
    let model_cfg = trainer.model().config().clone();
    let samples = prepare_samples(&records, &model_cfg, cfg.train.seed)?;
    prepare_output(out, cfg)?;
    let ckpt_dir = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).map_err(|e| io_error(&ckpt_dir, e))?;
    let mut log = LogWriter::create(&out.join("train_log.csv"))?;
    let total = trainer.total_steps(samples.len());
    let mut write_err = None;
    trainer.run(&samples, None, Some(&ckpt_dir), |row| {
        if row.step % 50 == 0 || row.step + 1 == total {
            log::info!("step {}/{} loss {:.4} (ce {:.4} eos {:.4} cd {:.4})", row.step + 1, total, row.total, row.l_ce, row.l_eos, row.l_cd);
        }
        if write_err.is_none() {
            write_err = log.write(row).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    Ok(())
}

/// Slack for surface samples of assemblies that touch the cube faces.
const CUBE_SLACK: f64 = 1e-6;

fn check_unit_cube(id: &str, cloud: &PointCloud) -> Result<()> {
    if cloud.points().iter().flatten().any(|v| v.abs() > 1.0 + CUBE_SLACK) {
        return Err(CliError::validation(format!(
            "{id}: points must lie in [-1, 1]^3; normalize the cloud first"
        )));
    }
    Ok(())
}

pub fn infer(cfg: &RunConfig, out: &Path, input: &Path, checkpoint: Option<&Path>) -> Result<()> {
    cfg.require_seed("infer")?;
    let checkpoint = checkpoint
        .or(cfg.paths.checkpoint.as_deref())
        .ok_or_else(|| CliError::validation("infer needs --checkpoint or paths.checkpoint"))?;
    if !checkpoint.exists() {
        return Err(not_found(checkpoint));
    }
    if !input.exists() {
        return Err(not_found(input));
    }
    let is_records = input.is_dir() || matches!(input.extension().and_then(|e| e.to_str()), Some("json" | "jsonl"));
    let clouds: Vec<(String, PointCloud)> = if is_records {
        read_records(input)?.into_iter().filter_map(|r| r.points.map(|p| (r.id, p))).collect()
    } else {
        let stem = input.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
        vec![(stem, read_point_file(input)?)]
    };
    if clouds.is_empty() {
        return Err(CliError::validation(format!("{} holds no point clouds", input.display())));
    }
    let (model, d) = load_model(checkpoint, &Device::Cpu, DType::F32)?;
    prepare_output(out, cfg)?;
    for (id, cloud) in &clouds {
        check_unit_cube(id, cloud)?;
        let g = generate(&model, &d, cloud, &cfg.sampling)?;
        let record = DatasetRecord { id: id.clone(), assembly: g.assembly, points: None, labels: None };
        write_record_file(&record, &out.join(format!("{id}.json")))?;
        log::info!("{id}: {} primitives ({:?})", g.tokens.len(), g.termination);
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, out: &Path, pred: &Path, gt: &Path) -> Result<Vec<EvalReport>> {
    let preds = read_records(pred)?;
    let gts: BTreeMap<String, DatasetRecord> = read_records(gt)?.into_iter().map(|r| (r.id.clone(), r)).collect();
    if preds.is_empty() {
        return Err(CliError::validation(format!("no predictions in {}", pred.display())));
    }
    let missing: Vec<&str> = preds.iter().filter(|p| !gts.contains_key(&p.id)).map(|p| p.id.as_str()).collect();
    if !missing.is_empty() {
        return Err(CliError::validation(format!("no ground truth for {missing:?}")));
    }
    let empty: Vec<&str> = preds.iter().filter(|p| p.assembly.is_empty()).map(|p| p.id.as_str()).collect();
    if !empty.is_empty() {
        return Err(CliError::validation(format!("empty predicted assemblies: {empty:?}")));
    }
    let mut with_assembly = Vec::new();
    let mut reports = Vec::new();
    for p in &preds {
        let g = &gts[&p.id];
        if g.assembly.is_empty() {
            let cloud = g
                .labeled_points()
                .or_else(|| g.points.clone())
                .ok_or_else(|| CliError::validation(format!("{}: ground truth has neither primitives nor points", g.id)))?;
            reports.push((p.id.clone(), evaluate(&p.id, &p.assembly, GroundTruth::Points(&cloud), &cfg.eval)?));
        } else {
            with_assembly.push((p.id.clone(), p.assembly.clone(), g.assembly.clone()));
        }
    }
    for r in evaluate_batch(&with_assembly, &cfg.eval)? {
        reports.push((r.id.clone(), r));
    }
    let order: BTreeMap<&str, usize> = preds.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    reports.sort_by_key(|(id, _)| order[id.as_str()]);
    let reports: Vec<EvalReport> = reports.into_iter().map(|(_, r)| r).collect();
    prepare_output(out, cfg)?;
    write_report_csv(&reports, &out.join("report.csv"))?;
    write_report_json(&reports, &out.join("report.json"))?;
    Ok(reports)
}

pub fn canon(input: &Path, output: &Path) -> Result<()> {
    let mut records = read_records(input)?;
    for r in &mut records {
        r.assembly = canonicalize_assembly(&r.assembly)?;
    }
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    write_records(&records, output)
}

pub fn canon_output(input: &Path, out: &Path) -> Result<PathBuf> {
    Ok(out.join(file_name(input)?))
}

pub fn export_mesh(input: &Path, output: &Path, resolution: usize) -> Result<()> {
    if resolution < 3 {
        return Err(CliError::validation("mesh resolution must be at least 3"));
    }
    let records = read_records(input)?;
    let assemblies: Vec<(String, Assembly)> = records.into_iter().map(|r| (r.id, r.assembly)).collect();
    let write = |path: &Path, a: &Assembly| -> Result<()> {
        a.validate()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        std::fs::write(path, assembly_to_obj(a, resolution)).map_err(|e| io_error(path, e))
    };
    match assemblies.as_slice() {
        [] => Err(CliError::validation(format!("{} holds no assemblies", input.display()))),
        [(_, a)] if output.extension().is_some_and(|e| e == "obj") => write(output, a),
        many => {
            for (id, a) in many {
                write(&output.join(format!("{id}.obj")), a)?;
            }
            Ok(())
        }
    }
}
