//! Running a sweep and re-rendering its results.
//!
//! Output layout:
//!
//! ```text
//! <out>/config.json          resolved experiment config
//! <out>/splits/seed<s>.json  split manifests
//! <out>/records/*.json       one record per (loss, seed)
//! <out>/curves/*.csv         epoch, train_loss, val_mae, val_soi
//! <out>/checkpoints/*.ckpt   parameters of the selected epoch
//! <out>/table.csv
//! <out>/table.md
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use unimodal_core::data::{self, Dataset};
use unimodal_core::trainer::{self, TrainConfig};

use crate::checkpoint;
use crate::config::{DatasetConfig, ExperimentConfig};
use crate::csv_io;
use crate::error::{CliError, Result};
use crate::manifest::SplitManifest;
use crate::record::{self, RecordFile, Skipped};
use crate::table::ComparisonTable;

/// Result of [`run`]: the table and the ids of runs that failed.
#[derive(Debug)]
pub struct RunOutcome {
    pub table: ComparisonTable,
    pub records: Vec<RecordFile>,
    pub failures: Vec<String>,
}

struct Splits {
    seed: u64,
    train: Dataset,
    validation: Dataset,
    test: Dataset,
}

struct Job<'a> {
    sweep_index: usize,
    name: String,
    seed: u64,
    cfg: TrainConfig,
    data: &'a Splits,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn prepare_data(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Splits>> {
    let file_data = match &cfg.dataset {
        DatasetConfig::Csv { path } => Some(csv_io::read_dataset(path)?),
        DatasetConfig::Synthetic(_) => None,
    };
    let mut all = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let ds = match (&cfg.dataset, &file_data) {
            (DatasetConfig::Synthetic(spec), _) => {
                let mut spec = spec.clone();
                spec.sample_seed = spec.sample_seed.wrapping_add(seed);
                data::generate(&spec)?
            }
            (DatasetConfig::Csv { .. }, Some(ds)) => ds.clone(),
            (DatasetConfig::Csv { .. }, None) => unreachable!("file dataset is loaded above"),
        };
        let split_seed = cfg.split.seed.wrapping_add(seed);
        let split = data::split(&ds, cfg.split.fractions, split_seed)?;
        for w in &split.warnings {
            warn!("seed {seed}: {w}");
        }
        SplitManifest::new(&split, cfg.split.fractions, split_seed)
            .write(&out.join("splits").join(format!("seed{seed}.json")))?;
        all.push(Splits {
            seed,
            train: ds.subset(&split.train)?,
            validation: ds.subset(&split.validation)?,
            test: ds.subset(&split.test)?,
        });
    }
    Ok(all)
}

fn execute(job: &Job<'_>, out: &Path) -> Result<RecordFile> {
    let started = Instant::now();
    let result = trainer::train(&job.data.train, &job.data.validation, &job.data.test, &job.cfg);
    let elapsed = started.elapsed().as_secs_f64();
    let (mut rec, trained) = match result {
        Ok(run) => (run.record.clone(), Some(run)),
        Err(failure) => {
            let classes = job.data.train.space().classes();
            let mut rec = failure
                .record
                .map(|r| *r)
                .unwrap_or_else(|| trainer::failed_placeholder(&job.cfg, classes, &failure.error));
            rec.failure.get_or_insert_with(|| failure.error.to_string());
            (rec, None)
        }
    };
    rec.wall_time_secs = elapsed;
    let file = RecordFile {
        schema_version: record::SCHEMA_VERSION,
        name: job.name.clone(),
        sweep_index: job.sweep_index,
        seed: job.seed,
        record: rec,
    };
    let stem = file.file_stem();
    file.write(&out.join("records").join(format!("{stem}.json")))?;
    record::write_curve(
        &out.join("curves").join(format!("{stem}.csv")),
        &record::curve(&file.record),
    )?;
    if let Some(run) = trained {
        checkpoint::write(
            &out.join("checkpoints").join(format!("{stem}.ckpt")),
            &run.model,
            &run.standardizer,
        )?;
    }
    Ok(file)
}

/// Trains every (sweep entry, seed) pair and writes all artifacts under `out`.
///
/// Runs are spread over `cfg.workers` threads. A failed run is recorded and
/// reported in [`RunOutcome::failures`]; the table keeps the other rows.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    for sub in ["", "splits", "records", "curves", "checkpoints"] {
        create_dir(&out.join(sub))?;
    }
    let resolved = out.join("config.json");
    fs::write(
        &resolved,
        serde_json::to_string_pretty(cfg).expect("config serialises") + "\n",
    )
    .map_err(|e| CliError::io(&resolved, e))?;

    let splits = prepare_data(cfg, out)?;
    let jobs: Vec<Job<'_>> = cfg
        .sweep
        .iter()
        .enumerate()
        .flat_map(|(i, entry)| {
            splits.iter().map(move |data| Job {
                sweep_index: i,
                name: entry.name(),
                seed: data.seed,
                cfg: cfg.train_config(entry, data.seed),
                data,
            })
        })
        .collect();

    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<RecordFile>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let workers = cfg.workers.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                info!("training {} seed {} ({}/{})", job.name, job.seed, i + 1, jobs.len());
                let r = execute(job, out);
                *results[i].lock().expect("result slot") = Some(r);
            });
        }
    });

    let mut records = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for slot in results {
        let file = slot.into_inner().expect("result slot").expect("every job ran")?;
        if let Some(msg) = &file.record.failure {
            warn!("{} seed {} failed: {msg}", file.name, file.seed);
            failures.push(format!("{} seed {}: {msg}", file.name, file.seed));
        }
        records.push(file);
    }
    let table = ComparisonTable::from_records(&records);
    write_tables(&table, out)?;
    Ok(RunOutcome {
        table,
        records,
        failures,
    })
}

fn write_tables(table: &ComparisonTable, out: &Path) -> Result<()> {
    let csv = out.join("table.csv");
    fs::write(&csv, table.to_csv()).map_err(|e| CliError::io(&csv, e))?;
    let md = out.join("table.md");
    fs::write(&md, table.to_markdown()).map_err(|e| CliError::io(&md, e))
}

/// Records read back from a run directory plus one warning per skipped file.
#[derive(Debug)]
pub struct Loaded {
    pub records: Vec<RecordFile>,
    pub warnings: Vec<String>,
}

/// Reads every `*.json` under `<dir>/records`, or under `dir` itself when it has no `records` folder.
pub fn load_records(dir: &Path) -> Result<Loaded> {
    let nested = dir.join("records");
    let dir: PathBuf = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| CliError::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("{}: unreadable: {e}", path.display()));
                continue;
            }
        };
        match RecordFile::parse(&text) {
            Ok(r) => records.push(r),
            Err(Skipped::Corrupt(m)) => warnings.push(format!("{}: corrupt record skipped: {m}", path.display())),
            Err(Skipped::Version(v)) => warnings.push(format!(
                "{}: schema version {v} does not match {}, skipped",
                path.display(),
                record::SCHEMA_VERSION
            )),
        }
    }
    if records.is_empty() {
        warnings.push(format!("{}: no run records found", dir.display()));
    }
    Ok(Loaded { records, warnings })
}

/// Re-renders the table of a run directory; with `smooth = Some(w)` also
/// writes moving-average curves to `<dir>/curves-smooth<w>/`.
pub fn report(dir: &Path, smooth: Option<usize>) -> Result<(ComparisonTable, Vec<String>)> {
    let loaded = load_records(dir)?;
    if let Some(w) = smooth {
        let target = dir.join(format!("curves-smooth{w}"));
        create_dir(&target)?;
        for r in &loaded.records {
            let rows = record::smooth(&record::curve(&r.record), w);
            record::write_curve(&target.join(format!("{}.csv", r.file_stem())), &rows)?;
        }
    }
    Ok((ComparisonTable::from_records(&loaded.records), loaded.warnings))
}
