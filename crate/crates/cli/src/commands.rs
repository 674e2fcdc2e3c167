use std::fs;
use std::path::{Path, PathBuf};

use olps_core::market_data::split_indices;
use olps_core::{
    describe as describe_data, render_summaries, run as backtest, summarize, BacktestResult,
    CostModel, InputKind, RelativeMatrix, StrategySpec, TableFormat,
};
use rayon::prelude::*;

use crate::error::CliError;
use crate::source::Source;

pub struct Settings {
    pub data: Vec<Source>,
    pub input_kind: InputKind,
    pub format: TableFormat,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

pub struct RunPlan {
    pub specs: Vec<StrategySpec>,
    pub gammas: Vec<f64>,
    pub threads: Option<usize>,
}

fn extension(format: TableFormat) -> &'static str {
    match format {
        TableFormat::Csv => "csv",
        TableFormat::Markdown => "md",
    }
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {err}", path.display()))
}

/// Writes all files or, if the directory cannot be prepared, none.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn require_data(settings: &Settings) -> Result<(), CliError> {
    if settings.data.is_empty() {
        Err(CliError::Validation(
            "no datasets given (use --data)".into(),
        ))
    } else {
        Ok(())
    }
}

pub fn run(settings: &Settings, plan: &RunPlan) -> Result<(), CliError> {
    require_data(settings)?;
    let mut datasets: Vec<(String, RelativeMatrix)> = Vec::new();
    for source in &settings.data {
        let label = source.label();
        if datasets.iter().any(|(l, _)| *l == label) {
            return Err(CliError::Validation(format!(
                "dataset name {label:?} appears twice"
            )));
        }
        datasets.push((label, source.relatives(settings.input_kind, settings.seed)?));
    }

    let jobs: Vec<(usize, usize, &StrategySpec)> = (0..plan.gammas.len())
        .flat_map(|g| {
            (0..datasets.len()).flat_map(move |d| plan.specs.iter().map(move |s| (g, d, s)))
        })
        .collect();
    let execute = || {
        jobs.par_iter()
            .map(|&(g, d, spec)| {
                let (label, data) = &datasets[d];
                let cost = CostModel::new(plan.gammas[g])?;
                backtest(data, spec, cost).map(|r| r.named(label.clone()))
            })
            .collect::<Result<Vec<BacktestResult>, _>>()
    };
    let results = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start {n} threads: {e}")))?
            .install(execute),
        None => execute(),
    }?;

    // Everything is rendered before anything is written.
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut stdout = String::new();
    let per_gamma = datasets.len() * plan.specs.len();
    for (g, chunk) in results.chunks(per_gamma).enumerate() {
        let gamma = plan.gammas[g];
        let table = summarize(chunk)?.render(settings.format);
        if g > 0 {
            stdout.push('\n');
        }
        stdout.push_str(&format!("gamma = {gamma}\n{table}"));
        files.push((
            format!("summary_g{gamma}.{}", extension(settings.format)),
            table.into_bytes(),
        ));
        for r in chunk {
            let mut bytes = Vec::new();
            r.write_csv(&mut bytes)
                .map_err(|e| CliError::Data(format!("cannot render run: {e}")))?;
            files.push((
                format!("{}_{}_g{gamma}.csv", r.dataset, r.strategy.kind.name()),
                bytes,
            ));
        }
    }
    if let Some(dir) = &settings.out {
        write_all(dir, &files)?;
    }
    print!("{stdout}");
    Ok(())
}

/// Describes every dataset it can load; load failures are reported after
/// the table and make the command fail.
pub fn describe(settings: &Settings) -> Result<(), CliError> {
    require_data(settings)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for source in &settings.data {
        match source.relatives(settings.input_kind, settings.seed) {
            Ok(data) => rows.push(describe_data(&data, &source.label())),
            Err(e) => failures.push(e),
        }
    }
    let table = render_summaries(&rows, settings.format);
    if let Some(dir) = &settings.out {
        if failures.is_empty() {
            let name = format!("describe.{}", extension(settings.format));
            write_all(dir, &[(name, table.clone().into_bytes())])?;
        }
    }
    print!("{table}");
    if failures.is_empty() {
        return Ok(());
    }
    for e in &failures {
        eprintln!("error: {e}");
    }
    let msg = format!(
        "{} of {} datasets could not be described",
        failures.len(),
        settings.data.len()
    );
    Err(if failures.iter().all(|e| matches!(e, CliError::Data(_))) {
        CliError::Data(msg)
    } else {
        CliError::Validation(msg)
    })
}

/// Writes `<stem>(0).csv` .. `<stem>(k-1).csv`, each holding one group of the
/// alphabetically sorted universe.
pub fn split(settings: &Settings, groups: usize) -> Result<(), CliError> {
    let [source] = settings.data.as_slice() else {
        return Err(CliError::Validation(
            "split takes exactly one --data".into(),
        ));
    };
    let stem = source.label();
    let mut files = Vec::new();
    match settings.input_kind {
        InputKind::Prices => {
            let prices = source.prices(settings.seed)?;
            for (i, group) in split_indices(prices.names(), groups)?.iter().enumerate() {
                let mut bytes = Vec::new();
                prices.select(group)?.write_csv(&mut bytes)?;
                files.push((format!("{stem}({i}).csv"), bytes, group.len()));
            }
        }
        InputKind::Relatives => {
            let data = source.relatives(InputKind::Relatives, settings.seed)?;
            for (i, group) in split_indices(data.names(), groups)?.iter().enumerate() {
                let mut bytes = Vec::new();
                data.select(group)?.write_csv(&mut bytes)?;
                files.push((format!("{stem}({i}).csv"), bytes, group.len()));
            }
        }
    }
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let payload: Vec<(String, Vec<u8>)> = files
        .iter()
        .map(|(n, b, _)| (n.clone(), b.clone()))
        .collect();
    write_all(&dir, &payload)?;
    for (name, _, assets) in &files {
        println!("{} {assets}", dir.join(name).display());
    }
    Ok(())
}
