//! Dataset arguments: file paths or `synth:<process>[:<days>x<assets>]`.

use std::path::{Path, PathBuf};

use olps_core::{
    load_prices, load_relatives, synth_market, to_relatives, InputKind, MarketScenario,
    PriceMatrix, RelativeMatrix,
};

use crate::error::CliError;

const SYNTH_DAYS: usize = 500;
const SYNTH_ASSETS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Synthetic {
        scenario: MarketScenario,
        label: String,
    },
}

impl Source {
    pub fn parse(arg: &str, seed: u64) -> Result<Self, CliError> {
        let Some(rest) = arg.strip_prefix("synth:") else {
            return Ok(Source::File(PathBuf::from(arg)));
        };
        let (process, size) = match rest.split_once(':') {
            Some((p, s)) => (p, Some(s)),
            None => (rest, None),
        };
        let (days, assets) = match size {
            None => (SYNTH_DAYS, SYNTH_ASSETS),
            Some(s) => {
                let parsed = s
                    .split_once('x')
                    .and_then(|(d, a)| Some((d.parse().ok()?, a.parse().ok()?)));
                parsed.ok_or_else(|| {
                    CliError::Validation(format!(
                        "bad synthetic size {s:?}, expected <days>x<assets>"
                    ))
                })?
            }
        };
        let scenario = match process {
            "alternating" => MarketScenario::alternating(days, assets),
            "random-walk" => MarketScenario::random_walk(days, assets, 0.0, 0.02),
            "mean-reverting" => MarketScenario::mean_reverting(days, assets, 0.1, 0.02),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown synthetic process {other:?} (alternating, random-walk, mean-reverting)"
                )))
            }
        };
        Ok(Source::Synthetic {
            scenario,
            label: format!("synth-{process}-{days}x{assets}-s{seed}"),
        })
    }

    /// Short name used in tables and output file names.
    pub fn label(&self) -> String {
        match self {
            Source::File(path) => file_stem(path),
            Source::Synthetic { label, .. } => label.clone(),
        }
    }

    pub fn relatives(&self, kind: InputKind, seed: u64) -> Result<RelativeMatrix, CliError> {
        match (self, kind) {
            (Source::File(path), InputKind::Relatives) => {
                load_relatives(path).map_err(|e| CliError::data(path.display(), e))
            }
            _ => to_relatives(&self.prices(seed)?).map_err(|e| CliError::data(self.label(), e)),
        }
    }

    pub fn prices(&self, seed: u64) -> Result<PriceMatrix, CliError> {
        match self {
            Source::File(path) => load_prices(path).map_err(|e| CliError::data(path.display(), e)),
            Source::Synthetic { scenario, label } => synth_market(scenario, seed)
                .map_err(|e| CliError::Validation(format!("{label}: {e}"))),
        }
    }
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_owned())
}
