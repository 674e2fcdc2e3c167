//! Online portfolio selection toolkit.
//!
//! The crate is organised bottom-up:
//!
//! - [`market_data`]: price and price-relative matrices, CSV ingestion,
//!   dataset summaries, universe splitting and synthetic markets.
//! - [`numerics`]: simplex projection, moving-average predictors and the
//!   small vector helpers shared by the strategies.
//! - [`strategies`]: BAH, CRP, SMR, SMAR, PAMR, OLMAR and the two TCO
//!   variants, each driven through a common [`strategies::StrategyState`].
//! - [`backtest`]: the day loop, the proportional commission model and the
//!   cumulative-wealth tables.
//! - [`oracle`]: brute-force grid-search solvers used to check the closed-form
//!   updates in tests. Not meant for production use.

pub mod backtest;
mod error;
pub mod market_data;
pub mod numerics;
pub mod oracle;
pub mod strategies;

pub use backtest::{
    day_factor, default_specs, down_day_probe, format_wealth, run, single_asset_down_day_probe,
    summarize, BacktestResult, CostModel, DayFactor, DayRecord, SummaryTable,
};
pub use error::{Error, Result};
pub use market_data::{
    describe, filter_by_listing, load_dataset, load_price_table, load_prices, load_relatives,
    render_summaries, split_universe, synth_market, to_relatives, DatasetSummary, InputKind,
    MarketScenario, PriceMatrix, PriceProcess, PriceTable, RelativeMatrix, TableFormat,
};
pub use numerics::{Portfolio, PredictedRelative};
pub use strategies::{StrategyKind, StrategySpec, StrategyState};
