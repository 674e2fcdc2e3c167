//! Price data: loading, validation, price relatives, summaries, universe
//! splitting and synthetic markets.
//!
//! Files are CSV with a `date,TICKER1,TICKER2,...` header and one row per
//! trading day. An empty cell or the literal `NA` marks missing data; any
//! other non-numeric token is a parse error. Dates are opaque labels that
//! must be strictly increasing under byte-wise string order.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Which quantity the numeric cells of an input file hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputKind {
    #[default]
    Prices,
    Relatives,
}

impl FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prices" | "price" => Ok(InputKind::Prices),
            "relatives" | "relative" => Ok(InputKind::Relatives),
            other => Err(Error::InvalidParameter(format!(
                "unknown input kind {other:?} (expected prices or relatives)"
            ))),
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputKind::Prices => "prices",
            InputKind::Relatives => "relatives",
        })
    }
}

/// Output layout for the small report tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected csv or markdown)"
            ))),
        }
    }
}

/// A parsed price file that may still contain missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    names: Vec<String>,
    dates: Vec<String>,
    cells: Vec<Option<f64>>,
}

impl PriceTable {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, day: usize, asset: usize) -> Option<f64> {
        self.cells[day * self.names.len() + asset]
    }
}

impl From<&PriceMatrix> for PriceTable {
    fn from(prices: &PriceMatrix) -> Self {
        PriceTable {
            names: prices.names.clone(),
            dates: prices.dates.clone(),
            cells: prices.values.iter().copied().map(Some).collect(),
        }
    }
}

/// Strictly positive closing prices, one row per trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    names: Vec<String>,
    dates: Vec<String>,
    values: Vec<f64>,
}

impl PriceMatrix {
    /// Builds a matrix from row-major `values` (`dates.len()` rows of
    /// `names.len()` prices).
    pub fn new(names: Vec<String>, dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        check_shape(&names, &dates, &values)?;
        if dates.len() < 2 {
            return Err(Error::Shape(format!(
                "a price matrix needs at least 2 days, got {}",
                dates.len()
            )));
        }
        check_dates(&dates)?;
        check_positive(&values, names.len())?;
        Ok(PriceMatrix {
            names,
            dates,
            values,
        })
    }

    pub fn from_rows(names: Vec<String>, dates: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let values = flatten_rows(rows, names.len())?;
        PriceMatrix::new(names, dates, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, day: usize) -> &[f64] {
        let m = self.names.len();
        &self.values[day * m..(day + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.names.len())
    }

    pub fn column(&self, asset: usize) -> Vec<f64> {
        self.rows().map(|r| r[asset]).collect()
    }

    /// Keeps the given asset columns, in the given order.
    pub fn select(&self, assets: &[usize]) -> Result<PriceMatrix> {
        let (names, values) = select_columns(&self.names, &self.values, assets)?;
        Ok(PriceMatrix {
            names,
            dates: self.dates.clone(),
            values,
        })
    }

    /// Multiplies every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<PriceMatrix> {
        let values = self.values.iter().map(|v| v * factor).collect();
        PriceMatrix::new(self.names.clone(), self.dates.clone(), values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix(writer, &self.names, &self.dates, &self.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file)
    }
}

impl TryFrom<PriceTable> for PriceMatrix {
    type Error = Error;

    fn try_from(table: PriceTable) -> Result<Self> {
        let m = table.names.len();
        let values = complete_cells(&table.cells, m)?;
        PriceMatrix::new(table.names, table.dates, values)
    }
}

/// Daily price relatives `x_t(j) = p_t(j) / p_{t-1}(j)`.
///
/// `dates[t]` is the date of the later of the two prices in the ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMatrix {
    names: Vec<String>,
    dates: Vec<String>,
    values: Vec<f64>,
}

impl RelativeMatrix {
    pub fn new(names: Vec<String>, dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        check_shape(&names, &dates, &values)?;
        if dates.is_empty() {
            return Err(Error::Shape(
                "a relative matrix needs at least 1 day".into(),
            ));
        }
        check_dates(&dates)?;
        check_positive(&values, names.len())?;
        Ok(RelativeMatrix {
            names,
            dates,
            values,
        })
    }

    pub fn from_rows(names: Vec<String>, dates: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let values = flatten_rows(rows, names.len())?;
        RelativeMatrix::new(names, dates, values)
    }

    /// Convenience constructor with generated day labels `d000001`, ...
    pub fn from_unlabelled_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let names = (0..m).map(|j| format!("A{j}")).collect();
        let dates = (1..=rows.len()).map(|t| format!("d{t:06}")).collect();
        RelativeMatrix::from_rows(names, dates, rows)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, day: usize) -> &[f64] {
        let m = self.names.len();
        &self.values[day * m..(day + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.names.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn select(&self, assets: &[usize]) -> Result<RelativeMatrix> {
        let (names, values) = select_columns(&self.names, &self.values, assets)?;
        Ok(RelativeMatrix {
            names,
            dates: self.dates.clone(),
            values,
        })
    }

    pub fn select_by_name(&self, name: &str) -> Result<RelativeMatrix> {
        let j = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no asset named {name:?}")))?;
        self.select(&[j])
    }

    /// The first `days` rows.
    pub fn truncated(&self, days: usize) -> Result<RelativeMatrix> {
        let days = days.min(self.n_days());
        let m = self.names.len();
        RelativeMatrix::new(
            self.names.clone(),
            self.dates[..days].to_vec(),
            self.values[..days * m].to_vec(),
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix(writer, &self.names, &self.dates, &self.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file)
    }
}

/// One row of a dataset description table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub name: String,
    pub period: (String, String),
    pub days: usize,
    pub assets: usize,
    pub max_relative: f64,
    pub min_relative: f64,
}

impl DatasetSummary {
    const HEADER: [&'static str; 6] = ["Name", "Period", "Days", "Assets", "Max", "Min"];

    fn cells(&self) -> [String; 6] {
        [
            self.name.clone(),
            format!("{} - {}", self.period.0, self.period.1),
            self.days.to_string(),
            self.assets.to_string(),
            format!("{:.4}", self.max_relative),
            format!("{:.4}", self.min_relative),
        ]
    }
}

/// Renders summaries in the Name/Period/Days/Assets/Max/Min layout.
pub fn render_summaries(summaries: &[DatasetSummary], format: TableFormat) -> String {
    let rows: Vec<[String; 6]> = summaries.iter().map(DatasetSummary::cells).collect();
    let header = DatasetSummary::HEADER.map(String::from);
    match format {
        TableFormat::Csv => {
            let mut out = String::new();
            for row in std::iter::once(&header).chain(rows.iter()) {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str("|---|---|---:|---:|---:|---:|\n");
            for row in &rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out
        }
    }
}

/// Reads a price or relatives file, keeping missing cells.
pub fn load_price_table(path: impl AsRef<Path>) -> Result<PriceTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_price_table(file).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parses CSV text in the price-file layout.
pub fn read_price_table<R: Read>(reader: R) -> Result<PriceTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |source| Error::Csv {
        path: Default::default(),
        source,
    };

    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Header("file is empty".into()))?
        .map_err(csv_err)?;
    if header.len() < 2 {
        return Err(Error::Header(
            "expected `date` followed by at least one ticker".into(),
        ));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::Header(format!(
            "first column must be `date`, found {:?}",
            &header[0]
        )));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    for (j, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Header(format!("empty ticker in column {}", j + 2)));
        }
        if names[..j].contains(name) {
            return Err(Error::Header(format!("duplicate ticker {name:?}")));
        }
    }

    let m = names.len();
    let mut dates = Vec::new();
    let mut cells = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + 2;
        if record.len() != m + 1 {
            return Err(Error::Ragged {
                row,
                expected: m + 1,
                found: record.len(),
            });
        }
        dates.push(record[0].to_owned());
        for (j, token) in record.iter().skip(1).enumerate() {
            cells.push(parse_cell(token, row, j + 2)?);
        }
    }
    if dates.is_empty() {
        return Err(Error::Shape("file has a header but no data rows".into()));
    }
    check_dates(&dates)?;
    Ok(PriceTable {
        names,
        dates,
        cells,
    })
}

/// Loads a fully populated price file.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceMatrix> {
    PriceMatrix::try_from(load_price_table(path)?)
}

/// Loads a file whose cells are price relatives.
pub fn load_relatives(path: impl AsRef<Path>) -> Result<RelativeMatrix> {
    let table = load_price_table(path)?;
    let values = complete_cells(&table.cells, table.names.len())?;
    RelativeMatrix::new(table.names, table.dates, values)
}

/// Loads either layout and returns the relatives the strategies consume.
pub fn load_dataset(path: impl AsRef<Path>, kind: InputKind) -> Result<RelativeMatrix> {
    match kind {
        InputKind::Prices => to_relatives(&load_prices(path)?),
        InputKind::Relatives => load_relatives(path),
    }
}

pub fn to_relatives(prices: &PriceMatrix) -> Result<RelativeMatrix> {
    if prices.n_days() < 2 {
        return Err(Error::Shape("need at least 2 price rows".into()));
    }
    let values = prices
        .rows()
        .zip(prices.rows().skip(1))
        .flat_map(|(prev, cur)| cur.iter().zip(prev).map(|(c, p)| c / p))
        .collect();
    RelativeMatrix::new(prices.names.clone(), prices.dates[1..].to_vec(), values)
}

pub fn describe(data: &RelativeMatrix, name: &str) -> DatasetSummary {
    let (min, max) = data
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    DatasetSummary {
        name: name.to_owned(),
        period: (
            data.dates.first().cloned().unwrap_or_default(),
            data.dates.last().cloned().unwrap_or_default(),
        ),
        days: data.n_days(),
        assets: data.n_assets(),
        max_relative: max,
        min_relative: min,
    }
}

/// Column indices of each group when `names` is sorted alphabetically and
/// cut into `k` contiguous chunks, larger chunks first.
pub fn split_indices(names: &[String], k: usize) -> Result<Vec<Vec<usize>>> {
    let m = names.len();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "group count must be at least 1".into(),
        ));
    }
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "cannot split {m} assets into {k} groups"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ticker_order(&names[a], &names[b]));

    let (base, extra) = (m / k, m % k);
    let mut groups = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let len = base + usize::from(g < extra);
        groups.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(groups)
}

pub fn split_universe(prices: &PriceMatrix, k: usize) -> Result<Vec<PriceMatrix>> {
    split_indices(&prices.names, k)?
        .iter()
        .map(|group| prices.select(group))
        .collect()
}

/// Case-insensitive byte order, with raw bytes breaking ties so that the
/// order is total.
fn ticker_order(a: &str, b: &str) -> Ordering {
    a.bytes()
        .map(|c| c.to_ascii_lowercase())
        .cmp(b.bytes().map(|c| c.to_ascii_lowercase()))
        .then_with(|| a.cmp(b))
}

/// Drops every asset with a missing cell dated at or before `cutoff`.
///
/// Retained assets must be complete over the whole period; a gap after the
/// cutoff is reported as a missing value.
pub fn filter_by_listing(table: &PriceTable, cutoff: &str) -> Result<PriceMatrix> {
    let m = table.n_assets();
    let listed_rows = table
        .dates
        .iter()
        .take_while(|d| d.as_str() <= cutoff)
        .count();
    let keep: Vec<usize> = (0..m)
        .filter(|&j| (0..listed_rows).all(|t| table.get(t, j).is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let mut values = Vec::with_capacity(keep.len() * table.n_days());
    for t in 0..table.n_days() {
        for &j in &keep {
            values.push(table.get(t, j).ok_or(Error::Missing {
                row: t + 2,
                col: j + 2,
            })?);
        }
    }
    PriceMatrix::new(
        keep.iter().map(|&j| table.names[j].clone()).collect(),
        table.dates.clone(),
        values,
    )
}

/// Stochastic or scripted price dynamics for [`synth_market`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceProcess {
    /// Even-indexed assets alternate between multiplying by `up` and by
    /// `down`, starting with `up`; odd-indexed assets stay constant.
    Alternating { up: f64, down: f64 },
    /// Log-price random walk: `ln p_t = ln p_{t-1} + drift + volatility * z`.
    /// Requires `|drift| <= 1` and `0 <= volatility <= 1`.
    RandomWalk { drift: f64, volatility: f64 },
    /// Log-price pulled back towards zero:
    /// `y_t = (1 - speed) * y_{t-1} + volatility * z`.
    /// Requires `0 < speed <= 2` and `0 <= volatility <= 1`.
    MeanReverting { speed: f64, volatility: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketScenario {
    /// Number of price rows.
    pub days: usize,
    pub assets: usize,
    pub process: PriceProcess,
}

impl MarketScenario {
    pub fn alternating(days: usize, assets: usize) -> Self {
        MarketScenario {
            days,
            assets,
            process: PriceProcess::Alternating { up: 2.0, down: 0.5 },
        }
    }

    pub fn random_walk(days: usize, assets: usize, drift: f64, volatility: f64) -> Self {
        MarketScenario {
            days,
            assets,
            process: PriceProcess::RandomWalk { drift, volatility },
        }
    }

    pub fn mean_reverting(days: usize, assets: usize, speed: f64, volatility: f64) -> Self {
        MarketScenario {
            days,
            assets,
            process: PriceProcess::MeanReverting { speed, volatility },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.days < 2 || self.assets < 1 {
            return Err(Error::InvalidParameter(format!(
                "synthetic market needs days >= 2 and assets >= 1, got {}x{}",
                self.days, self.assets
            )));
        }
        let ok = match self.process {
            PriceProcess::Alternating { up, down } => {
                up.is_finite() && down.is_finite() && up > 0.0 && down > 0.0
            }
            PriceProcess::RandomWalk { drift, volatility } => {
                drift.abs() <= 1.0 && (0.0..=1.0).contains(&volatility)
            }
            PriceProcess::MeanReverting { speed, volatility } => {
                speed > 0.0 && speed <= 2.0 && (0.0..=1.0).contains(&volatility)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "process parameters out of range: {:?}",
                self.process
            )))
        }
    }
}

/// Generates a price matrix starting from 1.0 for every asset. The output is
/// a pure function of `(scenario, seed)`.
pub fn synth_market(scenario: &MarketScenario, seed: u64) -> Result<PriceMatrix> {
    scenario.validate()?;
    let (n, m) = (scenario.days, scenario.assets);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * m);
    values.extend(std::iter::repeat_n(1.0, m));

    let mut log_prices = vec![0.0f64; m];
    for t in 1..n {
        for j in 0..m {
            let prev = values[(t - 1) * m + j];
            let next = match scenario.process {
                PriceProcess::Alternating { up, down } => {
                    if j % 2 == 1 {
                        prev
                    } else if t % 2 == 1 {
                        prev * up
                    } else {
                        prev * down
                    }
                }
                PriceProcess::RandomWalk { drift, volatility } => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    log_prices[j] += drift + volatility * z;
                    log_prices[j].exp()
                }
                PriceProcess::MeanReverting { speed, volatility } => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    log_prices[j] = (1.0 - speed) * log_prices[j] + volatility * z;
                    log_prices[j].exp()
                }
            };
            values.push(next);
        }
    }

    let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let dates = (0..n as u64)
        .map(|d| {
            start
                .checked_add_days(Days::new(d))
                .expect("date in range")
                .format("%Y-%m-%d")
                .to_string()
        })
        .collect();
    let names = (0..m).map(|j| format!("S{j:03}")).collect();
    PriceMatrix::new(names, dates, values)
}

fn parse_cell(token: &str, row: usize, col: usize) -> Result<Option<f64>> {
    if token.is_empty() || token == "NA" {
        return Ok(None);
    }
    let value: f64 = token.parse().map_err(|_| Error::Unparseable {
        row,
        col,
        token: token.to_owned(),
    })?;
    if !value.is_finite() {
        return Err(Error::Unparseable {
            row,
            col,
            token: token.to_owned(),
        });
    }
    if value <= 0.0 {
        return Err(Error::NonPositive { row, col, value });
    }
    Ok(Some(value))
}

fn complete_cells(cells: &[Option<f64>], m: usize) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or(Error::Missing {
                row: i / m + 2,
                col: i % m + 2,
            })
        })
        .collect()
}

fn check_shape(names: &[String], dates: &[String], values: &[f64]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::Shape("at least one asset is required".into()));
    }
    if values.len() != names.len() * dates.len() {
        return Err(Error::Shape(format!(
            "{} values do not fill {} days x {} assets",
            values.len(),
            dates.len(),
            names.len()
        )));
    }
    Ok(())
}

fn check_dates(dates: &[String]) -> Result<()> {
    for (i, pair) in dates.windows(2).enumerate() {
        if pair[0] >= pair[1] {
            return Err(Error::DatesNotIncreasing {
                row: i + 3,
                previous: pair[0].clone(),
                current: pair[1].clone(),
            });
        }
    }
    Ok(())
}

fn check_positive(values: &[f64], m: usize) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        let (row, col) = (i / m + 2, i % m + 2);
        if !v.is_finite() {
            return Err(Error::Unparseable {
                row,
                col,
                token: v.to_string(),
            });
        }
        if v <= 0.0 {
            return Err(Error::NonPositive { row, col, value: v });
        }
    }
    Ok(())
}

fn flatten_rows(rows: &[Vec<f64>], m: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(rows.len() * m);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Ragged {
                row: i + 2,
                expected: m + 1,
                found: row.len() + 1,
            });
        }
        values.extend_from_slice(row);
    }
    Ok(values)
}

fn select_columns(
    names: &[String],
    values: &[f64],
    assets: &[usize],
) -> Result<(Vec<String>, Vec<f64>)> {
    let m = names.len();
    if assets.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    if let Some(&bad) = assets.iter().find(|&&j| j >= m) {
        return Err(Error::InvalidParameter(format!(
            "asset index {bad} out of range for {m} assets"
        )));
    }
    let picked = assets.iter().map(|&j| names[j].clone()).collect();
    let values = values
        .chunks_exact(m)
        .flat_map(|row| assets.iter().map(move |&j| row[j]))
        .collect();
    Ok((picked, values))
}

fn write_matrix<W: Write>(
    writer: W,
    names: &[String],
    dates: &[String],
    values: &[f64],
) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: Default::default(),
        source: e,
    };
    let csv_err = |source| Error::Csv {
        path: Default::default(),
        source,
    };
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(std::iter::once("date").chain(names.iter().map(String::as_str)))
        .map_err(csv_err)?;
    for (date, row) in dates.iter().zip(values.chunks_exact(names.len())) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(date.clone());
        record.extend(row.iter().map(f64::to_string));
        wtr.write_record(&record).map_err(csv_err)?;
    }
    wtr.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn table(text: &str) -> Result<PriceTable> {
        read_price_table(text.as_bytes())
    }

    #[test]
    fn loads_well_formed_prices() {
        let t =
            table("date,AAA,BBB\n2020-01-01,1,2\n2020-01-02,1.5,2.5\n2020-01-03,2,3\n").unwrap();
        let p = PriceMatrix::try_from(t).unwrap();
        assert_eq!((p.n_days(), p.n_assets()), (3, 2));
        assert_eq!(p.row(1), &[1.5, 2.5]);
    }

    #[test]
    fn rejects_zero_price_with_coordinates() {
        let err = table("date,A,B\n2020-01-01,1,2\n2020-01-02,0.0,2\n").unwrap_err();
        assert!(
            matches!(err, Error::NonPositive { row: 3, col: 2, .. }),
            "{err}"
        );
        assert!(err.to_string().starts_with("non-positive price at (3, 2)"));
    }

    #[test]
    fn rejects_out_of_order_dates() {
        let err = table("date,A\n2020-01-02,1\n2020-01-01,2\n").unwrap_err();
        assert!(err.to_string().starts_with("dates not strictly increasing"));
        let err = table("date,A\n2020-01-01,1\n2020-01-01,2\n").unwrap_err();
        assert!(matches!(err, Error::DatesNotIncreasing { row: 3, .. }));
    }

    #[test]
    fn rejects_ragged_and_garbage() {
        let err = table("date,A,B\n2020-01-01,1\n").unwrap_err();
        assert!(matches!(
            err,
            Error::Ragged {
                row: 2,
                expected: 3,
                found: 2
            }
        ));
        let err = table("date,A\n2020-01-01,abc\n").unwrap_err();
        assert!(matches!(err, Error::Unparseable { row: 2, col: 2, .. }));
        let err = table("date,A\n2020-01-01,inf\n").unwrap_err();
        assert!(matches!(err, Error::Unparseable { .. }));
    }

    #[test]
    fn missing_sentinels() {
        let t = table("date,A,B,C\n2020-01-01,,NA,1\n2020-01-02,1,2,3\n").unwrap();
        assert_eq!(t.get(0, 0), None);
        assert_eq!(t.get(0, 1), None);
        assert_eq!(t.get(0, 2), Some(1.0));
        let err = PriceMatrix::try_from(t).unwrap_err();
        assert!(matches!(err, Error::Missing { row: 2, col: 2 }));
        assert!(table("date,A\n2020-01-01,na\n").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_prices("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn header_must_start_with_date() {
        assert!(matches!(table("day,A\nx,1\n"), Err(Error::Header(_))));
        assert!(matches!(table("date,A,A\nx,1,2\n"), Err(Error::Header(_))));
    }

    #[test]
    fn relatives_from_prices() {
        let p = PriceMatrix::from_rows(
            names(&["A", "B"]),
            names(&["1", "2"]),
            &[vec![100.0, 50.0], vec![110.0, 45.0]],
        )
        .unwrap();
        let r = to_relatives(&p).unwrap();
        assert_eq!(r.n_days(), 1);
        assert!((r.row(0)[0] - 1.10).abs() < 1e-15);
        assert!((r.row(0)[1] - 0.90).abs() < 1e-15);
        assert_eq!(r.dates(), &["2".to_string()]);

        let p = PriceMatrix::from_rows(
            names(&["A"]),
            names(&["1", "2", "3"]),
            &[vec![2.0], vec![1.0], vec![2.0]],
        )
        .unwrap();
        let r = to_relatives(&p).unwrap();
        assert_eq!(r.values(), &[0.5, 2.0]);
    }

    #[test]
    fn constant_prices_give_unit_relatives() {
        let rows = vec![vec![7.0, 3.0]; 5];
        let dates = (1..=5).map(|d| d.to_string()).collect();
        let p = PriceMatrix::from_rows(names(&["A", "B"]), dates, &rows).unwrap();
        let r = to_relatives(&p).unwrap();
        assert_eq!(r.n_days(), 4);
        assert!(r.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn price_matrix_needs_two_rows() {
        let err = PriceMatrix::from_rows(names(&["A"]), names(&["1"]), &[vec![1.0]]);
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn describe_single_row() {
        let r = RelativeMatrix::from_unlabelled_rows(&[vec![1.0, 1.0]]).unwrap();
        let s = describe(&r, "one");
        assert_eq!((s.days, s.assets), (1, 2));
        assert_eq!((s.max_relative, s.min_relative), (1.0, 1.0));
    }

    #[test]
    fn summary_rendering() {
        let s = DatasetSummary {
            name: "X".into(),
            period: ("2000".into(), "2017".into()),
            days: 4527,
            assets: 39,
            max_relative: 1.66,
            min_relative: 0.39212,
        };
        let csv = render_summaries(std::slice::from_ref(&s), TableFormat::Csv);
        assert_eq!(
            csv,
            "Name,Period,Days,Assets,Max,Min\nX,2000 - 2017,4527,39,1.6600,0.3921\n"
        );
        let md = render_summaries(&[s], TableFormat::Markdown);
        assert!(md.contains("| X | 2000 - 2017 | 4527 | 39 | 1.6600 | 0.3921 |"));
    }

    #[test]
    fn split_sorts_then_chunks() {
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0]; 2];
        let p = PriceMatrix::from_rows(names(&["D", "A", "C", "B"]), names(&["1", "2"]), &rows)
            .unwrap();
        let groups = split_universe(&p, 2).unwrap();
        assert_eq!(groups[0].names(), &names(&["A", "B"]));
        assert_eq!(groups[1].names(), &names(&["C", "D"]));
        assert_eq!(groups[0].row(0), &[2.0, 4.0]);
    }

    #[test]
    fn split_is_case_insensitive() {
        let order = split_indices(&names(&["b", "A", "a", "C"]), 4).unwrap();
        let flat: Vec<usize> = order.into_iter().flatten().collect();
        assert_eq!(flat, vec![1, 2, 0, 3]);
    }

    #[test]
    fn split_sizes() {
        let tickers: Vec<String> = (0..389).map(|i| format!("T{i:03}")).collect();
        let sizes: Vec<usize> = split_indices(&tickers, 10)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, [39, 39, 39, 39, 39, 39, 39, 39, 39, 38]);

        let five = split_indices(&names(&["e", "d", "c", "b", "a"]), 5).unwrap();
        assert!(five.iter().all(|g| g.len() == 1));

        assert!(split_indices(&names(&["a"]), 0).is_err());
        assert!(split_indices(&names(&["a"]), 2).is_err());
    }

    #[test]
    fn listing_filter() {
        let text = "date,A,B,C\n2000-01-01,1,,3\n2000-01-02,1,2,3\n2000-01-03,1,2,3\n";
        let t = table(text).unwrap();
        let p = filter_by_listing(&t, "2000-01-01").unwrap();
        assert_eq!(p.names(), &names(&["A", "C"]));
        assert_eq!(p.n_days(), 3);

        let full = table("date,A,B\n1,1,2\n2,1,2\n").unwrap();
        let p = filter_by_listing(&full, "1").unwrap();
        assert_eq!(PriceTable::from(&p), full);

        let none = table("date,A,B\n1,NA,\n2,1,2\n").unwrap();
        assert!(matches!(
            filter_by_listing(&none, "1"),
            Err(Error::EmptyUniverse)
        ));
    }

    #[test]
    fn listing_filter_rejects_late_gaps() {
        let t = table("date,A,B\n1,1,2\n2,1,\n3,1,2\n").unwrap();
        let err = filter_by_listing(&t, "1").unwrap_err();
        assert!(matches!(err, Error::Missing { row: 3, col: 3 }));
    }

    #[test]
    fn alternating_market() {
        let p = synth_market(&MarketScenario::alternating(4, 2), 0).unwrap();
        let r = to_relatives(&p).unwrap();
        assert_eq!(r.row(0), &[2.0, 1.0]);
        assert_eq!(r.row(1), &[0.5, 1.0]);
        assert_eq!(r.row(2), &[2.0, 1.0]);
    }

    #[test]
    fn synthetic_markets_are_deterministic() {
        let s = MarketScenario::random_walk(50, 3, 0.001, 0.02);
        assert_eq!(synth_market(&s, 7).unwrap(), synth_market(&s, 7).unwrap());
        assert_ne!(synth_market(&s, 7).unwrap(), synth_market(&s, 8).unwrap());
        let s = MarketScenario::mean_reverting(50, 3, 0.3, 0.02);
        assert_eq!(synth_market(&s, 1).unwrap(), synth_market(&s, 1).unwrap());
    }

    #[test]
    fn degenerate_random_walk_is_constant() {
        let p = synth_market(&MarketScenario::random_walk(20, 4, 0.0, 0.0), 3).unwrap();
        assert!(p.rows().all(|r| r.iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn synth_rejects_bad_parameters() {
        assert!(synth_market(&MarketScenario::random_walk(1, 2, 0.0, 0.1), 0).is_err());
        assert!(synth_market(&MarketScenario::random_walk(5, 0, 0.0, 0.1), 0).is_err());
        assert!(synth_market(&MarketScenario::random_walk(5, 2, 0.0, -0.1), 0).is_err());
        assert!(synth_market(&MarketScenario::mean_reverting(5, 2, 0.0, 0.1), 0).is_err());
        let bad = MarketScenario {
            days: 5,
            assets: 2,
            process: PriceProcess::Alternating { up: 2.0, down: 0.0 },
        };
        assert!(synth_market(&bad, 0).is_err());
    }

    #[test]
    fn input_kind_parsing() {
        assert_eq!(
            "relatives".parse::<InputKind>().unwrap(),
            InputKind::Relatives
        );
        assert_eq!("Prices".parse::<InputKind>().unwrap(), InputKind::Prices);
        assert!("volumes".parse::<InputKind>().is_err());
    }
}
