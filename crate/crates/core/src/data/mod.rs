//! Watershed data handling: synthetic generation, CSV ingestion, daily
//! aggregation, normalization, chronological splitting, window extraction and
//! flow-band classification.

pub mod bands;
pub mod normalize;
pub mod series;
pub mod split;
pub mod synthetic;
pub mod windows;

pub use bands::{Band, FlowBands};
pub use normalize::NormStats;
pub use series::{ingest_csv, ingest_csv_named, SeriesTable, FLOW_COLUMN, TIMESTAMP_FMT};
pub use split::{hours_in_year, split_chronological, Split};
pub use synthetic::{generate_synthetic, generate_with_balance, MassBalance, SyntheticConfig};
pub use windows::WindowSet;
