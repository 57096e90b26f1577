//! Evaluation: mobility, fuel and emission metrics, density maps,
//! diagrams and baseline comparisons.

mod aggregate;
mod density;
mod record;
mod render;

pub use aggregate::{
    aggregate_runs, comparison_text, mean_std, metric_value, percent_change, write_comparison_csv,
    MetricComparison, ScenarioComparison, ScenarioRuns, TABLE_METRICS,
};
pub use density::{density_map, in_area_census, DensityMap};
pub use record::{
    compute_metrics, count_stops, emission_rate, EmissionCoefficients, MetricsRecord, Polynomial,
    METERS_PER_MILE, ML_PER_GALLON, REARM_SPEED, STOP_SPEED,
};
pub use render::{comparison_svg, density_svg, line_svg, render_outputs, trajectory_svg};

use std::io::{Read, Write};

use thiserror::Error;

use crate::road::SimError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("mismatched record sets: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row per episode.
pub fn write_records_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<MetricsRecord>, _>>()?)
}
