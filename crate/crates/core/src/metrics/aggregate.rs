use std::fmt::Write as _;
use std::io::Write;

use super::record::MetricsRecord;
use super::MetricsError;

/// The metrics compared against the baseline, in report order.
pub const TABLE_METRICS: [(&str, &str); 6] = [
    ("throughput_vph", "Traffic throughput (vph)"),
    ("mean_travel_time_s", "Average travel time (sec)"),
    ("stops_per_vehicle", "Average number of stops per vehicle"),
    ("fuel_mpg", "Average vehicle fuel efficiency (mpg)"),
    ("co2_g_per_mi", "Average CO2 emissions per vehicle (g/mi)"),
    ("nox_mg_per_mi", "Average NOx emissions per vehicle (mg/mi)"),
];

pub fn metric_value(r: &MetricsRecord, key: &str) -> Option<f64> {
    Some(match key {
        "throughput_vph" => r.throughput_vph,
        "mean_speed_mps" => r.mean_speed_mps,
        "mean_travel_time_s" => r.mean_travel_time_s,
        "stops_per_vehicle" => r.stops_per_vehicle,
        "fuel_mpg" => r.fuel_mpg,
        "co2_g_per_mi" => r.co2_g_per_mi,
        "nox_mg_per_mi" => r.nox_mg_per_mi,
        _ => return None,
    })
}

/// Mean and sample standard deviation, summed in sorted order so the result
/// does not depend on record order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// `100·(rl − baseline)/baseline`, undefined for a zero baseline.
pub fn percent_change(baseline: f64, rl: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (rl - baseline) / baseline)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricComparison {
    pub key: &'static str,
    pub label: &'static str,
    pub baseline: (f64, f64),
    pub rl: (f64, f64),
    pub percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioComparison {
    pub inflow_vphpl: f64,
    pub episodes: usize,
    pub metrics: Vec<MetricComparison>,
}

/// Record sets of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRuns {
    pub inflow_vphpl: f64,
    pub baseline: Vec<MetricsRecord>,
    pub rl: Vec<MetricsRecord>,
}

pub fn aggregate_runs(runs: &[ScenarioRuns]) -> Result<Vec<ScenarioComparison>, MetricsError> {
    let mut out = Vec::new();
    for s in runs {
        if s.baseline.is_empty() || s.baseline.len() != s.rl.len() {
            return Err(MetricsError::Mismatch(format!(
                "inflow {} vphpl: {} baseline vs {} controlled episodes",
                s.inflow_vphpl,
                s.baseline.len(),
                s.rl.len()
            )));
        }
        let metrics = std::iter::once(("mean_speed_mps", "Average vehicle speed (m/s)"))
            .chain(TABLE_METRICS)
            .map(|(key, label)| {
                let col = |rs: &[MetricsRecord]| {
                    let xs: Vec<f64> = rs.iter().map(|r| metric_value(r, key).expect("known key")).collect();
                    mean_std(&xs)
                };
                let baseline = col(&s.baseline);
                let rl = col(&s.rl);
                MetricComparison {
                    key,
                    label,
                    baseline,
                    rl,
                    percent: percent_change(baseline.0, rl.0),
                }
            })
            .collect();
        out.push(ScenarioComparison {
            inflow_vphpl: s.inflow_vphpl,
            episodes: s.baseline.len(),
            metrics,
        });
    }
    out.sort_by(|a, b| a.inflow_vphpl.total_cmp(&b.inflow_vphpl));
    Ok(out)
}

fn scenario_name(inflow: f64) -> String {
    match inflow {
        x if x == 900.0 => "No Congestion (900 vphpl)".into(),
        x if x == 1200.0 => "Moderate Congestion (1200 vphpl)".into(),
        x if x == 1500.0 => "Extreme Congestion (1500 vphpl)".into(),
        x => format!("Inflow {x} vphpl"),
    }
}

fn fmt_pct(p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{p:+.1}%"),
        None => "n/a".into(),
    }
}

/// Long-form CSV: one row per (scenario, metric).
pub fn write_comparison_csv<W: Write>(table: &[ScenarioComparison], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "inflow_vphpl",
        "episodes",
        "metric",
        "baseline_mean",
        "baseline_std",
        "rl_mean",
        "rl_std",
        "percent_change",
    ])?;
    for s in table {
        for m in &s.metrics {
            w.write_record([
                s.inflow_vphpl.to_string(),
                s.episodes.to_string(),
                m.key.to_string(),
                m.baseline.0.to_string(),
                m.baseline.1.to_string(),
                m.rl.0.to_string(),
                m.rl.1.to_string(),
                m.percent.map_or(String::new(), |p| p.to_string()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aligned text table: metrics as rows, scenarios as columns.
pub fn comparison_text(table: &[ScenarioComparison]) -> String {
    let mut keys: Vec<(&str, &str)> = TABLE_METRICS.to_vec();
    keys.push(("mean_speed_mps", "Average vehicle speed (m/s)"));
    let label_w = keys.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
    let cols: Vec<String> = table.iter().map(|s| scenario_name(s.inflow_vphpl)).collect();
    let col_w = cols.iter().map(String::len).max().unwrap_or(0).max(8);
    let mut s = String::new();
    let _ = write!(s, "{:label_w$}", "Metric change vs baseline");
    for c in &cols {
        let _ = write!(s, "  {c:>col_w$}");
    }
    s.push('\n');
    for (key, label) in keys {
        let _ = write!(s, "{label:label_w$}");
        for sc in table {
            let p = sc.metrics.iter().find(|m| m.key == key).and_then(|m| m.percent);
            let _ = write!(s, "  {:>col_w$}", fmt_pct(p));
        }
        s.push('\n');
    }
    s
}
