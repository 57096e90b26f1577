use std::io::{Read, Write};

use crate::road::{EpisodeLog, RoadNetwork, SimError};

/// Vehicle counts per (step, spatial bin) over `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    pub start: f64,
    pub bin: f64,
    pub dt: f64,
    /// `counts[step][bin]`.
    pub counts: Vec<Vec<u32>>,
}

impl DensityMap {
    pub fn bins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn end(&self) -> f64 {
        self.start + self.bin * self.bins() as f64
    }

    pub fn row_sums(&self) -> Vec<u32> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Densest packing per bin: every lane filled bumper to bumper at the
    /// minimum gap.
    pub fn jam_count(net: &RoadNetwork, bin: f64, vehicle_length: f64, min_gap: f64) -> f64 {
        net.lane_count() as f64 * bin / (vehicle_length + min_gap)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "time_s".to_string()];
        header.extend((0..self.bins()).map(|b| format!("x{}", self.start + self.bin * b as f64)));
        w.write_record(&header)?;
        for (k, row) in self.counts.iter().enumerate() {
            let mut rec = vec![k.to_string(), ((k + 1) as f64 * self.dt).to_string()];
            rec.extend(row.iter().map(u32::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, dt: f64) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let fmt = |m: String| SimError::Format(m);
        let edges = header
            .iter()
            .skip(2)
            .map(|h| h.strip_prefix('x').and_then(|s| s.parse::<f64>().ok()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| fmt("density header must be step,time_s,x<start>...".into()))?;
        let start = edges.first().copied().unwrap_or(0.0);
        let bin = if edges.len() > 1 { edges[1] - edges[0] } else { 0.0 };
        let mut counts = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let step: usize = rec[0].parse().map_err(|_| fmt(format!("bad step {:?}", &rec[0])))?;
            if step != k {
                return Err(fmt(format!("expected step {k}, found {step}")));
            }
            let row = rec
                .iter()
                .skip(2)
                .map(|c| c.parse::<u32>().map_err(|_| fmt(format!("bad count {c:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            counts.push(row);
        }
        Ok(Self { start, bin, dt, counts })
    }
}

/// Per-step counts in `bin`-metre cells of the control zone, by front position.
pub fn density_map(log: &EpisodeLog, net: &RoadNetwork, bin: f64) -> DensityMap {
    let (start, end) = net.control_zone();
    let bins = ((end - start) / bin).round().max(0.0) as usize;
    let mut counts = vec![vec![0u32; bins]; log.steps as usize];
    for (k, rows) in log.by_step().into_iter().enumerate() {
        for r in rows {
            if r.pos_m >= start && r.pos_m < end {
                let b = (((r.pos_m - start) / bin) as usize).min(bins - 1);
                counts[k][b] += 1;
            }
        }
    }
    DensityMap {
        start,
        bin,
        dt: log.dt,
        counts,
    }
}

/// Vehicles inside the control zone at every step, straight from the log.
pub fn in_area_census(log: &EpisodeLog, net: &RoadNetwork) -> Vec<u32> {
    let (start, end) = net.control_zone();
    log.by_step()
        .into_iter()
        .map(|rows| rows.iter().filter(|r| r.pos_m >= start && r.pos_m < end).count() as u32)
        .collect()
}
