use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::road::{EpisodeLog, LogRow, RoadNetwork, VehicleId};

use super::aggregate::{ScenarioComparison, TABLE_METRICS};
use super::density::DensityMap;
use super::MetricsError;

const W: f64 = 800.0;
const H: f64 = 600.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0).max(1e-12) * (W - LEFT - RIGHT)
    }

    /// Data y grows upward.
    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0).max(1e-12) * (H - TOP - BOTTOM)
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').to_string()
    }
}

fn axes(svg: &mut String, f: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    if f.x1 > f.x0 {
        let step = nice_step(f.x1 - f.x0);
        let first = (f.x0 / step).ceil();
        for k in 0.. {
            let x = (first + k as f64) * step;
            if x > f.x1 + 1e-9 {
                break;
            }
            let px = f.px(x);
            let label = tick(x);
            let _ = writeln!(
                svg,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                H - BOTTOM,
                H - BOTTOM + 5.0,
                H - BOTTOM + 18.0
            );
        }
    }
    if f.y1 > f.y0 {
        let step = nice_step(f.y1 - f.y0);
        let first = (f.y0 / step).ceil();
        for k in 0.. {
            let y = (first + k as f64) * step;
            if y > f.y1 + 1e-9 {
                break;
            }
            let py = f.py(y);
            let label = tick(y);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0
            );
        }
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
}

fn lerp_rgb(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c = |x: f64, y: f64| (x + (y - x) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Heat map with distance on x and elapsed time on y; lighter is denser.
/// Counts are scaled against `scale` (e.g. the jam count per bin).
pub fn density_svg(map: &DensityMap, scale: f64) -> String {
    let steps = map.counts.len();
    let f = Frame {
        x0: map.start,
        x1: map.end().max(map.start + map.bin),
        y0: 0.0,
        y1: (steps as f64 * map.dt).max(map.dt),
    };
    let mut svg = String::new();
    axes(&mut svg, &f, "Traffic density", "Distance (m)", "Elapsed time (s)");
    let dark = (20.0, 20.0, 60.0);
    let light = (255.0, 250.0, 200.0);
    for (k, row) in map.counts.iter().enumerate() {
        let (ya, yb) = (f.py((k + 1) as f64 * map.dt), f.py(k as f64 * map.dt));
        let mut b = 0;
        while b < row.len() {
            let mut e = b + 1;
            while e < row.len() && row[e] == row[b] {
                e += 1;
            }
            let (xa, xb) = (f.px(map.start + b as f64 * map.bin), f.px(map.start + e as f64 * map.bin));
            let color = lerp_rgb(dark, light, row[b] as f64 / scale.max(1e-12));
            let _ = writeln!(
                svg,
                r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                xb - xa,
                yb - ya
            );
            b = e;
        }
    }
    svg.push_str("</svg>\n");
    svg
}

const SPEED_BUCKETS: usize = 8;

fn speed_color(bucket: usize) -> String {
    let t = bucket as f64 / (SPEED_BUCKETS - 1) as f64;
    let red = (215.0, 40.0, 40.0);
    let yellow = (230.0, 200.0, 40.0);
    let green = (40.0, 160.0, 60.0);
    if t < 0.5 {
        lerp_rgb(red, yellow, t * 2.0)
    } else {
        lerp_rgb(yellow, green, t * 2.0 - 1.0)
    }
}

/// Time-space diagram: one polyline per vehicle, green fast and red slow.
pub fn trajectory_svg(log: &EpisodeLog, net: &RoadNetwork) -> String {
    let f = Frame {
        x0: 0.0,
        x1: log.duration().max(log.dt),
        y0: 0.0,
        y1: net.mainline_length(),
    };
    let mut svg = String::new();
    axes(&mut svg, &f, "Vehicle trajectories", "Time (s)", "Distance (m)");
    let mut by_vehicle: BTreeMap<VehicleId, Vec<&LogRow>> = BTreeMap::new();
    for r in &log.rows {
        by_vehicle.entry(r.vehicle_id).or_default().push(r);
    }
    let bucket = |v: f64| {
        let t = (v / net.freeway_speed_limit).clamp(0.0, 1.0);
        ((t * SPEED_BUCKETS as f64) as usize).min(SPEED_BUCKETS - 1)
    };
    for rows in by_vehicle.values() {
        let mut i = 0;
        while i < rows.len() {
            let b = bucket(rows[i].speed_mps);
            let mut j = i + 1;
            while j < rows.len() && bucket(rows[j].speed_mps) == b {
                j += 1;
            }
            // Overlap by one point so consecutive pieces join up.
            let end = (j + 1).min(rows.len());
            let pts: Vec<String> = rows[i..end]
                .iter()
                .map(|r| format!("{:.2},{:.2}", f.px(r.time_s), f.py(r.pos_m.min(f.y1))))
                .collect();
            if pts.len() > 1 {
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
                    pts.join(" "),
                    speed_color(b)
                );
            }
            i = j;
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Single-series line plot, e.g. a reward curve.
pub fn line_svg(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
    if let Some(&(x, y)) = points.first() {
        (x0, x1, y0, y1) = (x, x, y, y);
        for &(x, y) in points {
            (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let pad = ((y1 - y0) * 0.05).max(1e-6);
        (y0, y1) = (y0 - pad, y1 + pad);
    }
    let f = Frame { x0, x1, y0, y1 };
    let mut svg = String::new();
    axes(&mut svg, &f, title, xlabel, ylabel);
    if points.len() > 1 {
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            "#1f5fa8"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars of the percent change per metric, one colour per scenario.
pub fn comparison_svg(table: &[ScenarioComparison]) -> String {
    let keys: Vec<&str> = TABLE_METRICS.iter().map(|(k, _)| *k).collect();
    let pct = |s: &ScenarioComparison, k: &str| s.metrics.iter().find(|m| m.key == k).and_then(|m| m.percent);
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for s in table {
        for k in &keys {
            if let Some(p) = pct(s, k) {
                (lo, hi) = (lo.min(p), hi.max(p));
            }
        }
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (-1.0, 1.0);
    }
    let f = Frame {
        x0: 0.0,
        x1: keys.len() as f64,
        y0: lo * 1.1,
        y1: hi * 1.1,
    };
    let mut svg = String::new();
    axes(&mut svg, &f, "Change vs baseline", "Metric", "Percent change (%)");
    let palette = ["#4c9a2a", "#e0a100", "#c0392b", "#2c6fbb", "#7d3c98"];
    let zero = f.py(0.0);
    let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="gray"/>"#, W - RIGHT);
    let group = f.px(1.0) - f.px(0.0);
    let bar = group * 0.8 / table.len().max(1) as f64;
    for (j, k) in keys.iter().enumerate() {
        for (n, s) in table.iter().enumerate() {
            let Some(p) = pct(s, k) else { continue };
            let x = f.px(j as f64) + group * 0.1 + bar * n as f64;
            let y = f.py(p);
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#,
                y.min(zero),
                (y - zero).abs(),
                palette[n % palette.len()]
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{k}</text>"#,
            f.px(j as f64 + 0.5),
            TOP + 12.0
        );
    }
    for (n, s) in table.iter().enumerate() {
        let y = TOP + 28.0 + 14.0 * n as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{y:.2}">{} vphpl</text>"#,
            LEFT + 8.0,
            y - 9.0,
            palette[n % palette.len()],
            LEFT + 22.0,
            s.inflow_vphpl
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the log, density map and both diagrams of one episode into `dir`.
pub fn render_outputs(log: &EpisodeLog, map: &DensityMap, net: &RoadNetwork, scale: f64, dir: &Path) -> Result<(), MetricsError> {
    fs::create_dir_all(dir)?;
    let mut log_csv = Vec::new();
    log.write_csv(&mut log_csv)?;
    fs::write(dir.join("log.csv"), log_csv)?;
    let mut density_csv = Vec::new();
    map.write_csv(&mut density_csv)?;
    fs::write(dir.join("density.csv"), density_csv)?;
    fs::write(dir.join("density.svg"), density_svg(map, scale))?;
    fs::write(dir.join("trajectories.svg"), trajectory_svg(log, net))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_episode, BaselinePolicy, EnvConfig};
    use crate::metrics::density_map;

    #[test]
    fn empty_log_renders_axes_only() {
        let log = EpisodeLog::new(0.2);
        let net = RoadNetwork::default();
        let svg = trajectory_svg(&log, &net);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("<polyline"));
        let map = density_map(&log, &net, 10.0);
        let svg = density_svg(&map, 5.0);
        assert!(svg.contains("Traffic density"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut c = EnvConfig::default();
        c.scenario.sim.episode_steps = 150;
        let net = c.scenario.network.clone();
        let a = run_episode(&BaselinePolicy, &c, 2).unwrap().log;
        let b = run_episode(&BaselinePolicy, &c, 2).unwrap().log;
        assert_eq!(trajectory_svg(&a, &net), trajectory_svg(&b, &net));
        let (ma, mb) = (density_map(&a, &net, 10.0), density_map(&b, &net, 10.0));
        assert_eq!(density_svg(&ma, 5.7), density_svg(&mb, 5.7));
        assert!(trajectory_svg(&a, &net).contains("<polyline"));
    }

    #[test]
    fn outputs_land_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = EnvConfig::default();
        c.scenario.sim.episode_steps = 50;
        let net = c.scenario.network.clone();
        let log = run_episode(&BaselinePolicy, &c, 2).unwrap().log;
        let map = density_map(&log, &net, 10.0);
        render_outputs(&log, &map, &net, 5.0, dir.path()).unwrap();
        for f in ["log.csv", "density.csv", "density.svg", "trajectories.svg"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let back = DensityMap::read_csv(fs::File::open(dir.path().join("density.csv")).unwrap(), log.dt).unwrap();
        assert_eq!(back, map);
    }
}
