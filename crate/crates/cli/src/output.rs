//! File writers: CSV logs, versioned JSON documents and minimal SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use zlip_core::model::DomainId;
use zlip_core::orbit::StanceSide;
use zlip_core::sim::{SweepTable, TrajectoryLog};

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.display().to_string(), source })?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Ok(path)
    }

    /// Writes `{"schema_version", "command", ...body}`.
    pub fn write_json<T: Serialize>(&self, name: &str, command: &str, body: &T) -> Result<PathBuf, CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("command".into(), command.into());
        match serde_json::to_value(body).map_err(|e| CliError::Runtime(e.to_string()))? {
            serde_json::Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(name, &text)
    }

    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let io = |e: csv::Error| CliError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        for r in rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Ok(path)
    }
}

/// One row of the trajectory CSV. Column order is part of the output format.
#[derive(Debug, Serialize)]
pub struct LogRow {
    pub t: f64,
    pub domain: DomainId,
    pub stance: StanceSide,
    pub pivot_x: f64,
    pub pivot_y: f64,
    pub com_x: f64,
    pub com_y: f64,
    pub com_vx: f64,
    pub com_vy: f64,
    pub p_x: f64,
    pub l_x: f64,
    pub zmp_x: f64,
    pub p_y: f64,
    pub l_y: f64,
    pub zmp_y: f64,
    pub zmp_world_x: f64,
    pub zmp_world_y: f64,
    pub hull_distance: f64,
    pub domain_phase: f64,
    pub step_phase: f64,
    pub push_ax: f64,
    pub push_ay: f64,
    pub plan_held: bool,
}

pub fn log_rows(log: &TrajectoryLog) -> Vec<LogRow> {
    log.samples
        .iter()
        .map(|s| LogRow {
            t: s.t,
            domain: s.domain,
            stance: s.stance,
            pivot_x: s.pivot_world[0],
            pivot_y: s.pivot_world[1],
            com_x: s.com_world[0],
            com_y: s.com_world[1],
            com_vx: s.com_velocity[0],
            com_vy: s.com_velocity[1],
            p_x: s.state.sagittal.p,
            l_x: s.state.sagittal.l,
            zmp_x: s.state.sagittal.p_zmp,
            p_y: s.state.coronal.p,
            l_y: s.state.coronal.l,
            zmp_y: s.state.coronal.p_zmp,
            zmp_world_x: s.zmp_world[0],
            zmp_world_y: s.zmp_world[1],
            hull_distance: s.zmp_hull_distance,
            domain_phase: s.domain_phase,
            step_phase: s.step_phase,
            push_ax: s.disturbance[0],
            push_ay: s.disturbance[1],
            plan_held: s.plan_held,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub magnitude: f64,
    pub mode: String,
    pub success: bool,
    pub peak_velocity_deviation: f64,
    pub settling_steps: usize,
    pub error: String,
}

pub fn sweep_rows(table: &SweepTable) -> Vec<SweepRow> {
    table
        .cells
        .iter()
        .map(|c| SweepRow {
            magnitude: c.magnitude,
            mode: c.mode.to_string(),
            success: c.success,
            peak_velocity_deviation: c.peak_velocity_deviation,
            settling_steps: c.settling_steps,
            error: c.error.clone().unwrap_or_default(),
        })
        .collect()
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line plot with a frame, zero line, tick labels and a legend.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 320.0;
    const ML: f64 = 60.0;
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 45.0;
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n\
         <rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W / 2.0,
        escape(title),
        W - ML - MR,
        H - MT - MB
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        out += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{fx:.2}</text>\n",
            sx(fx),
            H - MB + 15.0
        );
        out += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{fy:.2}</text>\n",
            ML - 5.0,
            sy(fy) + 4.0
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        out += &format!(
            "<line x1=\"{ML}\" x2=\"{}\" y1=\"{:.1}\" y2=\"{:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
            W - MR,
            sy(0.0),
            sy(0.0)
        );
    }
    out += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (ML + W - MR) / 2.0,
        H - 8.0,
        escape(x_label)
    );
    out += &format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out += &format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            s.color,
            pts.join(" ")
        );
        let ly = MT + 14.0 + 14.0 * i as f64;
        out += &format!(
            "<line x1=\"{}\" x2=\"{}\" y1=\"{ly}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            W - MR - 110.0,
            W - MR - 90.0,
            s.color,
            W - MR - 85.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    out += "</svg>\n";
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn velocity_plot(log: &TrajectoryLog, title: &str) -> String {
    let pick = |f: fn(&zlip_core::sim::LogSample) -> f64| log.samples.iter().map(|s| (s.t, f(s))).collect();
    svg_plot(
        title,
        "time [s]",
        "CoM velocity [m/s]",
        &[
            Series { label: "sagittal", color: "#1f77b4", points: pick(|s| s.com_velocity[0]) },
            Series { label: "coronal", color: "#d62728", points: pick(|s| s.com_velocity[1]) },
        ],
    )
}

pub fn phase_plot(log: &TrajectoryLog, title: &str) -> String {
    let pick = |f: fn(&zlip_core::sim::LogSample) -> f64| log.samples.iter().map(|s| (s.t, f(s))).collect();
    svg_plot(
        title,
        "time [s]",
        "phase [-]",
        &[
            Series { label: "domain phase", color: "#2ca02c", points: pick(|s| s.domain_phase) },
            Series { label: "step phase", color: "#9467bd", points: pick(|s| s.step_phase) },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_one_polyline_per_series() {
        let svg = svg_plot(
            "a < b",
            "x",
            "y",
            &[
                Series { label: "one", color: "red", points: vec![(0.0, 0.0), (1.0, 1.0)] },
                Series { label: "two", color: "blue", points: vec![(0.0, f64::NAN)] },
            ],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
