use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::geometry::Pose;
use crate::metrics::MetricSample;
use crate::planner::RoundReport;

pub const ROUNDS_HEADER: &str = "round,sim_time_s,K,target_index,n_tree_nodes,best_combined,s_unknown,s_refine,s_surround,dominance_count,waypoint_x,waypoint_y,waypoint_z,waypoint_yaw";
pub const GAINS_HEADER: &str = "round,branch_id,n_nodes,visibility,s_unknown,s_refine,s_surround,combined,K";
pub const METRICS_HEADER: &str = "sim_time_s,directivity,roi_voxels,total_voxels,roi_ratio,roi_progress,target_index,K";
pub const TRAJECTORY_HEADER: &str = "sim_time_s,x,y,z,yaw";

/// In-memory contents of a run's output directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLogs {
    pub header: String,
    pub rounds: String,
    pub gains: String,
    pub metrics: String,
    pub trajectory: String,
}

fn k(mode_k: bool) -> u8 {
    mode_k as u8
}

impl RunLogs {
    pub fn new() -> Self {
        RunLogs {
            header: String::new(),
            rounds: format!("{ROUNDS_HEADER}\n"),
            gains: format!("{GAINS_HEADER}\n"),
            metrics: format!("{METRICS_HEADER}\n"),
            trajectory: format!("{TRAJECTORY_HEADER}\n"),
        }
    }

    pub fn round(&mut self, sim_time: f64, r: &RoundReport) {
        let w = &r.waypoint;
        let _ = writeln!(
            self.rounds,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            sim_time,
            k(r.mode_k),
            r.target_index,
            r.n_tree_nodes,
            r.best.combined,
            r.best.s_unknown,
            r.best.s_refine,
            r.best.s_surround,
            r.dominance_count,
            w.position.x,
            w.position.y,
            w.position.z,
            w.yaw()
        );
        for b in &r.branches {
            let g = &b.gain;
            let _ = writeln!(
                self.gains,
                "{},{},{},{},{},{},{},{},{}",
                r.round,
                b.branch_id,
                b.n_nodes,
                g.visibility,
                g.s_unknown,
                g.s_refine,
                g.s_surround,
                g.combined,
                k(b.mode_k)
            );
        }
    }

    pub fn metric(&mut self, s: &MetricSample) {
        let _ = writeln!(
            self.metrics,
            "{},{},{},{},{},{},{},{}",
            s.sim_time,
            s.directivity,
            s.roi_voxels,
            s.total_voxels,
            s.roi_ratio,
            s.roi_progress,
            s.target_index,
            k(s.mode_k)
        );
    }

    pub fn pose(&mut self, sim_time: f64, p: &Pose) {
        let _ = writeln!(
            self.trajectory,
            "{},{},{},{},{}",
            sim_time,
            p.position.x,
            p.position.y,
            p.position.z,
            p.yaw()
        );
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("header.txt"), &self.header)?;
        fs::write(dir.join("rounds.csv"), &self.rounds)?;
        fs::write(dir.join("gains.csv"), &self.gains)?;
        fs::write(dir.join("metrics.csv"), &self.metrics)?;
        fs::write(dir.join("trajectory.csv"), &self.trajectory)?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LogError {
    #[error("missing or unexpected header, expected '{0}'")]
    Header(&'static str),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Reads a metrics CSV back into samples.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricSample>, LogError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(METRICS_HEADER) {
        return Err(LogError::Header(METRICS_HEADER));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = n + 2;
        let err = |message: String| LogError::Row { row, message };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", f.len())));
        }
        let real = |i: usize| f[i].parse::<f64>().map_err(|_| err(format!("bad number '{}'", f[i])));
        let int = |i: usize| f[i].parse::<usize>().map_err(|_| err(format!("bad count '{}'", f[i])));
        out.push(MetricSample {
            sim_time: real(0)?,
            directivity: real(1)?,
            roi_voxels: int(2)?,
            total_voxels: int(3)?,
            roi_ratio: real(4)?,
            roi_progress: real(5)?,
            target_index: int(6)?,
            mode_k: int(7)? != 0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip() {
        let mut logs = RunLogs::new();
        let s = MetricSample {
            sim_time: 1.5,
            directivity: -0.25,
            roi_voxels: 3,
            total_voxels: 40,
            roi_ratio: 0.075,
            roi_progress: 0.1,
            target_index: 2,
            mode_k: false,
        };
        logs.metric(&s);
        logs.metric(&MetricSample { sim_time: 2.0, mode_k: true, ..s });
        let back = parse_metrics(&logs.metrics).unwrap();
        assert_eq!(back, vec![s, MetricSample { sim_time: 2.0, mode_k: true, ..s }]);
        assert!(matches!(parse_metrics("x\n"), Err(LogError::Header(_))));
        let bad = format!("{METRICS_HEADER}\n1,2,3\n");
        assert!(matches!(parse_metrics(&bad), Err(LogError::Row { row: 2, .. })));
    }
}
