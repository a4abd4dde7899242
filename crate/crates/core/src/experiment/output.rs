use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{Aggregate, SeriesSummary};
use crate::simulator::LabeledScan;

use super::ExperimentKind;

/// One point of a truth-labeled scan dump.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanDumpRow {
    pub run: usize,
    pub step: usize,
    /// 1-based sensor number.
    pub sensor: usize,
    pub x_km: f64,
    pub y_km: f64,
    pub is_clutter: bool,
}

pub(super) fn scan_rows(run: usize, scans: &[(usize, Vec<LabeledScan>)]) -> Vec<ScanDumpRow> {
    let mut rows = Vec::new();
    for (sensor, labeled) in scans {
        for l in labeled {
            for (z, &is_clutter) in l.scan.points.iter().zip(&l.is_clutter) {
                rows.push(ScanDumpRow {
                    run,
                    step: l.scan.time_index,
                    sensor: sensor + 1,
                    x_km: z[0],
                    y_km: z[1],
                    is_clutter,
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub aggregate: Aggregate,
    pub scans: Option<Vec<ScanDumpRow>>,
}

fn render(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

impl ExperimentOutput {
    fn step_rows<F>(&self, f: F) -> impl Iterator<Item = Vec<String>>
    where
        F: Fn(usize, &SeriesSummary) -> Vec<String>,
    {
        let agg = &self.aggregate;
        let mut rows = Vec::with_capacity(agg.steps * agg.series.len());
        for k in 0..agg.steps {
            for s in &agg.series {
                let mut row = vec![(k + 1).to_string(), s.name.clone()];
                row.extend(f(k, s));
                rows.push(row);
            }
        }
        rows.into_iter()
    }

    /// `step,series,mean_ospa,runs`
    pub fn ospa_csv(&self) -> String {
        let runs = self.aggregate.runs;
        render(
            &["step", "series", "mean_ospa", "runs"],
            self.step_rows(move |k, s| vec![s.mean_ospa[k].to_string(), runs.to_string()]),
        )
    }

    /// `step,series,mean_trace,present_count`; the mean is empty when no run
    /// reported an estimate at that step.
    pub fn trace_csv(&self) -> String {
        render(
            &["step", "series", "mean_trace", "present_count"],
            self.step_rows(|k, s| {
                vec![
                    s.mean_trace[k].map_or(String::new(), |v| v.to_string()),
                    s.present_count[k].to_string(),
                ]
            }),
        )
    }

    /// `step,series,mean_q_absent,mean_q_present,runs`
    pub fn presence_csv(&self) -> String {
        let runs = self.aggregate.runs;
        render(
            &["step", "series", "mean_q_absent", "mean_q_present", "runs"],
            self.step_rows(move |k, s| {
                vec![
                    s.mean_q_absent[k].to_string(),
                    s.mean_q_present[k].to_string(),
                    runs.to_string(),
                ]
            }),
        )
    }

    /// `run,step,sensor,x_km,y_km,is_clutter`, when scans were kept.
    pub fn scans_csv(&self) -> Option<String> {
        self.scans.as_ref().map(|rows| {
            render(
                &["run", "step", "sensor", "x_km", "y_km", "is_clutter"],
                rows.iter().map(|r| {
                    vec![
                        r.run.to_string(),
                        r.step.to_string(),
                        r.sensor.to_string(),
                        r.x_km.to_string(),
                        r.y_km.to_string(),
                        r.is_clutter.to_string(),
                    ]
                }),
            )
        })
    }

    /// Writes every CSV into `dir` (created if missing) and returns the paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut files = vec![
            ("ospa.csv", self.ospa_csv()),
            ("trace.csv", self.trace_csv()),
            ("presence.csv", self.presence_csv()),
        ];
        if let Some(s) = self.scans_csv() {
            files.push(("scans.csv", s));
        }
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body)
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
                Ok(path)
            })
            .collect()
    }
}
