use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::{summarize_runs, RunSummary};

pub const REPORT_SCHEMA: &str = "seqrisk.report/1";

/// One labelled summary: every number carries its model, window, condition
/// and run count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub window: String,
    pub condition: String,
    pub metric: String,
    pub runs: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub values: Vec<f64>,
}

impl ReportRow {
    pub fn new(model: &str, window: &str, condition: &str, metric: &str, values: Vec<f64>) -> Self {
        let RunSummary { mean, std, runs } = summarize_runs(&values);
        Self {
            model: model.into(),
            window: window.into(),
            condition: condition.into(),
            metric: metric.into(),
            runs,
            mean,
            std,
            values,
        }
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            mean: self.mean,
            std: self.std,
            runs: self.runs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    /// Free-form lines recorded in the summary document.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn find(&self, model: &str, window: &str, condition: &str, metric: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.window == window && r.condition == condition && r.metric == metric)
    }

    pub fn mean(&self, model: &str, window: &str, condition: &str, metric: &str) -> Option<f64> {
        self.find(model, window, condition, metric).map(|r| r.mean)
    }

    /// Tab-separated table preceded by a schema line.
    pub fn to_tsv(&self) -> String {
        let mut s = format!("#schema={REPORT_SCHEMA}\n");
        s.push_str("experiment\tmodel\twindow\tcondition\tmetric\truns\tmean\tstd\tvalues\n");
        for r in &self.rows {
            let std = r.std.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            let values: Vec<String> = r.values.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}",
                self.experiment,
                r.model,
                r.window,
                r.condition,
                r.metric,
                r.runs,
                r.mean,
                std,
                values.join(",")
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_layout() {
        let mut r = Report::new("window-sweep");
        r.rows.push(ReportRow::new("lstm", "24,18", "sliced", "micro_auroc", vec![0.8, 1.0]));
        r.rows.push(ReportRow::new("lr", "24", "sliced", "micro_auroc", vec![0.7]));
        let tsv = r.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "#schema=seqrisk.report/1");
        assert!(lines[2].contains("0.900000\t0.141421"));
        assert!(lines[3].contains("\tNA\t"));
        assert_eq!(r.mean("lstm", "24,18", "sliced", "micro_auroc"), Some(0.9));
    }
}
