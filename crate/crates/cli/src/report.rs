//! Per-cell rows, per-group aggregates, and CSV emission.

use std::io::Write;
use std::path::Path;

use rinst_core::error::{CoreError, Result};

/// One (dataset, scenario, method, seed) result. Failed cells carry NaN
/// metrics and an error message in the manifest.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub rmse: f64,
    pub mae: f64,
    pub snr_db: f64,
    pub wall_time_s: f64,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.rmse.is_nan()
    }

    /// Stable ordering key; report order never depends on scheduling.
    pub fn key(&self) -> (String, String, String, u64) {
        (self.dataset.clone(), self.scenario.clone(), self.method.clone(), self.seed)
    }
}

/// Seed-aggregated statistics for one (dataset, scenario, method) group.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub scenario: String,
    pub method: String,
    pub seeds: usize,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub mean_snr: f64,
    pub std_snr: f64,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl BenchReport {
    /// Sort rows by cell key and recompute aggregates over successful rows.
    pub fn finalize(rows: Vec<ReportRow>) -> BenchReport {
        let mut rows = rows;
        rows.sort_by_key(|r| r.key());
        let mut aggregates = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            let group_key = (
                rows[i].dataset.clone(),
                rows[i].scenario.clone(),
                rows[i].method.clone(),
            );
            let mut j = i;
            while j < rows.len()
                && (rows[j].dataset.clone(), rows[j].scenario.clone(), rows[j].method.clone())
                    == group_key
            {
                j += 1;
            }
            let group: Vec<&ReportRow> = rows[i..j].iter().filter(|r| !r.failed()).collect();
            if !group.is_empty() {
                let collect = |f: fn(&ReportRow) -> f64| -> Vec<f64> {
                    group.iter().map(|r| f(r)).collect()
                };
                let (mean_rmse, std_rmse) = mean_std(&collect(|r| r.rmse));
                let (mean_mae, std_mae) = mean_std(&collect(|r| r.mae));
                let (mean_snr, std_snr) = mean_std(&collect(|r| r.snr_db));
                let (mean_wall, _) = mean_std(&collect(|r| r.wall_time_s));
                aggregates.push(AggregateRow {
                    dataset: group_key.0,
                    scenario: group_key.1,
                    method: group_key.2,
                    seeds: group.len(),
                    mean_rmse,
                    std_rmse,
                    mean_mae,
                    std_mae,
                    mean_snr,
                    std_snr,
                    mean_wall_time_s: mean_wall,
                });
            }
            i = j;
        }
        BenchReport { rows, aggregates }
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut report = std::fs::File::create(dir.join("report.csv"))?;
        writeln!(report, "dataset,scenario,method,seed,rmse,mae,snr_db,wall_time_s")?;
        for r in &self.rows {
            writeln!(
                report,
                "{},{},{},{},{},{},{},{}",
                r.dataset, r.scenario, r.method, r.seed, r.rmse, r.mae, r.snr_db, r.wall_time_s
            )?;
        }
        let mut agg = std::fs::File::create(dir.join("aggregate.csv"))?;
        writeln!(
            agg,
            "dataset,scenario,method,seeds,mean_rmse,std_rmse,mean_mae,std_mae,mean_snr,std_snr,mean_wall_time_s"
        )?;
        for a in &self.aggregates {
            writeln!(
                agg,
                "{},{},{},{},{},{},{},{},{},{},{}",
                a.dataset,
                a.scenario,
                a.method,
                a.seeds,
                a.mean_rmse,
                a.std_rmse,
                a.mean_mae,
                a.std_mae,
                a.mean_snr,
                a.std_snr,
                a.mean_wall_time_s
            )?;
        }
        Ok(())
    }

    pub fn aggregate_for(
        &self,
        dataset: &str,
        scenario: &str,
        method: &str,
    ) -> Result<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.dataset == dataset && a.scenario == scenario && a.method == method)
            .ok_or_else(|| {
                CoreError::InvalidArg(format!("no aggregate for {dataset}/{scenario}/{method}"))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, seed: u64, snr: f64) -> ReportRow {
        ReportRow {
            dataset: "d".into(),
            scenario: "s".into(),
            method: method.into(),
            seed,
            rmse: 0.1,
            mae: 0.05,
            snr_db: snr,
            wall_time_s: 1.0,
        }
    }

    #[test]
    fn aggregates_match_hand_computation() {
        let rows = vec![row("m", 0, 10.0), row("m", 1, 14.0), row("m", 2, 12.0)];
        let rep = BenchReport::finalize(rows);
        let a = rep.aggregate_for("d", "s", "m").unwrap();
        assert_eq!(a.seeds, 3);
        assert!((a.mean_snr - 12.0).abs() < 1e-12);
        assert!((a.std_snr - 2.0).abs() < 1e-12); // sample std of {10,14,12}
    }

    #[test]
    fn failed_rows_excluded_from_aggregates() {
        let mut bad = row("m", 3, f64::NAN);
        bad.rmse = f64::NAN;
        let rows = vec![row("m", 0, 10.0), bad];
        let rep = BenchReport::finalize(rows);
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.aggregate_for("d", "s", "m").unwrap().seeds, 1);
    }

    #[test]
    fn rows_sorted_by_key() {
        let rows = vec![row("z", 1, 1.0), row("a", 0, 1.0), row("a", 1, 1.0)];
        let rep = BenchReport::finalize(rows);
        assert_eq!(rep.rows[0].method, "a");
        assert_eq!(rep.rows[0].seed, 0);
        assert_eq!(rep.rows[2].method, "z");
    }
}
