use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use super::metrics::MetricsReport;
use super::protocol::ProtocolResults;
use crate::error::{Error, Result};
use crate::models::write_predictions_csv;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn metric_fields(m: &MetricsReport) -> Vec<String> {
    let mut v = vec![
        m.count.to_string(),
        format!("{:.6}", m.accuracy),
        format!("{:.6}", m.precision),
        format!("{:.6}", m.recall),
        format!("{:.6}", m.f1),
    ];
    v.extend(m.confusion.iter().flatten().map(|c| c.to_string()));
    v
}

/// Saves every kept model as `models/<stratum>/<algorithm>/window_NNN.json`
/// under `dir`; returns how many were written.
pub fn write_models(dir: &Path, results: &ProtocolResults) -> Result<usize> {
    let mut n = 0;
    for s in &results.strata {
        for w in &s.windows {
            for (alg, r) in &w.results {
                if let Some(model) = &r.model {
                    let path = dir
                        .join("models")
                        .join(s.stratum.label())
                        .join(alg.label())
                        .join(format!("window_{:03}.json", w.window.index));
                    create(&path)?;
                    model.save(&path)?;
                    n += 1;
                }
            }
        }
    }
    Ok(n)
}

/// Writes per-window predictions (and models, when kept), `metrics.csv`,
/// `ranks.csv`, `confidence_histogram.csv` and `failures.csv` under `dir`.
pub fn write_protocol_outputs(dir: &Path, results: &ProtocolResults) -> Result<()> {
    write_models(dir, results)?;
    let mut metrics = csv::Writer::from_writer(create(&dir.join("metrics.csv"))?);
    let mut header = vec!["stratum", "algorithm", "window", "n", "accuracy", "precision", "recall", "f1"];
    let cells = ["cm_hh", "cm_hd", "cm_ha", "cm_dh", "cm_dd", "cm_da", "cm_ah", "cm_ad", "cm_aa"];
    header.extend(cells);
    metrics.write_record(&header)?;
    let mut ranks = csv::Writer::from_writer(create(&dir.join("ranks.csv"))?);
    ranks.write_record(["stratum", "algorithm", "mean_rank", "accuracy", "windows", "best"])?;
    let mut hist = csv::Writer::from_writer(create(&dir.join("confidence_histogram.csv"))?);
    hist.write_record(["stratum", "algorithm", "lower", "upper", "count", "correct", "accuracy"])?;
    let mut failures = csv::Writer::from_writer(create(&dir.join("failures.csv"))?);
    failures.write_record(["stratum", "message"])?;

    for s in &results.strata {
        let label = s.stratum.label();
        for w in &s.windows {
            for (alg, r) in &w.results {
                let base = dir.join("predictions").join(label).join(alg.label());
                let path = base.join(format!("window_{:03}.csv", w.window.index));
                write_predictions_csv(&r.outcomes, create(&path)?)?;
                let mut rec = vec![label.to_string(), alg.label().to_string(), w.window.index.to_string()];
                rec.extend(metric_fields(&r.metrics));
                metrics.write_record(&rec)?;
            }
        }
        for sum in &s.summaries {
            let mut rec = vec![label.to_string(), sum.algorithm.label().to_string(), "pooled".to_string()];
            rec.extend(metric_fields(&sum.metrics));
            metrics.write_record(&rec)?;
            ranks.write_record([
                label.to_string(),
                sum.algorithm.label().to_string(),
                sum.mean_rank.map(|r| format!("{r:.4}")).unwrap_or_default(),
                format!("{:.6}", sum.metrics.accuracy),
                sum.windows.to_string(),
                (s.best == Some(sum.algorithm)).to_string(),
            ])?;
        }
        if let Some(best) = s.best {
            for b in &s.histogram {
                hist.write_record([
                    label.to_string(),
                    best.label().to_string(),
                    b.lower.to_string(),
                    b.upper.to_string(),
                    b.count.to_string(),
                    b.correct.to_string(),
                    b.accuracy().map(|a| format!("{a:.6}")).unwrap_or_default(),
                ])?;
            }
        }
        for f in &s.failures {
            failures.write_record([label, f.as_str()])?;
        }
    }
    for w in [&mut metrics, &mut ranks, &mut hist, &mut failures] {
        w.flush().map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}
