//! Deterministic artifact writers. Every file is byte-identical across
//! runs of the same config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use profilecast_core::eval::{ConfusionMatrix, EvalReport, SegmentShare};

use crate::pipeline::ComparisonRow;
use crate::PipelineError;

fn writer(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// 6-significant-digit float used in plot-ready CSVs.
fn sig6(v: f64) -> String {
    format!("{v:.5e}")
}

/// `cluster,count,share_pct` with shares at 1 decimal.
pub fn write_segments(path: &Path, shares: &[SegmentShare]) -> Result<(), PipelineError> {
    let mut w = writer(path)?;
    writeln!(w, "cluster,count,share_pct")?;
    for s in shares {
        writeln!(w, "{},{},{:.1}", s.cluster, s.count, s.share_pct)?;
    }
    w.flush()?;
    Ok(())
}

/// `cluster,slot,mean,sd`, one row per cluster and slot.
pub fn write_cluster_profiles(
    path: &Path,
    profiles: &[profilecast_core::eval::ClusterProfile],
) -> Result<(), PipelineError> {
    let mut w = writer(path)?;
    writeln!(w, "cluster,slot,mean,sd")?;
    for p in profiles {
        for (slot, (m, s)) in p.mean.iter().zip(&p.sd).enumerate() {
            writeln!(w, "{},{},{},{}", p.cluster, slot, sig6(*m), sig6(*s))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Column-normalized percentage confusion matrix, rows = predicted,
/// columns = observed, 1 decimal, with class-id headers.
pub fn write_confusion(path: &Path, cm: &ConfusionMatrix) -> Result<(), PipelineError> {
    let h = cm.h();
    let col_sums = cm.col_sums();
    let mut w = writer(path)?;
    write!(w, "predicted")?;
    for observed in 0..h {
        write!(w, ",obs_{observed}")?;
    }
    writeln!(w)?;
    for predicted in 0..h {
        write!(w, "{predicted}")?;
        for observed in 0..h {
            let pct = if col_sums[observed] == 0 {
                0.0
            } else {
                cm.count(predicted, observed) as f64 / col_sums[observed] as f64 * 100.0
            };
            write!(w, ",{pct:.1}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-model evaluation rows: CV score and hold-out metrics at 4 decimals.
pub fn write_report(path: &Path, reports: &[EvalReport]) -> Result<(), PipelineError> {
    let mut w = writer(path)?;
    writeln!(
        w,
        "model,granularity,cv_params,cv_score,holdout_accuracy,kappa,kappa_degenerate"
    )?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{:.4},{:.4},{:.4},{}",
            r.model, r.granularity, r.cv_params, r.cv_score, r.accuracy, r.kappa,
            r.kappa_degenerate
        )?;
    }
    w.flush()?;
    Ok(())
}

/// The cross-granularity comparison table, one row per attempted
/// (granularity, classifier) pair.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<(), PipelineError> {
    let mut w = writer(path)?;
    writeln!(w, "granularity,model,status,cv_params,cv_score,holdout_accuracy,kappa")?;
    for r in rows {
        let opt = |v: &Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.granularity,
            r.model,
            r.status,
            r.cv_params.as_deref().unwrap_or("-"),
            opt(&r.cv_score),
            opt(&r.holdout_accuracy),
            opt(&r.kappa),
        )?;
    }
    w.flush()?;
    Ok(())
}
