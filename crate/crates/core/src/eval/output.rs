use std::io::Write;

use super::{EvalError, MetricsSummary, ReplicateRecord, RocPoint};

fn header<W: Write>(w: &mut W, comments: &[String]) -> Result<(), EvalError> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

/// One row per (replicate, method, c); SHD, TPR and FPR are class averages.
pub fn write_records_csv<W: Write>(
    mut w: W,
    records: &[ReplicateRecord],
    comments: &[String],
) -> Result<(), EvalError> {
    header(&mut w, comments)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["replicate", "method", "c", "shd", "tpr", "fpr", "class_shd"])?;
    for r in records {
        let per_class: Vec<String> = r.class_shd.iter().map(|s| s.to_string()).collect();
        csv.write_record([
            r.replicate.to_string(),
            r.method.name().to_string(),
            r.c.to_string(),
            r.mean_shd().to_string(),
            r.mean_tpr().to_string(),
            r.mean_fpr().to_string(),
            per_class.join(";"),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(
    mut w: W,
    summary: &MetricsSummary,
    comments: &[String],
) -> Result<(), EvalError> {
    header(&mut w, comments)?;
    writeln!(w, "# shd convention: {}", summary.shd_convention)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "method", "c", "replicates", "mean_shd", "se_shd", "mean_tpr", "mean_fpr",
    ])?;
    for r in &summary.rows {
        csv.write_record([
            r.method.name().to_string(),
            r.c.to_string(),
            r.replicates.to_string(),
            r.mean_shd.to_string(),
            r.se_shd.to_string(),
            r.mean_tpr.to_string(),
            r.mean_fpr.to_string(),
        ])?;
    }
    for d in &summary.paired {
        csv.write_record([
            "separate_minus_joint".to_string(),
            d.c.to_string(),
            d.replicates.to_string(),
            d.mean.to_string(),
            d.se.to_string(),
            String::new(),
            String::new(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(
    mut w: W,
    points: &[RocPoint],
    comments: &[String],
) -> Result<(), EvalError> {
    header(&mut w, comments)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["method", "c", "fpr", "tpr"])?;
    for pt in points {
        csv.write_record([
            pt.method.name().to_string(),
            pt.c.to_string(),
            pt.fpr.to_string(),
            pt.tpr.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
