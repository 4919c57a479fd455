use std::io::Write;

use super::study::{DiscretizationStudy, TimingStudy, VarianceStudy};

/// Header `h,error`.
pub fn write_error_csv<W: Write>(study: &DiscretizationStudy, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["h", "error"])?;
    for r in &study.rows {
        w.write_record([format!("{:e}", r.h), format!("{:e}", r.error)])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `level,h,samples,mean,sigma,mean_fine,sigma_fine,wall_clock`.
pub fn write_variance_csv<W: Write>(study: &VarianceStudy, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["level", "h", "samples", "mean", "sigma", "mean_fine", "sigma_fine", "wall_clock"])?;
    for s in &study.levels {
        w.write_record([
            s.level.to_string(),
            format!("{:e}", s.h),
            s.samples.to_string(),
            format!("{:e}", s.mean),
            format!("{:e}", s.sigma),
            format!("{:e}", s.mean_fine),
            format!("{:e}", s.sigma_fine),
            format!("{:e}", s.wall_clock),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `component,multiplicity,h,samples,seconds`, one row per
/// component and mesh size with the median over repetitions.
pub fn write_timing_csv<W: Write>(study: &TimingStudy, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["component", "multiplicity", "h", "samples", "seconds"])?;
    for r in &study.rows {
        w.write_record([
            r.label.clone(),
            r.multiplicity.to_string(),
            format!("{:e}", r.h),
            r.samples.to_string(),
            format!("{:e}", r.median),
        ])?;
    }
    w.flush()?;
    Ok(())
}
