//! CSV report and performance-matrix export.

use std::io::{self, Write};

use qnnae_core::qnnae::ArchitectureReport;

pub const CSV_HEADER: &str = "hidden,score_p0,mean_accuracy,min,max,stddev,num_samples,excluded,seed";

/// One row, fixed decimals so the bytes do not depend on locale or platform.
pub fn csv_row(r: &ArchitectureReport) -> String {
    format!(
        "{},{:.10},{:.10},{:.10},{:.10},{:.10},{},{},{}",
        r.architecture.hidden,
        r.score_p0,
        r.mean_accuracy,
        r.min_accuracy(),
        r.max_accuracy(),
        r.std_accuracy(),
        r.num_samples,
        r.excluded,
        r.seed
    )
}

pub fn write_csv<W: Write>(mut w: W, reports: &[ArchitectureReport]) -> io::Result<()> {
    w.write_all(CSV_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in reports {
        w.write_all(csv_row(r).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Bit matrix: one line per kept sample, `index bits`.
pub fn write_performances<W: Write>(mut w: W, reports: &[ArchitectureReport]) -> io::Result<()> {
    for r in reports {
        writeln!(w, "# hidden={}", r.architecture.hidden)?;
        for p in &r.performances {
            writeln!(w, "{} {}", p.source_weight_index, p.bits)?;
        }
    }
    w.flush()
}
