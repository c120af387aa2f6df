//! Per-iteration solver trace and its CSV form.

use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fine,
    Coarse,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fine => "fine",
            Level::Coarse => "coarse",
        })
    }
}

/// State after one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub level: Level,
    /// Loss at the iterate the step was computed from.
    pub loss: f64,
    pub grad_norm: f64,
    /// Regularization used for this step.
    pub lambda: f64,
    /// `NaN` when the step was discarded before a ratio could be formed.
    pub rho: f64,
    pub accepted: bool,
    /// Cumulative matvec flops after the iteration.
    pub flops: u64,
    /// Whether the coarse test held (two-level runs only).
    pub go_down: Option<bool>,
    /// `|grad m_H(x0) - R grad f|` for coarse attempts.
    pub coherence_error: Option<f64>,
}

pub const TRACE_HEADER: &str = "iteration,level,loss,grad_norm,lambda,rho,accepted,flops,go_down,coherence_error";

/// Writes `records` as CSV with [`TRACE_HEADER`].
pub fn write_trace_csv<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        let go_down = r.go_down.map(|g| g.to_string()).unwrap_or_default();
        let coherence = r.coherence_error.map(|c| format!("{c:.6e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:.9e},{:.6e},{:.6e},{:.6e},{},{},{},{}",
            r.iteration, r.level, r.loss, r.grad_norm, r.lambda, r.rho, r.accepted, r.flops, go_down, coherence
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rec = TraceRecord {
            iteration: 3,
            level: Level::Coarse,
            loss: 0.5,
            grad_norm: 0.25,
            lambda: 0.05,
            rho: 0.9,
            accepted: true,
            flops: 1234,
            go_down: Some(true),
            coherence_error: Some(0.0),
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(
            lines[1],
            "3,coarse,5.000000000e-1,2.500000e-1,5.000000e-2,9.000000e-1,true,1234,true,0.000000e0"
        );
    }
}
