//! Curves go to CSV with a `t,value` header; metadata goes to a JSON
//! sidecar with keys `n, kind, L, d, step, extrapolated_limit, uncertainty`.

use std::io::Write;

use serde_json::json;

use super::DiagramEvaluation;
use crate::error::Result;

pub fn write_evaluation<C: Write, J: Write>(eval: &DiagramEvaluation, mut csv: C, sidecar: J) -> Result<()> {
    writeln!(csv, "t,value")?;
    for (t, v) in &eval.curve {
        writeln!(csv, "{t:e},{v:e}")?;
    }
    let meta = json!({
        "n": eval.n,
        "kind": eval.kind,
        "L": eval.l,
        "d": eval.d,
        "step": eval.step,
        "extrapolated_limit": eval.extrapolated_limit,
        "uncertainty": eval.uncertainty,
        "method": eval.method,
    });
    serde_json::to_writer_pretty(sidecar, &meta)?;
    Ok(())
}
