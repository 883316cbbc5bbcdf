use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{FilterState, Method, NoiseModel};
use crate::io::{fmt_f64, provenance_line};
use crate::simplex::{ClassLabel, ClassPrior, NoiseParams, ObservationSequence};

/// Options shared by single-method filtering and multi-method replay.
#[derive(Debug, Clone, Default)]
pub struct StreamOptions {
    /// Uniform when unset.
    pub prior: Option<ClassPrior>,
    /// Required for HBNI.
    pub noise: Option<NoiseModel>,
    /// `(row, theta)`: the HBNI filter switches to `theta` before folding in
    /// the 1-based `row`.
    pub noise_updates: Vec<(usize, NoiseParams)>,
}

/// Posterior after folding in observation `row` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub row: usize,
    pub method: Method,
    pub posterior: Vec<f64>,
    pub decision: ClassLabel,
    pub confidence: f64,
}

/// Runs one filter over a recorded stream, one trace row per observation.
/// `None` data (an empty input file) gives an empty trace.
pub fn run_stream_filter(
    data: Option<&ObservationSequence>,
    method: Method,
    options: &StreamOptions,
) -> Result<Vec<TraceRow>> {
    let Some(data) = data else {
        return Ok(Vec::new());
    };
    let prior = match &options.prior {
        Some(p) if p.classes() != data.classes() => {
            return Err(Error::Dimension {
                expected: data.classes(),
                got: p.classes(),
            })
        }
        Some(p) => p.clone(),
        None => ClassPrior::uniform(data.classes())?,
    };
    let mut updates = options.noise_updates.clone();
    updates.sort_by_key(|(row, _)| *row);
    if method != Method::Hbni && !updates.is_empty() {
        return Err(Error::Config(format!(
            "noise updates only apply to the HBNI filter, not {method}"
        )));
    }
    let mut filter = FilterState::new(method, prior, options.noise.clone())?;
    let mut pending = updates.into_iter().peekable();
    let mut trace = Vec::with_capacity(data.len());
    for (i, o) in data.iter().enumerate() {
        let row = i + 1;
        while let Some((_, theta)) = pending.next_if(|(r, _)| *r <= row) {
            filter.set_noise(theta)?;
        }
        filter.update(o)?;
        let posterior = filter.posterior();
        trace.push(TraceRow {
            row,
            method,
            decision: posterior.argmax(),
            confidence: posterior.confidence(),
            posterior: posterior.probs.into_inner(),
        });
    }
    Ok(trace)
}

/// Every method over the same stream, concatenated method by method.
pub fn run_replay(
    data: Option<&ObservationSequence>,
    methods: &[Method],
    options: &StreamOptions,
) -> Result<Vec<TraceRow>> {
    let mut all = Vec::new();
    for &method in methods {
        let mut per_method = options.clone();
        if method != Method::Hbni {
            per_method.noise_updates.clear();
        }
        all.extend(run_stream_filter(data, method, &per_method)?);
    }
    Ok(all)
}

/// `row,method,p_1..p_M,decision,confidence`.
pub fn write_trace_csv<W: Write>(
    mut out: W,
    classes: usize,
    trace: &[TraceRow],
    hash: &str,
) -> Result<()> {
    out.write_all(provenance_line(hash).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string(), "method".to_string()];
    header.extend((1..=classes).map(|m| format!("p_{m}")));
    header.extend(["decision", "confidence"].map(String::from));
    w.write_record(&header)?;
    for t in trace {
        let mut rec = vec![t.row.to_string(), t.method.to_string()];
        rec.extend(t.posterior.iter().map(|p| fmt_f64(*p)));
        rec.push(t.decision.to_string());
        rec.push(fmt_f64(t.confidence));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
