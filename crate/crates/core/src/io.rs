//! File formats: dataset CSV/JSON, chain CSV, summary JSON and noise files.
//!
//! Every CSV starts with a `# <tool version> config=<hash>` provenance line;
//! readers skip lines starting with `#`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genmodel::GenerativeConfig;
use crate::inference::{ChainSample, ChainSummary};
use crate::simplex::{ClassLabel, NoiseParams, ObservationSequence, SimplexVector};

/// SHA-256 (hex) of the JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn provenance_line(hash: &str) -> String {
    format!("# {} config={hash}\n", crate::TOOL_VERSION)
}

/// Formats a float with the shortest representation that round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn csv_writer<W: Write>(mut out: W, hash: &str) -> Result<csv::Writer<W>> {
    out.write_all(provenance_line(hash).as_bytes())?;
    Ok(csv::WriterBuilder::new().flexible(false).from_writer(out))
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Writes `class,o_1,...,o_M` rows. Unlabeled sequences leave `class` empty.
pub fn write_dataset_csv<W: Write>(out: W, data: &ObservationSequence, hash: &str) -> Result<()> {
    let mut w = csv_writer(out, hash)?;
    let mut header = vec!["class".to_string()];
    header.extend((1..=data.classes()).map(|m| format!("o_{m}")));
    w.write_record(&header)?;
    for (i, o) in data.iter().enumerate() {
        let mut row = vec![data
            .labels()
            .map(|l| l[i].to_string())
            .unwrap_or_default()];
        row.extend(o.probs().iter().map(|p| fmt_f64(*p)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset CSV. The `class` column is optional; when present,
/// labels must be filled on every row or on none.
/// Errors name the 1-based data row.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<ObservationSequence> {
    let mut reader = csv_reader(input);
    let header = reader.headers()?.clone();
    let skip = usize::from(header.get(0) == Some("class"));
    let classes = header.len() - skip;
    let well_formed = header
        .iter()
        .skip(skip)
        .enumerate()
        .all(|(m, h)| h == format!("o_{}", m + 1));
    if !well_formed || classes < 2 {
        return Err(Error::Row {
            row: 0,
            message: "header must be `[class,]o_1,...,o_M` with M >= 2".into(),
        });
    }
    let mut observations = Vec::new();
    let mut labels = Vec::new();
    let mut unlabeled = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        if record.len() != classes + skip {
            return Err(Error::Row {
                row,
                message: format!("expected {} fields, found {}", classes + skip, record.len()),
            });
        }
        let values = record
            .iter()
            .skip(skip)
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Row {
                row,
                message: format!("bad probability: {e}"),
            })?;
        let o = SimplexVector::new(values).map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        match if skip == 1 { record.get(0).unwrap_or("") } else { "" } {
            "" => unlabeled += 1,
            text => {
                let index = text.parse::<usize>().map_err(|e| Error::Row {
                    row,
                    message: format!("bad class label `{text}`: {e}"),
                })?;
                let label = ClassLabel::new(index, classes).map_err(|e| Error::Row {
                    row,
                    message: e.to_string(),
                })?;
                labels.push(label);
            }
        }
        observations.push(o);
    }
    match (labels.len(), unlabeled) {
        (0, _) => ObservationSequence::new(classes, observations),
        (_, 0) => ObservationSequence::with_labels(classes, observations, labels),
        _ => Err(Error::Row {
            row: 0,
            message: "class column must be filled on every row or on none".into(),
        }),
    }
}

/// Like [`read_dataset_csv`], but an input with no header at all (empty or
/// comments only) yields `None` instead of an error.
pub fn read_stream_csv<R: Read>(mut input: R) -> Result<Option<ObservationSequence>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let blank = bytes
        .split(|&b| b == b'\n')
        .all(|line| line.trim_ascii().is_empty() || line.starts_with(b"#"));
    if blank {
        return Ok(None);
    }
    read_dataset_csv(bytes.as_slice()).map(Some)
}

/// One labeled observation in the JSON dataset format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassLabel>,
    pub o: SimplexVector,
}

/// JSON dataset with the generating config embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub tool: String,
    pub config_hash: String,
    pub config: GenerativeConfig,
    pub per_class: Option<usize>,
    /// The concentrations the data was drawn with.
    pub theta: NoiseParams,
    pub observations: Vec<DatasetRow>,
}

impl DatasetFile {
    pub fn new(
        config: GenerativeConfig,
        per_class: Option<usize>,
        theta: NoiseParams,
        data: &ObservationSequence,
        hash: String,
    ) -> Self {
        let observations = data
            .iter()
            .enumerate()
            .map(|(i, o)| DatasetRow {
                class: data.labels().map(|l| l[i]),
                o: o.clone(),
            })
            .collect();
        Self {
            tool: crate::TOOL_VERSION.to_string(),
            config_hash: hash,
            config,
            per_class,
            theta,
            observations,
        }
    }

    pub fn sequence(&self) -> Result<ObservationSequence> {
        let classes = self.config.classes();
        let obs: Vec<SimplexVector> = self.observations.iter().map(|r| r.o.clone()).collect();
        let labels: Option<Vec<ClassLabel>> = self.observations.iter().map(|r| r.class).collect();
        match labels {
            Some(labels) if !labels.is_empty() => {
                ObservationSequence::with_labels(classes, obs, labels)
            }
            _ => ObservationSequence::new(classes, obs),
        }
    }
}

/// One row per retained sample: `sample,theta_1..theta_M,kappa,gamma,log_posterior`.
pub fn write_chain_csv<W: Write>(
    out: W,
    classes: usize,
    samples: &[ChainSample],
    hash: &str,
) -> Result<()> {
    let mut w = csv_writer(out, hash)?;
    let mut header = vec!["sample".to_string()];
    header.extend((1..=classes).map(|m| format!("theta_{m}")));
    header.extend(["kappa", "gamma", "log_posterior"].map(String::from));
    w.write_record(&header)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.theta.iter().map(|t| fmt_f64(*t)));
        row.extend([s.kappa, s.gamma, s.log_posterior].map(fmt_f64));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a chain CSV back into samples.
pub fn read_chain_csv<R: Read>(input: R) -> Result<Vec<ChainSample>> {
    let mut reader = csv_reader(input);
    let header = reader.headers()?.clone();
    let classes = header.len().saturating_sub(4);
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let values = record
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
        if values.len() != classes + 3 {
            return Err(Error::Row {
                row,
                message: "wrong number of fields".into(),
            });
        }
        samples.push(ChainSample {
            theta: values[..classes].to_vec(),
            kappa: values[classes],
            gamma: values[classes + 1],
            log_posterior: values[classes + 2],
        });
    }
    Ok(samples)
}

/// Summary JSON: provenance plus the chain summary (samples excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub tool: String,
    pub config_hash: String,
    pub summary: ChainSummary,
}

pub fn write_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>, P: AsRef<Path>>(path: P) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Noise-parameter file with provenance; readable by [`read_noise_file`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFile {
    pub tool: String,
    pub config_hash: String,
    pub theta: Vec<f64>,
}

impl NoiseFile {
    pub fn new(noise: &NoiseParams, hash: String) -> Self {
        Self {
            tool: crate::TOOL_VERSION.to_string(),
            config_hash: hash,
            theta: noise.theta().to_vec(),
        }
    }
}

/// Reads noise parameters from `{"theta": [...]}` or from a summary file
/// (posterior medians).
pub fn read_noise_file<P: AsRef<Path>>(path: P) -> Result<NoiseParams> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("theta").is_some() {
        return Ok(serde_json::from_value(value)?);
    }
    if value.get("summary").is_some() {
        let file: SummaryFile = serde_json::from_value(value)?;
        return NoiseParams::new(file.summary.theta.iter().map(|p| p.median).collect());
    }
    Err(Error::Config(
        "noise file needs a `theta` array or a chain summary".into(),
    ))
}

pub fn create_buffered<P: AsRef<Path>>(path: P) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open_buffered<P: AsRef<Path>>(path: P) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
