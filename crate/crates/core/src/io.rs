//! Batch file formats.
//!
//! JSON:
//!
//! ```json
//! {"M": 3, "capacities": [1, 1, 1, 1, 1, 1],
//!  "coflows": [{"id": 1, "release": 0, "weight": 1, "phi": 1,
//!               "flows": [{"src": 1, "dst": 4, "vol": 3.0}]}]}
//! ```
//!
//! `capacities`, `release`, `weight` and `phi` are optional (defaults: unit
//! capacities, release 0, weight 1, phi 1). Ports are 1-based: sources in
//! `1..=M`, destinations in `M+1..=2M`.
//!
//! CSV has one row per flow with header
//! `coflow_id,src,dst,vol,release,weight,phi`; the last three columns may be
//! empty. Coflow attributes are taken from the first row of each coflow.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Batch, Coflow, Fabric, Flow, PortId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowRecord {
    pub src: usize,
    pub dst: usize,
    pub vol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoflowRecord {
    pub id: usize,
    #[serde(default)]
    pub release: f64,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default = "one")]
    pub phi: f64,
    pub flows: Vec<FlowRecord>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchRecord {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacities: Option<Vec<f64>>,
    pub coflows: Vec<CoflowRecord>,
}

fn port(n: usize, coflow: usize, side: &'static str) -> Result<PortId> {
    PortId::from_number(n).ok_or(Error::InvalidPort { coflow, port: n, side })
}

fn scalar<S: Scalar>(v: f64) -> Result<S> {
    S::from_f64_value(v).ok_or(Error::Unrepresentable(v))
}

impl BatchRecord {
    pub fn into_batch<S: Scalar>(self) -> Result<Batch<S>> {
        let fabric = match self.capacities {
            Some(caps) => Fabric::with_capacities(self.m, caps.into_iter().map(scalar).collect::<Result<_>>()?)?,
            None => Fabric::new(self.m)?,
        };
        let mut coflows = Vec::with_capacity(self.coflows.len());
        for c in self.coflows {
            let flows = c
                .flows
                .iter()
                .map(|f| {
                    Ok(Flow::new(port(f.src, c.id, "ingress")?, port(f.dst, c.id, "egress")?, scalar(f.vol)?))
                })
                .collect::<Result<Vec<_>>>()?;
            coflows.push(
                Coflow::new(c.id, flows)
                    .with_release(scalar(c.release)?)
                    .with_weight(scalar(c.weight)?)
                    .with_phi(scalar(c.phi)?),
            );
        }
        Batch::new(fabric, coflows)
    }

    pub fn from_batch<S: Scalar>(batch: &Batch<S>) -> Self {
        let fabric = batch.fabric();
        let capacities = (!fabric.is_unit()).then(|| fabric.capacities().iter().map(|c| c.to_f64_value()).collect());
        let coflows = batch
            .coflows()
            .iter()
            .map(|c| CoflowRecord {
                id: c.id,
                release: c.release.to_f64_value(),
                weight: c.weight.to_f64_value(),
                phi: c.phi.to_f64_value(),
                flows: c
                    .flows
                    .iter()
                    .map(|f| FlowRecord { src: f.ingress.number(), dst: f.egress.number(), vol: f.volume.to_f64_value() })
                    .collect(),
            })
            .collect();
        BatchRecord { m: fabric.servers(), capacities, coflows }
    }
}

pub fn batch_from_json<S: Scalar>(text: &str) -> Result<Batch<S>> {
    let record: BatchRecord = serde_json::from_str(text)?;
    record.into_batch()
}

pub fn batch_to_json<S: Scalar>(batch: &Batch<S>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&BatchRecord::from_batch(batch))?)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    coflow_id: usize,
    src: usize,
    dst: usize,
    vol: f64,
    release: Option<f64>,
    weight: Option<f64>,
    phi: Option<f64>,
}

/// Read the CSV flow list. When `servers` is `None`, `M` is the smallest
/// value consistent with every row.
pub fn batch_from_csv<S: Scalar, R: Read>(reader: R, servers: Option<usize>) -> Result<Batch<S>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut coflows: Vec<CoflowRecord> = Vec::new();
    let (mut max_src, mut max_dst) = (0usize, 0usize);
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        max_src = max_src.max(row.src);
        max_dst = max_dst.max(row.dst);
        let flow = FlowRecord { src: row.src, dst: row.dst, vol: row.vol };
        match coflows.iter_mut().find(|c| c.id == row.coflow_id) {
            Some(c) => c.flows.push(flow),
            None => coflows.push(CoflowRecord {
                id: row.coflow_id,
                release: row.release.unwrap_or(0.0),
                weight: row.weight.unwrap_or(1.0),
                phi: row.phi.unwrap_or(1.0),
                flows: vec![flow],
            }),
        }
    }
    let m = servers.unwrap_or_else(|| max_src.max(max_dst.div_ceil(2)));
    BatchRecord { m, capacities: None, coflows }.into_batch()
}

pub fn batch_to_csv<S: Scalar, W: Write>(batch: &Batch<S>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["coflow_id", "src", "dst", "vol", "release", "weight", "phi"])?;
    for c in batch.coflows() {
        for f in &c.flows {
            w.write_record([
                c.id.to_string(),
                f.ingress.number().to_string(),
                f.egress.number().to_string(),
                f.volume.to_f64_value().to_string(),
                c.release.to_f64_value().to_string(),
                c.weight.to_f64_value().to_string(),
                c.phi.to_f64_value().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a batch, choosing the format from the file extension (`.csv` or JSON).
pub fn load_batch<S: Scalar>(path: &Path) -> Result<Batch<S>> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => batch_from_csv(text.as_bytes(), None),
        _ => batch_from_json(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn json_defaults_and_round_trip() {
        let text = r#"{"M": 1, "coflows": [{"id": 7, "flows": [{"src": 1, "dst": 2, "vol": 2.5}]}]}"#;
        let batch: Batch<f64> = batch_from_json(text).unwrap();
        let c = batch.coflow(0);
        assert_eq!((c.id, c.release, c.weight, c.phi), (7, 0.0, 1.0, 1.0));
        assert_eq!(c.flows[0].ingress, PortId(0));

        let ex = fixtures::crossing_pair::<f64>(3, 1);
        let again: Batch<f64> = batch_from_json(&batch_to_json(&ex).unwrap()).unwrap();
        assert_eq!(ex, again);
    }

    #[test]
    fn json_rejects_bad_ports() {
        let text = r#"{"M": 1, "coflows": [{"id": 1, "flows": [{"src": 2, "dst": 2, "vol": 1}]}]}"#;
        assert!(batch_from_json::<f64>(text).is_err());
        let text = r#"{"M": 1, "coflows": [{"id": 1, "flows": [{"src": 0, "dst": 2, "vol": 1}]}]}"#;
        assert!(batch_from_json::<f64>(text).is_err());
    }

    #[test]
    fn csv_ingestion() {
        let text = "coflow_id,src,dst,vol,release,weight,phi\n1,1,4,3,,,\n1,2,5,3,,,\n2,1,4,1,0,2,1\n";
        let batch: Batch<f64> = batch_from_csv(text.as_bytes(), None).unwrap();
        assert_eq!(batch.fabric().servers(), 3);
        assert_eq!(batch.len(), 2);
        assert_eq!(batch.coflow(0).flows.len(), 2);
        assert_eq!(batch.coflow(1).weight, 2.0);

        let ex = fixtures::crossing_pair::<f64>(3, 1);
        let mut buf = Vec::new();
        batch_to_csv(&ex, &mut buf).unwrap();
        let back: Batch<f64> = batch_from_csv(buf.as_slice(), Some(3)).unwrap();
        assert_eq!(ex, back);
    }
}
