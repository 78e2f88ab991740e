//! File formats.
//!
//! * Ground truth: one JSON document with the dataset header and an
//!   `images` array; masks are `{class_id, rle}` and triplets `[sbj, pred, obj]`.
//! * Predictions: newline-delimited JSON, one image per line:
//!   `{image_id, masks: [{class_id, confidence, rle}], relations: [{sbj, obj, scores}]}`.
//! * Reports: a JSON document plus a CSV table `protocol,metric,k,value`.
//!
//! `rle` is the canonical row-major run-length form of [`RleMask`]. Records
//! may omit `width`/`height`, in which case the header defaults apply.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    DatasetHeader, GroundTruthGraph, GroundTruthSet, GtNode, PredictionGraph, Relation, Triplet,
};
use crate::mask::{RleMask, ScoredMask};
use crate::protocol::Protocol;
use crate::report::MetricReport;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtDocument {
    predicates: Vec<String>,
    classes: Vec<String>,
    width: u32,
    height: u32,
    images: Vec<GtImageRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtImageRecord {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    masks: Vec<GtMaskRecord>,
    triplets: Vec<[usize; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtMaskRecord {
    class_id: u32,
    rle: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    masks: Vec<PredMaskRecord>,
    relations: Vec<RelationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredMaskRecord {
    class_id: u32,
    confidence: f64,
    rle: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationRecord {
    sbj: usize,
    obj: usize,
    scores: Vec<f64>,
}

fn decode_mask(
    image: &str,
    index: usize,
    width: u32,
    height: u32,
    rle: Vec<u32>,
) -> Result<RleMask> {
    RleMask::new(width, height, rle).map_err(|source| Error::Mask {
        image: image.to_string(),
        mask: index,
        source,
    })
}

/// Parses and validates a ground-truth document.
pub fn load_ground_truth(document: &str) -> Result<GroundTruthSet> {
    let doc: GtDocument = serde_json::from_str(document).map_err(|e| Error::parse(None, e))?;
    let header = DatasetHeader {
        predicates: doc.predicates,
        classes: doc.classes,
        width: doc.width,
        height: doc.height,
    };
    header.validate()?;
    let mut images = Vec::with_capacity(doc.images.len());
    for rec in doc.images {
        let width = rec.width.unwrap_or(header.width);
        let height = rec.height.unwrap_or(header.height);
        let nodes = rec
            .masks
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                Ok(GtNode {
                    class_id: m.class_id,
                    mask: decode_mask(&rec.image_id, i, width, height, m.rle)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        images.push(GroundTruthGraph {
            image_id: rec.image_id,
            width,
            height,
            nodes,
            triplets: rec
                .triplets
                .iter()
                .map(|&[s, p, o]| Triplet::new(s, p, o))
                .collect(),
        });
    }
    let set = GroundTruthSet { header, images };
    set.validate()?;
    Ok(set)
}

pub fn dump_ground_truth(set: &GroundTruthSet) -> String {
    let doc = GtDocument {
        predicates: set.header.predicates.clone(),
        classes: set.header.classes.clone(),
        width: set.header.width,
        height: set.header.height,
        images: set
            .images
            .iter()
            .map(|g| GtImageRecord {
                image_id: g.image_id.clone(),
                width: Some(g.width),
                height: Some(g.height),
                masks: g
                    .nodes
                    .iter()
                    .map(|n| GtMaskRecord {
                        class_id: n.class_id,
                        rle: n.mask.runs().to_vec(),
                    })
                    .collect(),
                triplets: g
                    .triplets
                    .iter()
                    .map(|t| [t.subject, t.predicate, t.object])
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("ground truth serializes");
    out.push('\n');
    out
}

/// Parses and validates newline-delimited prediction records.
pub fn load_predictions(document: &str, header: &DatasetHeader) -> Result<Vec<PredictionGraph>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (lineno, line) in document.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(Some(lineno + 1), e))?;
        if !ids.insert(rec.image_id.clone()) {
            return Err(Error::validation(
                &rec.image_id,
                "image appears more than once in the prediction file",
            ));
        }
        let width = rec.width.unwrap_or(header.width);
        let height = rec.height.unwrap_or(header.height);
        let masks = rec
            .masks
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                Ok(ScoredMask {
                    class_id: m.class_id,
                    confidence: m.confidence,
                    mask: decode_mask(&rec.image_id, i, width, height, m.rle)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = PredictionGraph {
            image_id: rec.image_id,
            width,
            height,
            masks,
            relations: rec
                .relations
                .into_iter()
                .map(|r| Relation {
                    subject: r.sbj,
                    object: r.obj,
                    scores: r.scores,
                })
                .collect(),
        };
        graph.validate(header)?;
        out.push(graph);
    }
    Ok(out)
}

pub fn dump_predictions(predictions: &[PredictionGraph]) -> String {
    let mut out = String::new();
    for g in predictions {
        let rec = PredictionRecord {
            image_id: g.image_id.clone(),
            width: Some(g.width),
            height: Some(g.height),
            masks: g
                .masks
                .iter()
                .map(|m| PredMaskRecord {
                    class_id: m.class_id,
                    confidence: m.confidence,
                    rle: m.mask.runs().to_vec(),
                })
                .collect(),
            relations: g
                .relations
                .iter()
                .map(|r| RelationRecord {
                    sbj: r.subject,
                    obj: r.object,
                    scores: r.scores.clone(),
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

/// The structured and tabular renderings of a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocuments {
    pub json: String,
    pub csv: String,
}

pub fn write_report(report: &MetricReport) -> Result<ReportDocuments> {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["protocol", "metric", "k", "value"])?;
    for (protocol, metric, k, value) in report.rows() {
        let k = k.map_or_else(|| "inf".to_string(), |k| k.to_string());
        w.write_record([protocol.as_str(), metric.as_str(), &k, &value.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let csv = String::from_utf8(bytes).expect("csv output is utf-8");
    Ok(ReportDocuments { json, csv })
}

/// Side-by-side table of both protocols for several prediction sets, one row
/// per (set, metric, k) with `delta = MultiMPO - SingleMPO`.
pub fn comparison_csv(reports: &[(String, MetricReport)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "predictions",
        "metric",
        "k",
        "single_mpo",
        "multi_mpo",
        "delta",
    ])?;
    for (name, report) in reports {
        for (protocol, metric, k, single) in report.rows() {
            if protocol != Protocol::SingleMpo {
                continue;
            }
            let Some(multi) = report.score(Protocol::MultiMpo, metric, k) else {
                continue;
            };
            let k = k.map_or_else(|| "inf".to_string(), |k| k.to_string());
            w.write_record([
                name.as_str(),
                metric.as_str(),
                &k,
                &single.to_string(),
                &multi.to_string(),
                &(multi - single).to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn load_report(json: &str) -> Result<MetricReport> {
    serde_json::from_str(json).map_err(|e| Error::parse(None, e))
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruthSet> {
    load_ground_truth(&fs::read_to_string(path)?)
}

pub fn read_predictions(path: &Path, header: &DatasetHeader) -> Result<Vec<PredictionGraph>> {
    load_predictions(&fs::read_to_string(path)?, header)
}

pub fn save_ground_truth(path: &Path, set: &GroundTruthSet) -> Result<()> {
    Ok(fs::write(path, dump_ground_truth(set))?)
}

pub fn save_predictions(path: &Path, predictions: &[PredictionGraph]) -> Result<()> {
    Ok(fs::write(path, dump_predictions(predictions))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Protocol;
    use crate::report::{Aggregation, Metric, ProtocolReport, Score};

    const MINIMAL: &str = r#"{
        "predicates": ["on", "holding"],
        "classes": ["person", "cup"],
        "width": 4, "height": 4,
        "images": [{
            "image_id": "img0",
            "masks": [{"class_id": 0, "rle": [0, 8, 8]}, {"class_id": 1, "rle": [12, 4]}],
            "triplets": [[0, 1, 1]]
        }]
    }"#;

    #[test]
    fn minimal_ground_truth_parses() {
        let set = load_ground_truth(MINIMAL).unwrap();
        assert_eq!(set.images.len(), 1);
        assert_eq!(set.images[0].nodes.len(), 2);
        assert_eq!(set.images[0].triplets, vec![Triplet::new(0, 1, 1)]);
        assert_eq!(load_ground_truth(&dump_ground_truth(&set)).unwrap(), set);
    }

    #[test]
    fn overlapping_ground_truth_is_rejected() {
        let doc = MINIMAL.replace("[12, 4]", "[4, 12]");
        let err = load_ground_truth(&doc).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("overlap"));
    }

    #[test]
    fn bad_run_sum_names_image_and_mask() {
        let doc = MINIMAL.replace("[12, 4]", "[12, 5]");
        let err = load_ground_truth(&doc).unwrap_err().to_string();
        assert!(err.contains("img0") && err.contains("mask 1"), "{err}");
    }

    #[test]
    fn bad_predicate_id_is_rejected() {
        let doc = MINIMAL.replace("[[0, 1, 1]]", "[[0, 2, 1]]");
        assert!(load_ground_truth(&doc).is_err());
    }

    #[test]
    fn prediction_records() {
        let header = load_ground_truth(MINIMAL).unwrap().header;
        let line = r#"{"image_id":"img0","masks":[{"class_id":0,"confidence":0.9,"rle":[0,8,8]},{"class_id":1,"confidence":0.5,"rle":[12,4]}],"relations":[{"sbj":0,"obj":1,"scores":[0.1,0.2,0.7]}]}"#;
        let preds = load_predictions(line, &header).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].relations[0].scores, vec![0.1, 0.2, 0.7]);
        assert_eq!(
            load_predictions(&dump_predictions(&preds), &header).unwrap(),
            preds
        );

        let short = line.replace("[0.1,0.2,0.7]", "[0.2,0.7]");
        assert!(load_predictions(&short, &header).is_err());
        let out_of_range = line.replace("[0.1,0.2,0.7]", "[0.1,0.2,1.7]");
        assert!(load_predictions(&out_of_range, &header).is_err());
        let bad_index = line.replace(r#""obj":1"#, r#""obj":4"#);
        assert!(load_predictions(&bad_index, &header).is_err());

        let empty = r#"{"image_id":"img0","masks":[],"relations":[]}"#;
        let preds = load_predictions(empty, &header).unwrap();
        assert!(preds[0].relations.is_empty());
        assert_eq!((preds[0].width, preds[0].height), (4, 4));

        let twice = format!("{empty}\n{empty}\n");
        assert!(load_predictions(&twice, &header).is_err());
        let err = load_predictions(&format!("{empty}\n{{oops"), &header).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn report_documents() {
        let score = |metric, k, value| Score {
            metric,
            k,
            value,
            per_predicate: vec![Some(value), None],
        };
        let report = MetricReport {
            aggregation: Aggregation::PerImage,
            iou_threshold: 0.5,
            merge_threshold: 0.5,
            ks: vec![20, 50],
            image_count: 3,
            scored_image_count: 2,
            no_images: false,
            predicates: vec!["on".into(), "holding".into()],
            protocols: [Protocol::SingleMpo, Protocol::MultiMpo]
                .into_iter()
                .map(|protocol| ProtocolReport {
                    protocol,
                    scores: vec![
                        score(Metric::MeanRecall, Some(20), 0.1 + 0.2),
                        score(Metric::MeanRecall, Some(50), 1.0 / 3.0),
                        score(Metric::MeanRecallInf, None, 0.75),
                    ],
                })
                .collect(),
            duplicates: Vec::new(),
            mean_duplicates_per_image: 0.0,
        };
        let docs = write_report(&report).unwrap();
        assert_eq!(load_report(&docs.json).unwrap(), report);
        let lines: Vec<&str> = docs.csv.lines().collect();
        assert_eq!(lines[0], "protocol,metric,k,value");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[1], "SingleMPO,mR,20,0.30000000000000004");
        assert_eq!(lines[3], "SingleMPO,mR@inf,inf,0.75");
    }
}
