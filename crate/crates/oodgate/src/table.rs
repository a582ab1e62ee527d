//! Backbone table CSV and reference-statistics JSON.

use std::collections::BTreeMap;
use std::path::Path;

use oodgate_core::backbone::{BackboneRow, Column, ReferenceStat, Statistic};
use serde::Deserialize;

use crate::error::{Error, Result};

pub const HEADER: [&str; 8] = [
    "name",
    "parameters_m",
    "flops_g",
    "feature_time_s",
    "total_time_s",
    "in_domain_acc",
    "ood1_acc",
    "ood2_acc",
];

#[derive(Debug, Deserialize)]
struct RawRow {
    name: String,
    parameters_m: f64,
    flops_g: f64,
    feature_time_s: f64,
    total_time_s: f64,
    in_domain_acc: f64,
    ood1_acc: f64,
    ood2_acc: f64,
}

pub fn parse_backbone_csv(path: &Path, text: &str) -> Result<Vec<BackboneRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Error::parse(
            path,
            format!("header must be `{}`", HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<RawRow>().enumerate() {
        // +2: 1-based and the header line
        let line = i + 2;
        let r = rec.map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        let row = BackboneRow {
            name: r.name,
            parameters_m: r.parameters_m,
            flops_g: r.flops_g,
            feature_time_s: r.feature_time_s,
            total_time_s: r.total_time_s,
            in_domain_acc: r.in_domain_acc,
            ood1_acc: r.ood1_acc,
            ood2_acc: r.ood2_acc,
        };
        row.validate()
            .map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_backbone_csv(path: &Path) -> Result<Vec<BackboneRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_backbone_csv(path, &text)
}

/// `{"<column>": {"mean": <f>, "median": <f>}, ...}`; either statistic may be
/// omitted.
pub fn parse_reference(path: &Path, text: &str) -> Result<Vec<ReferenceStat>> {
    let raw: BTreeMap<String, BTreeMap<String, f64>> =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
    let mut out = Vec::new();
    for (col, stats) in raw {
        let column = Column::parse(&col)
            .ok_or_else(|| Error::parse(path, format!("unknown column `{col}`")))?;
        for (stat, value) in stats {
            let statistic = Statistic::parse(&stat)
                .ok_or_else(|| Error::parse(path, format!("unknown statistic `{stat}`")))?;
            out.push(ReferenceStat {
                column,
                statistic,
                value,
            });
        }
    }
    out.sort_by_key(|r| (r.column, r.statistic));
    Ok(out)
}

pub fn read_reference(path: &Path) -> Result<Vec<ReferenceStat>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_reference(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "name,parameters_m,flops_g,feature_time_s,total_time_s,in_domain_acc,ood1_acc,ood2_acc\n\
                       ResNet18,11.7,1.8,175.6,199.21,100,100,81\n\
                       ResNet50,25.6,4.1,335.07,335.79,97.06,100,100\n";

    #[test]
    fn reads_rows() {
        let rows = parse_backbone_csv(Path::new("t.csv"), CSV).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].name, "ResNet50");
        assert_eq!(rows[1].total_time_s, 335.79);
    }

    #[test]
    fn rejects_bad_header_and_values() {
        let bad = CSV.replacen("flops_g", "flops", 1);
        assert!(parse_backbone_csv(Path::new("t.csv"), &bad).is_err());
        let bad = CSV.replacen("97.06", "197.06", 1);
        let err = parse_backbone_csv(Path::new("t.csv"), &bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn reference_stats() {
        let refs = parse_reference(
            Path::new("r.json"),
            r#"{"parameters_m": {"mean": 49.93, "median": 24.75}, "flops_g": {"mean": 9.46}}"#,
        )
        .unwrap();
        assert_eq!(refs.len(), 3);
        assert_eq!(refs[0].column, Column::Parameters);
        assert_eq!(refs[0].statistic, Statistic::Mean);
        assert!(parse_reference(Path::new("r.json"), r#"{"bogus": {"mean": 1}}"#).is_err());
    }
}
