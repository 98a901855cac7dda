//! Feature CSV (`timestamp`, inputs, `v_<bus>` targets, `activation`) with
//! a JSON sidecar describing columns, split and normalizer.

use std::path::Path;

use lvse_core::dataset::{split, Column, FeatureMatrix, FeatureSetId, Normalizer, SplitIndices, SplitSpec};
use lvse_core::synth::ScenarioId;
use serde::{Deserialize, Serialize};

use crate::table::{flag, format_timestamp, num, read_json, write_csv, write_json, Table};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub config_hash: String,
    pub data_hash: String,
    pub scenario: ScenarioId,
    pub feature_set: FeatureSetId,
    pub rows: usize,
    pub columns: Vec<Column>,
    pub targets: Vec<String>,
    pub split: SplitIndices,
    /// Statistics of the training rows.
    pub normalizer: Normalizer,
}

fn header(fm: &FeatureMatrix) -> Vec<String> {
    let mut h = vec!["timestamp".to_string()];
    h.extend(fm.column_names().map(String::from));
    h.extend(fm.target_names().iter().map(|t| format!("v_{t}")));
    h.push("activation".into());
    h
}

/// Writes `<stem>.csv` and `<stem>.json` and returns the sidecar.
pub fn write_features(
    dir: &Path,
    stem: &str,
    fm: &FeatureMatrix,
    (scenario, feature_set): (ScenarioId, FeatureSetId),
    spec: &SplitSpec,
    data_hash: &str,
    config_hash: &str,
) -> Result<FeatureSidecar, Error> {
    let idx = split(fm.rows(), spec)?;
    let normalizer = Normalizer::fit(&fm.view(idx.train.clone()))?;
    let (d, k) = (fm.input_dim(), fm.output_dim());
    let rows = (0..fm.rows()).map(|r| {
        let mut row = Vec::with_capacity(d + k + 2);
        row.push(format_timestamp(fm.timestamps()[r]));
        row.extend(fm.inputs()[r * d..(r + 1) * d].iter().map(|&v| num(v)));
        row.extend(fm.targets()[r * k..(r + 1) * k].iter().map(|&v| num(v)));
        row.push(flag(fm.activation()[r]).to_string());
        row
    });
    let meta = [("config_hash", config_hash), ("data_hash", data_hash)];
    write_csv(&dir.join(format!("{stem}.csv")), &meta, &header(fm), rows)?;
    let side = FeatureSidecar {
        config_hash: config_hash.into(),
        data_hash: data_hash.into(),
        scenario,
        feature_set,
        rows: fm.rows(),
        columns: fm.columns().to_vec(),
        targets: fm.target_names().to_vec(),
        split: idx,
        normalizer,
    };
    write_json(&dir.join(format!("{stem}.json")), &side)?;
    Ok(side)
}

pub fn read_features(dir: &Path, stem: &str) -> Result<(FeatureMatrix, FeatureSidecar), Error> {
    let side: FeatureSidecar = read_json(&dir.join(format!("{stem}.json")))?;
    let path = dir.join(format!("{stem}.csv"));
    let table = Table::read(&path)?;
    table.expect_meta("data_hash", &side.data_hash)?;
    if table.len() != side.rows {
        return Err(Error::format(&path, format!("{} rows, sidecar says {}", table.len(), side.rows)));
    }
    let mut expected = vec!["timestamp".to_string()];
    expected.extend(side.columns.iter().map(|c| c.name.clone()));
    expected.extend(side.targets.iter().map(|t| format!("v_{t}")));
    expected.push("activation".into());
    table.expect_header(&expected)?;

    let (d, k) = (side.columns.len(), side.targets.len());
    let cols: Vec<Vec<f64>> = (1..=d + k).map(|c| table.f64_column(c)).collect::<Result<_, _>>()?;
    let mut inputs = Vec::with_capacity(side.rows * d);
    let mut targets = Vec::with_capacity(side.rows * k);
    for r in 0..side.rows {
        inputs.extend(cols[..d].iter().map(|c| c[r]));
        targets.extend(cols[d..].iter().map(|c| c[r]));
    }
    let fm = FeatureMatrix::new(
        side.columns.clone(),
        side.targets.clone(),
        inputs,
        targets,
        table.timestamps()?,
        Some(table.bool_column(d + k + 1)?),
    )?;
    Ok((fm, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lvse_core::dataset::Provenance;
    use lvse_core::time::Timestamp;

    #[test]
    fn round_trip() {
        let n = 40;
        let cols = vec![
            Column { name: "a".into(), provenance: Provenance::Weather, lag_minutes: 0 },
            Column { name: "b".into(), provenance: Provenance::LaggedSmartMeter, lag_minutes: 1440 },
        ];
        let x: Vec<f64> = (0..2 * n).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 1e-4 / 7.0).collect();
        let ts = (0..n as u32).map(|i| Timestamp(1440 + 5 * i)).collect();
        let act = (0..n).map(|i| i % 3 == 0).collect();
        let fm = FeatureMatrix::new(cols, vec!["N4".into()], x, y, ts, Some(act)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let side = write_features(
            dir.path(),
            "S1_FS1",
            &fm,
            (ScenarioId::S1, FeatureSetId::FS1),
            &SplitSpec::default(),
            "d",
            "c",
        )
        .unwrap();
        assert_eq!(side.split.train, 0..32);
        let (back, side2) = read_features(dir.path(), "S1_FS1").unwrap();
        assert_eq!(back, fm);
        assert_eq!(side2, side);
    }
}
