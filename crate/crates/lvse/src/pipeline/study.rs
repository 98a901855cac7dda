use std::ops::Range;

use lvse_core::bnn::{BnnConfig, BnnModel, PredictiveSummary};
use lvse_core::dataset::FeatureSetId;
use lvse_core::stats::{mean, normal_quantile};
use lvse_core::synth::ScenarioId;
use lvse_core::time::{Timestamp, STEPS_PER_DAY};
use log::info;
use serde::{Deserialize, Serialize};

use super::{load_features, Workspace};
use crate::checkpoint::save_bnn;
use crate::config::ExperimentConfig;
use crate::table::{flag, format_timestamp, num, write_csv, write_json};
use crate::Error;

/// Mean interval half-widths of one calendar week within one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeekRow {
    pub window: String,
    /// Zero-based week of the year (`day / 7`).
    pub week: u32,
    pub start: String,
    pub rows: usize,
    pub epistemic_half_width: f64,
    pub aleatoric_half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub config_hash: String,
    pub scenario: ScenarioId,
    pub feature_set: FeatureSetId,
    pub bus: String,
    /// `z(1 - alpha/2)`; half-widths are `z * sqrt(component)`.
    pub z: f64,
    pub train_rows: usize,
    pub val_rows: usize,
    pub eval_rows: usize,
    pub best_epoch: usize,
    /// Last seven days of the training rows.
    pub final_train_week_epistemic: f64,
    pub final_train_week_aleatoric: f64,
    pub val_epistemic: f64,
    pub val_aleatoric: f64,
    /// Evaluation rows in the configured summer months, if any.
    pub summer_epistemic: Option<f64>,
    pub summer_ratio: Option<f64>,
    pub weeks: Vec<WeekRow>,
}

fn window_of(i: usize, train: &Range<usize>, val: &Range<usize>) -> &'static str {
    if train.contains(&i) {
        "train"
    } else if val.contains(&i) {
        "val"
    } else {
        "eval"
    }
}

/// Trains the BNN on the early-year window only (no retraining) and
/// tracks the epistemic and aleatoric interval half-widths of one bus over
/// the rest of the horizon.
pub fn uncertainty_study(cfg: &ExperimentConfig, ws: &Workspace) -> Result<StudySummary, Error> {
    cfg.validate()?;
    let st = &cfg.study;
    let config_hash = cfg.hash();
    let fm = load_features(ws, cfg, st.scenario, st.feature_set)?;
    let bus = fm
        .target_names()
        .iter()
        .position(|b| *b == st.bus)
        .ok_or_else(|| Error::InvalidConfig(format!("bus {} is not estimated", st.bus)))?;
    let ts = fm.timestamps();
    let window = ts.iter().take_while(|t| t.day_of_year() < st.train_end_day).count();
    let n_val = (st.val_fraction * window as f64).floor() as usize;
    if window - n_val < 10 || n_val == 0 || window == fm.rows() {
        return Err(Error::InvalidConfig(format!(
            "training window before day {} has {window} of {} rows",
            st.train_end_day,
            fm.rows()
        )));
    }
    let train = 0..window - n_val;
    let val = window - n_val..window;
    let eval = window..fm.rows();

    let bnn = BnnConfig { seed: cfg.model_seed, ..st.bnn.clone() };
    let model = BnnModel::fit(&fm.view(train.clone()), &fm.view(val.clone()), &bnn)?;
    save_bnn(&ws.study().join("checkpoint.json"), &model, &config_hash)?;
    let s = model.predict(fm.inputs(), cfg.n_sample, cfg.alpha, cfg.model_seed)?;

    let z = normal_quantile(1.0 - cfg.alpha / 2.0);
    let k = s.outputs;
    let half = |v: &[f64]| -> Vec<f64> { PredictiveSummary::column(v, k, bus).iter().map(|x| z * x.sqrt()).collect() };
    let (epi, ale) = (half(&s.epistemic), half(&s.aleatoric));
    let mean_pred = PredictiveSummary::column(&s.mean, k, bus);
    let truth = PredictiveSummary::column(fm.targets(), k, bus);

    let header: Vec<String> = [
        "timestamp", "truth", "mean", "epistemic_half_width", "aleatoric_half_width", "total_half_width", "activation",
    ]
    .iter()
    .map(|h| h.to_string())
    .collect();
    let zs = num(z);
    let meta = [("config_hash", config_hash.as_str()), ("bus", st.bus.as_str()), ("z", zs.as_str())];
    let total = half(&s.total);
    write_csv(
        &ws.study().join("series.csv"),
        &meta,
        &header,
        eval.clone().map(|i| {
            vec![
                format_timestamp(ts[i]),
                num(truth[i]),
                num(mean_pred[i]),
                num(epi[i]),
                num(ale[i]),
                num(total[i]),
                flag(fm.activation()[i]).to_string(),
            ]
        }),
    )?;

    let weeks = weekly(ts, &epi, &ale, &train, &val);
    write_csv(
        &ws.study().join("weekly.csv"),
        &meta,
        &["window", "week", "start", "rows", "epistemic_half_width", "aleatoric_half_width"].map(String::from),
        weeks.iter().map(|w| {
            vec![
                w.window.clone(),
                w.week.to_string(),
                w.start.clone(),
                w.rows.to_string(),
                num(w.epistemic_half_width),
                num(w.aleatoric_half_width),
            ]
        }),
    )?;

    let last_week = train.end.saturating_sub(7 * STEPS_PER_DAY).max(train.start)..train.end;
    let summer: Vec<f64> =
        eval.clone().filter(|&i| st.summer_months.contains(&ts[i].month())).map(|i| epi[i]).collect();
    let val_epistemic = mean(&epi[val.clone()]);
    let summer_epistemic = (!summer.is_empty()).then(|| mean(&summer));
    let summary = StudySummary {
        config_hash,
        scenario: st.scenario,
        feature_set: st.feature_set,
        bus: st.bus.clone(),
        z,
        train_rows: train.len(),
        val_rows: val.len(),
        eval_rows: eval.len(),
        best_epoch: model.log.best_epoch,
        final_train_week_epistemic: mean(&epi[last_week.clone()]),
        final_train_week_aleatoric: mean(&ale[last_week]),
        val_epistemic,
        val_aleatoric: mean(&ale[val]),
        summer_epistemic,
        summer_ratio: summer_epistemic.map(|s| s / val_epistemic),
        weeks,
    };
    write_json(&ws.study().join("summary.json"), &summary)?;
    info!(
        "study: val epistemic {:.3e}, summer epistemic {:?}, ratio {:?}",
        summary.val_epistemic, summary.summer_epistemic, summary.summer_ratio
    );
    Ok(summary)
}

fn weekly(ts: &[Timestamp], epi: &[f64], ale: &[f64], train: &Range<usize>, val: &Range<usize>) -> Vec<WeekRow> {
    let mut weeks: Vec<WeekRow> = Vec::new();
    let mut sums = (0.0, 0.0);
    for i in 0..ts.len() {
        let window = window_of(i, train, val);
        let week = ts[i].day_of_year() / 7;
        let same = weeks.last().is_some_and(|w| w.week == week && w.window == window);
        if !same {
            close(weeks.last_mut(), sums);
            sums = (0.0, 0.0);
            weeks.push(WeekRow {
                window: window.into(),
                week,
                start: format_timestamp(ts[i]),
                rows: 0,
                epistemic_half_width: 0.0,
                aleatoric_half_width: 0.0,
            });
        }
        weeks.last_mut().expect("pushed").rows += 1;
        sums.0 += epi[i];
        sums.1 += ale[i];
    }
    close(weeks.last_mut(), sums);
    weeks
}

fn close(week: Option<&mut WeekRow>, (e, a): (f64, f64)) {
    if let Some(w) = week {
        w.epistemic_half_width = e / w.rows as f64;
        w.aleatoric_half_width = a / w.rows as f64;
    }
}
