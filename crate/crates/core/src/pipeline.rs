//! Cleanup, per-trial difficulty, regression comparison and sensitivity
//! sweeps over a [`Dataset`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::difficulty::{
    discrete_width_ratio, effective_width_sd, id_na, id_sa, id_ta, id_tsa, temporal_factor, EffectiveWidthConfig,
    Formulation, IdSample, TemporalFactorParams, WidthGrouping, WidthMethod,
};
use crate::error::{Error, Result};
use crate::stats::{
    box_stats, compensated_sum, histogram, ols_fit, pairwise_f_test, pearson_r, throughput, tukey_hsd, BoxStats,
    Histogram, PairwiseFResult, RegressionResult, ThroughputResult, TukeyResult,
};
use crate::trial::{AmplitudeSource, CleanupRecord, Dataset, Trial};

/// Bins used for the difficulty histograms.
pub const HISTOGRAM_BINS: usize = 30;

/// Variance comparisons reported by [`analyze`], larger-variance side first.
pub const F_TEST_PAIRS: [(Formulation, Formulation); 4] = [
    (Formulation::Tsa, Formulation::Na),
    (Formulation::Tsa, Formulation::Sa),
    (Formulation::Ta, Formulation::Na),
    (Formulation::Ta, Formulation::Sa),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CleanupStage {
    #[serde(rename = "error_removal")]
    ErrorRemoval,
    L1,
    L2,
}

impl CleanupStage {
    pub fn name(self) -> &'static str {
        match self {
            CleanupStage::ErrorRemoval => "error_removal",
            CleanupStage::L1 => "L1",
            CleanupStage::L2 => "L2",
        }
    }
}

/// Which cleanup stages run, and the movement-time band they keep.
/// Stages always execute in the order error removal, L1, L2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanupSpec {
    pub sd_multiplier: f64,
    pub stages: Vec<CleanupStage>,
}

impl Default for CleanupSpec {
    fn default() -> Self {
        Self {
            sd_multiplier: 3.0,
            stages: vec![CleanupStage::ErrorRemoval, CleanupStage::L1, CleanupStage::L2],
        }
    }
}

impl CleanupSpec {
    pub fn new(sd_multiplier: f64, mut stages: Vec<CleanupStage>) -> Result<Self> {
        stages.sort_unstable();
        stages.dedup();
        let spec = Self { sd_multiplier, stages };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd_multiplier.is_finite() && self.sd_multiplier > 0.0) {
            return Err(Error::invalid(format!(
                "sd multiplier must be > 0, got {}",
                self.sd_multiplier
            )));
        }
        Ok(())
    }

    fn ordered_stages(&self) -> Vec<CleanupStage> {
        let mut s = self.stages.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Per-trial acceptance under a single-pass `mean ± k·SD` band.
fn sd_band_mask(values: &[f64], k: f64) -> Result<Vec<bool>> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "SD filter needs at least 2 trials, got {}",
            values.len()
        )));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid(format!("sd multiplier must be > 0, got {k}")));
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let sd = (compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)).sqrt();
    let limit = k * sd;
    Ok(values.iter().map(|v| (v - mean).abs() <= limit).collect())
}

/// Splits trials into those whose movement time lies within `k` sample
/// standard deviations of the mean and the rest. Mean and SD come from the
/// input as given; trials on the boundary are accepted.
pub fn filter_sd(trials: &[Trial], sd_multiplier: f64) -> Result<(Vec<Trial>, Vec<Trial>)> {
    let mts: Vec<f64> = trials.iter().map(|t| t.movement_time_s).collect();
    let mask = sd_band_mask(&mts, sd_multiplier)?;
    let (accepted, rejected): (Vec<_>, Vec<_>) = trials.iter().zip(mask).partition(|(_, keep)| *keep);
    Ok((
        accepted.into_iter().map(|(t, _)| t.clone()).collect(),
        rejected.into_iter().map(|(t, _)| t.clone()).collect(),
    ))
}

fn run_stage(trials: Vec<Trial>, stage: CleanupStage, k: f64) -> Result<Vec<Trial>> {
    if trials.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match stage {
        CleanupStage::ErrorRemoval => Ok(trials.into_iter().filter(|t| t.validate().is_ok()).collect()),
        CleanupStage::L2 => Ok(filter_sd(&trials, k)?.0),
        CleanupStage::L1 => {
            let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
            for (i, t) in trials.iter().enumerate() {
                groups.entry((&t.participant_id, &t.session_id)).or_default().push(i);
            }
            let mut keep = vec![true; trials.len()];
            for members in groups.values() {
                // groups too small to estimate a spread pass through unchanged
                if members.len() < 2 {
                    continue;
                }
                let mts: Vec<f64> = members.iter().map(|&i| trials[i].movement_time_s).collect();
                for (&i, ok) in members.iter().zip(sd_band_mask(&mts, k)?) {
                    keep[i] = ok;
                }
            }
            Ok(trials
                .into_iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(t, _)| t)
                .collect())
        }
    }
}

/// Applies the configured cleanup stages and appends one ledger record per
/// stage to the returned dataset. Trial order is preserved.
pub fn run_cleanup(dataset: &Dataset, spec: &CleanupSpec) -> Result<Dataset> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = dataset.clone();
    for stage in spec.ordered_stages() {
        let input = out.trials.len();
        let survivors = run_stage(std::mem::take(&mut out.trials), stage, spec.sd_multiplier)
            .map_err(|e| e.at_stage(stage.name()))?;
        out.cleanup_history
            .push(CleanupRecord::new(stage.name(), input, &survivors));
        out.trials = survivors;
    }
    Ok(out)
}

/// `[NA, SA, TA, TSA]` for one trial.
pub fn id_quadruple(amplitude: f64, width: f64, effective_width: f64, t: f64) -> Result<[f64; 4]> {
    Ok([
        id_na(amplitude, width)?,
        id_sa(amplitude, effective_width)?,
        id_ta(amplitude, width, t)?,
        id_tsa(amplitude, effective_width, t)?,
    ])
}

/// Everything computed for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialIds {
    pub amplitude_px: f64,
    pub amplitude_source: AmplitudeSource,
    pub width_px: f64,
    pub effective_width_px: f64,
    pub mt_s: f64,
    pub t: f64,
    /// Indexed by [`Formulation::ALL`] order.
    pub ids: [f64; 4],
}

impl TrialIds {
    pub fn id(&self, f: Formulation) -> f64 {
        self.ids[f as usize]
    }
}

/// How effective widths were obtained for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthSummary {
    pub method: WidthMethod,
    pub grouping: WidthGrouping,
    pub error_rate: Option<f64>,
    pub mean_width_px: f64,
    pub mean_effective_width_px: f64,
    /// Endpoint groups used by the standard-deviation method.
    pub groups: usize,
    /// Groups that fell back to the discrete-error method.
    pub fallback_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdTable {
    pub rows: Vec<TrialIds>,
    pub widths: WidthSummary,
    pub warnings: Vec<String>,
}

impl IdTable {
    pub fn column(&self, f: Formulation) -> Vec<f64> {
        self.rows.iter().map(|r| r.id(f)).collect()
    }

    pub fn movement_times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mt_s).collect()
    }

    pub fn samples(&self, f: Formulation) -> Vec<IdSample> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| IdSample {
                id_bits: r.id(f),
                formulation: f,
                trial_ref: i,
            })
            .collect()
    }
}

fn group_key(t: &Trial, grouping: WidthGrouping) -> (String, u64) {
    match grouping {
        WidthGrouping::ByParticipantAndWidth => (t.participant_id.clone(), t.target_width_px.to_bits()),
        WidthGrouping::ByWidth => (String::new(), t.target_width_px.to_bits()),
        WidthGrouping::Global => (String::new(), 0),
    }
}

fn group_sd_width(trials: &[Trial], members: &[usize]) -> Result<f64> {
    let offsets = members
        .iter()
        .map(|&i| trials[i].endpoint_axis_offset())
        .collect::<Result<Vec<f64>>>()?;
    effective_width_sd(&offsets)
}

/// Per-trial effective widths plus the summary and fallback count.
fn effective_widths(trials: &[Trial], config: &EffectiveWidthConfig) -> Result<(Vec<f64>, usize, usize)> {
    config.validate()?;
    match config.method {
        WidthMethod::DiscreteError => {
            let ratio = discrete_width_ratio(config.error_rate.expect("validated"))?;
            Ok((trials.iter().map(|t| ratio * t.target_width_px).collect(), 0, 0))
        }
        WidthMethod::StandardDeviation => {
            let mut groups: BTreeMap<(String, u64), Vec<usize>> = BTreeMap::new();
            for (i, t) in trials.iter().enumerate() {
                groups.entry(group_key(t, config.grouping)).or_default().push(i);
            }
            let mut out = vec![0.0; trials.len()];
            let mut fallbacks = 0;
            for ((participant, _), members) in &groups {
                let we = match group_sd_width(trials, members) {
                    Ok(we) => Some(we),
                    Err(e) => match config.error_rate {
                        Some(_) => {
                            fallbacks += 1;
                            None
                        }
                        None => {
                            let width = trials[members[0]].target_width_px;
                            let scope = match config.grouping {
                                WidthGrouping::ByParticipantAndWidth => {
                                    format!("participant {participant}, width {width}")
                                }
                                WidthGrouping::ByWidth => format!("width {width}"),
                                WidthGrouping::Global => "all trials".into(),
                            };
                            return Err(Error::MissingInput(format!(
                                "effective width for {scope}: {e}; supply end and target_center coordinates or an error rate"
                            )));
                        }
                    },
                };
                for &i in members {
                    out[i] = match we {
                        Some(we) => we,
                        None => discrete_width_ratio(config.error_rate.expect("checked"))? * trials[i].target_width_px,
                    };
                }
            }
            Ok((out, groups.len(), fallbacks))
        }
    }
}

/// Computes the four difficulty indices for every trial.
///
/// Effective widths come from endpoint scatter under the standard-deviation
/// method, or from the nominal width and an error rate under the
/// discrete-error method. A standard-deviation group without usable
/// endpoints falls back to the discrete-error method when an error rate is
/// configured and is an error otherwise.
pub fn compute_ids(dataset: &Dataset, config: &EffectiveWidthConfig, params: &TemporalFactorParams) -> Result<IdTable> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    params.validate()?;
    let (we, groups, fallback_groups) = effective_widths(&dataset.trials, config)?;
    let mut rows = Vec::with_capacity(dataset.len());
    let (mut approximated, mut tiny_we) = (0, 0);
    for (trial, &effective_width) in dataset.trials.iter().zip(&we) {
        let amplitude = trial.movement_amplitude()?;
        if amplitude.is_approximated() {
            approximated += 1;
        }
        if effective_width <= 1.0 {
            tiny_we += 1;
        }
        let t = temporal_factor(trial.movement_time_s, params)?;
        rows.push(TrialIds {
            amplitude_px: amplitude.px,
            amplitude_source: amplitude.source,
            width_px: trial.target_width_px,
            effective_width_px: effective_width,
            mt_s: trial.movement_time_s,
            t,
            ids: id_quadruple(amplitude.px, trial.target_width_px, effective_width, t)?,
        });
    }
    let mut warnings = Vec::new();
    if approximated > 0 {
        warnings.push(format!(
            "{approximated} trials use the straight start-to-end distance as amplitude"
        ));
    }
    if fallback_groups > 0 {
        warnings.push(format!(
            "{fallback_groups} of {groups} endpoint groups lacked usable endpoints and used the discrete-error width"
        ));
    }
    if tiny_we > 0 {
        warnings.push(format!(
            "{tiny_we} trials have an effective width of at most 1 px; W_e^t reverses direction there"
        ));
    }
    let n = rows.len() as f64;
    let widths = WidthSummary {
        method: config.method,
        grouping: config.grouping,
        error_rate: config.error_rate,
        mean_width_px: compensated_sum(rows.iter().map(|r| r.width_px)) / n,
        mean_effective_width_px: compensated_sum(rows.iter().map(|r| r.effective_width_px)) / n,
        groups,
        fallback_groups,
    };
    Ok(IdTable { rows, widths, warnings })
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Order-independent checksum of a trial multiset.
pub fn trial_checksum(trials: &[Trial]) -> String {
    let mut hashes: Vec<u64> = trials
        .iter()
        .map(|t| fnv1a(serde_json::to_string(t).expect("trial serializes").as_bytes()))
        .collect();
    hashes.sort_unstable();
    let bytes: Vec<u8> = hashes.iter().flat_map(|h| h.to_le_bytes()).collect();
    format!("{:016x}", fnv1a(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulationResult {
    pub formulation: Formulation,
    pub regression: RegressionResult,
    pub throughput: ThroughputResult,
    pub id_mean: f64,
    pub id_variance: f64,
    pub id_skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub a: Formulation,
    pub b: Formulation,
    pub result: PairwiseFResult,
}

/// Correlations between the temporal factor and movement times. `None`
/// when either side has no variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalCorrelations {
    pub t_vs_mt: Option<f64>,
    pub t_vs_predicted_mt_ta: Option<f64>,
    pub t_vs_predicted_mt_tsa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub effective_width: EffectiveWidthConfig,
    pub temporal_factor: TemporalFactorParams,
    pub cleanup: CleanupSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxEntry {
    pub series: String,
    pub stats: BoxStats,
}

/// The full result of [`analyze`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub source_tag: String,
    pub config: AnalysisConfig,
    pub trial_count: usize,
    pub trial_checksum: String,
    pub cleanup: Vec<CleanupRecord>,
    pub effective_width: WidthSummary,
    /// In [`Formulation::ALL`] order.
    pub formulations: Vec<FormulationResult>,
    pub pairwise_f: Vec<PairwiseComparison>,
    pub tukey: TukeyResult,
    pub correlations: TemporalCorrelations,
    pub histograms: Vec<(Formulation, Histogram)>,
    pub boxplots: Vec<BoxEntry>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub ids: IdTable,
}

impl AnalysisReport {
    pub fn formulation(&self, f: Formulation) -> &FormulationResult {
        &self.formulations[f as usize]
    }

    pub fn pairwise(&self, a: Formulation, b: Formulation) -> Option<&PairwiseFResult> {
        self.pairwise_f.iter().find(|p| p.a == a && p.b == b).map(|p| &p.result)
    }

    pub fn predicted_mt(&self, f: Formulation) -> Vec<f64> {
        let fit = &self.formulation(f).regression;
        self.ids.rows.iter().map(|r| fit.predict(r.id(f))).collect()
    }

    /// Fixed-width text table of the regression and throughput results.
    pub fn summary_table(&self) -> String {
        use crate::stats::format_p;
        let mut out = format!(
            "{:<7} {:>9} {:>9} {:>8} {:>9} {:>15} {:>14} {:>12} {:>10}\n",
            "ID", "a", "b", "R2", "SE(b)", "TP (bits/s)", "DOF", "F", "p"
        );
        for r in &self.formulations {
            let g = &r.regression;
            out.push_str(&format!(
                "{:<7} {:>9.4} {:>9.4} {:>8.4} {:>9.4} {:>15} {:>14} {:>12.2} {:>10}\n",
                r.formulation.to_string(),
                g.intercept,
                g.slope,
                g.r_squared,
                g.slope_std_error,
                format!("{:.2}±{:.2}", r.throughput.mean_bits_per_s, r.throughput.ci95_halfwidth),
                format!("({}, {})", g.dof.0, g.dof.1),
                g.f_stat,
                format_p(g.p_value),
            ));
        }
        out
    }
}

fn fit_formulation(f: Formulation, ids: &IdTable, mts: &[f64]) -> Result<FormulationResult> {
    let x = ids.column(f);
    let regression = ols_fit(&x, mts).map_err(|e| e.at_stage("regression"))?;
    let throughput = throughput(&x, mts).map_err(|e| e.at_stage("throughput"))?;
    let n = x.len() as f64;
    let id_mean = compensated_sum(x.iter().copied()) / n;
    let id_variance = compensated_sum(x.iter().map(|v| (v - id_mean).powi(2))) / (n - 1.0);
    Ok(FormulationResult {
        formulation: f,
        regression,
        throughput,
        id_mean,
        id_variance,
        id_skewness: crate::stats::skewness(&x),
    })
}

/// Runs cleanup, computes all four indices, fits `MT = a + b·ID` for each
/// and compares them.
pub fn analyze(
    dataset: &Dataset,
    we_config: &EffectiveWidthConfig,
    t_params: &TemporalFactorParams,
    cleanup: &CleanupSpec,
) -> Result<AnalysisReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    we_config.validate().map_err(|e| e.at_stage("configuration"))?;
    t_params.validate().map_err(|e| e.at_stage("configuration"))?;
    let cleaned = run_cleanup(dataset, cleanup).map_err(|e| e.at_stage("cleanup"))?;
    let ids = compute_ids(&cleaned, we_config, t_params).map_err(|e| e.at_stage("compute_ids"))?;
    let mts = ids.movement_times();

    let formulations = Formulation::ALL
        .par_iter()
        .map(|&f| fit_formulation(f, &ids, &mts))
        .collect::<Result<Vec<_>>>()?;

    let columns: Vec<Vec<f64>> = Formulation::ALL.iter().map(|&f| ids.column(f)).collect();
    let pairwise_f = F_TEST_PAIRS
        .iter()
        .map(|&(a, b)| {
            pairwise_f_test(&columns[a as usize], &columns[b as usize])
                .map(|result| PairwiseComparison { a, b, result })
                .map_err(|e| e.at_stage("pairwise_f"))
        })
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<(String, &[f64])> = Formulation::ALL
        .iter()
        .map(|f| (f.to_string(), columns[*f as usize].as_slice()))
        .collect();
    let tukey = tukey_hsd(&groups).map_err(|e| e.at_stage("tukey"))?;

    let histograms = Formulation::ALL
        .iter()
        .map(|&f| Ok((f, histogram(&columns[f as usize], HISTOGRAM_BINS)?)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage("histogram"))?;

    let mut warnings = ids.warnings.clone();
    let mut report = AnalysisReport {
        source_tag: cleaned.source_tag.to_string(),
        config: AnalysisConfig {
            effective_width: *we_config,
            temporal_factor: *t_params,
            cleanup: cleanup.clone(),
        },
        trial_count: cleaned.len(),
        trial_checksum: trial_checksum(&cleaned.trials),
        cleanup: cleaned.cleanup_history.clone(),
        effective_width: ids.widths.clone(),
        formulations,
        pairwise_f,
        tukey,
        correlations: TemporalCorrelations {
            t_vs_mt: None,
            t_vs_predicted_mt_ta: None,
            t_vs_predicted_mt_tsa: None,
        },
        histograms,
        boxplots: Vec::new(),
        warnings: Vec::new(),
        ids,
    };

    let ts: Vec<f64> = report.ids.rows.iter().map(|r| r.t).collect();
    let pred_ta = report.predicted_mt(Formulation::Ta);
    let pred_tsa = report.predicted_mt(Formulation::Tsa);
    report.correlations = TemporalCorrelations {
        t_vs_mt: pearson_r(&ts, &mts).ok(),
        t_vs_predicted_mt_ta: pearson_r(&ts, &pred_ta).ok(),
        t_vs_predicted_mt_tsa: pearson_r(&ts, &pred_tsa).ok(),
    };
    if report.correlations.t_vs_mt.is_none() {
        warnings.push("temporal factor has no variance; correlations omitted".into());
    }
    let mut boxplots = vec![BoxEntry {
        series: "MT".into(),
        stats: box_stats(&mts)?,
    }];
    for f in Formulation::ALL {
        boxplots.push(BoxEntry {
            series: format!("predicted_MT_{}", f.short()),
            stats: box_stats(&report.predicted_mt(f))?,
        });
    }
    report.boxplots = boxplots;
    report.warnings = warnings;
    Ok(report)
}

/// One value of the SD multiplier in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sd_multiplier: f64,
    pub accepted: usize,
    /// R² in [`Formulation::ALL`] order; `None` when the row is flagged.
    pub r_squared: Option<[f64; 4]>,
    pub flag: Option<String>,
}

/// Inclusive grid `from, from + step, ..., to` (up to rounding).
pub fn sweep_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) {
        return Err(Error::NonFinite("sweep bounds"));
    }
    if !(from > 0.0) {
        return Err(Error::invalid(format!("sweep must start above 0, got {from}")));
    }
    if from > to {
        return Err(Error::invalid(format!("sweep bounds reversed: {from} > {to}")));
    }
    if !(step > 0.0) {
        return Err(Error::invalid(format!("sweep step must be > 0, got {step}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + step * i as f64).collect())
}

/// R² of all four formulations for each SD multiplier on the grid. Rows
/// whose cleanup leaves fewer than 3 trials are flagged rather than failing
/// the sweep.
pub fn sd_sweep(
    dataset: &Dataset,
    we_config: &EffectiveWidthConfig,
    t_params: &TemporalFactorParams,
    stages: &[CleanupStage],
    from: f64,
    to: f64,
    step: f64,
) -> Result<Vec<SweepRow>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    we_config.validate()?;
    t_params.validate()?;
    sweep_grid(from, to, step)?
        .into_par_iter()
        .map(|k| {
            let spec = CleanupSpec {
                sd_multiplier: k,
                stages: stages.to_vec(),
            };
            let flagged = |accepted, msg: String| SweepRow {
                sd_multiplier: k,
                accepted,
                r_squared: None,
                flag: Some(msg),
            };
            let cleaned = match run_cleanup(dataset, &spec) {
                Ok(c) => c,
                Err(e) => return Ok(flagged(0, e.to_string())),
            };
            if cleaned.len() < 3 {
                return Ok(flagged(
                    cleaned.len(),
                    format!("only {} trials survive cleanup", cleaned.len()),
                ));
            }
            let ids = compute_ids(&cleaned, we_config, t_params).map_err(|e| e.at_stage("compute_ids"))?;
            let mts = ids.movement_times();
            let mut r2 = [0.0; 4];
            for f in Formulation::ALL {
                r2[f as usize] = ols_fit(&ids.column(f), &mts)
                    .map_err(|e| e.at_stage("regression"))?
                    .r_squared;
            }
            Ok(SweepRow {
                sd_multiplier: k,
                accepted: cleaned.len(),
                r_squared: Some(r2),
                flag: None,
            })
        })
        .collect()
}
