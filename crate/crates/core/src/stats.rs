//! Statistical kernel: regression, variance comparisons, post-hoc tests and
//! descriptive summaries.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{f_sf, student_t_quantile, studentized_range_cdf};

/// Smallest adjusted p-value shown by reports; the studentized-range
/// integration is accurate to about 1e-4 in absolute terms.
pub const TUKEY_P_FLOOR: f64 = 1e-4;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Formats a p-value for text output.
pub fn format_p(p: f64) -> String {
    if p < 1e-12 {
        "<1e-12".to_string()
    } else if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

/// Simple linear regression of y on x with its regression ANOVA.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
    pub n: usize,
    pub f_stat: f64,
    pub dof: (usize, usize),
    pub p_value: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Regression F statistic implied by R² with `n` observations.
pub fn f_from_r_squared(r_squared: f64, n: usize) -> f64 {
    if r_squared >= 1.0 {
        return f64::INFINITY;
    }
    r_squared / (1.0 - r_squared) * (n as f64 - 2.0)
}

/// Ordinary least squares fit `y = intercept + slope * x`.
///
/// R² is defined as 0 when y is constant. The slope standard error is
/// `sqrt(SS_res / (n - 2)) / sqrt(SS_xx)`.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} x vs {} y",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!("regression needs at least 3 points, got {n}")));
    }
    check_finite(x, "regressor")?;
    check_finite(y, "response")?;
    let mx = mean(x);
    let my = mean(y);
    let sxx = compensated_sum(x.iter().map(|v| (v - mx) * (v - mx)));
    if !(sxx > 0.0) {
        return Err(Error::degenerate("regressor has zero variance"));
    }
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let syy = compensated_sum(y.iter().map(|v| (v - my) * (v - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let ss_res = compensated_sum(residuals.iter().map(|r| r * r));
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let resid_dof = (n - 2) as f64;
    let slope_std_error = (ss_res / resid_dof).sqrt() / sxx.sqrt();
    let f_stat = f_from_r_squared(r_squared, n);
    let p_value = if syy > 0.0 { f_sf(f_stat, 1.0, resid_dof)? } else { 1.0 };
    Ok(RegressionResult {
        intercept,
        slope,
        r_squared,
        slope_std_error,
        n,
        f_stat,
        dof: (1, n - 2),
        p_value,
        residuals,
    })
}

/// Which of the two samples supplied the larger variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Numerator {
    First,
    Second,
}

/// Two-sample variance-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairwiseFResult {
    /// Larger sample variance over the smaller.
    pub f_stat: f64,
    pub dof: (usize, usize),
    /// One-sided upper-tail probability.
    pub p_value: f64,
    pub numerator: Numerator,
}

/// Variance-ratio F test with the larger variance in the numerator.
pub fn pairwise_f_test(sample_a: &[f64], sample_b: &[f64]) -> Result<PairwiseFResult> {
    for s in [sample_a, sample_b] {
        if s.len() < 2 {
            return Err(Error::invalid(format!(
                "F test needs n >= 2 per sample, got {}",
                s.len()
            )));
        }
        check_finite(s, "F-test sample")?;
    }
    let va = sample_variance(sample_a);
    let vb = sample_variance(sample_b);
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::degenerate("F test sample has zero variance"));
    }
    let (na, nb) = (sample_a.len() - 1, sample_b.len() - 1);
    // ties put the smaller dof on top so the result is orientation-free
    let first_on_top = va > vb || (va == vb && na <= nb);
    let (f_stat, dof, numerator) = if first_on_top {
        (va / vb, (na, nb), Numerator::First)
    } else {
        (vb / va, (nb, na), Numerator::Second)
    };
    let p_value = f_sf(f_stat, dof.0 as f64, dof.1 as f64)?;
    Ok(PairwiseFResult {
        f_stat,
        dof,
        p_value,
        numerator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyPair {
    pub group_a: String,
    pub group_b: String,
    /// mean(a) - mean(b)
    pub mean_diff: f64,
    pub q_stat: f64,
    pub adjusted_p: f64,
}

impl TukeyPair {
    pub fn reported_p(&self) -> f64 {
        self.adjusted_p.max(TUKEY_P_FLOOR)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyResult {
    pub pairs: Vec<TukeyPair>,
    pub groups: usize,
    pub ms_within: f64,
    pub dof_within: usize,
}

impl TukeyResult {
    pub fn pair(&self, a: &str, b: &str) -> Option<&TukeyPair> {
        self.pairs
            .iter()
            .find(|p| (p.group_a == a && p.group_b == b) || (p.group_a == b && p.group_b == a))
    }
}

/// Tukey's honestly significant difference test (Tukey–Kramer form for
/// unequal group sizes) over all group pairs.
pub fn tukey_hsd<S: AsRef<[f64]> + Sync>(groups: &[(String, S)]) -> Result<TukeyResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid(format!("Tukey HSD needs at least 2 groups, got {k}")));
    }
    let mut means = Vec::with_capacity(k);
    let mut ss_within = 0.0;
    let mut total = 0;
    for (label, sample) in groups {
        let s = sample.as_ref();
        if s.len() < 2 {
            return Err(Error::degenerate(format!("group {label} has fewer than 2 values")));
        }
        check_finite(s, "Tukey group")?;
        let m = mean(s);
        ss_within += compensated_sum(s.iter().map(|v| (v - m) * (v - m)));
        means.push(m);
        total += s.len();
    }
    let dof_within = total - k;
    let ms_within = ss_within / dof_within as f64;
    if !(ms_within > 0.0) {
        return Err(Error::degenerate("all groups have zero within-group variance"));
    }
    let index_pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    let pairs = index_pairs
        .into_par_iter()
        .map(|(i, j)| {
            let (na, nb) = (groups[i].1.as_ref().len() as f64, groups[j].1.as_ref().len() as f64);
            let mean_diff = means[i] - means[j];
            let se = (ms_within / 2.0 * (1.0 / na + 1.0 / nb)).sqrt();
            let q_stat = mean_diff.abs() / se;
            let adjusted_p = (1.0 - studentized_range_cdf(q_stat, k, dof_within as f64)?).clamp(0.0, 1.0);
            Ok(TukeyPair {
                group_a: groups[i].0.clone(),
                group_b: groups[j].0.clone(),
                mean_diff,
                q_stat,
                adjusted_p,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TukeyResult {
        pairs,
        groups: k,
        ms_within,
        dof_within,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least 2 pairs"));
    }
    check_finite(x, "correlation input")?;
    check_finite(y, "correlation input")?;
    let (mx, my) = (mean(x), mean(y));
    let sxx = compensated_sum(x.iter().map(|v| (v - mx) * (v - mx)));
    let syy = compensated_sum(y.iter().map(|v| (v - my) * (v - my)));
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::degenerate("correlation input has zero variance"));
    }
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Mean of per-trial `ID / MT` with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputResult {
    pub mean_bits_per_s: f64,
    pub ci95_halfwidth: f64,
    pub n: usize,
}

pub fn throughput(ids: &[f64], mts: &[f64]) -> Result<ThroughputResult> {
    if ids.len() != mts.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} IDs vs {} MTs",
            ids.len(),
            mts.len()
        )));
    }
    if ids.is_empty() {
        return Err(Error::invalid("throughput needs at least one trial"));
    }
    check_finite(ids, "difficulty")?;
    if mts.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::invalid("movement times must be positive"));
    }
    let rates: Vec<f64> = ids.iter().zip(mts).map(|(id, mt)| id / mt).collect();
    let n = rates.len();
    let mean_bits_per_s = mean(&rates);
    let ci95_halfwidth = if n < 2 {
        0.0
    } else {
        1.96 * sample_variance(&rates).sqrt() / (n as f64).sqrt()
    };
    Ok(ThroughputResult {
        mean_bits_per_s,
        ci95_halfwidth,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95_halfwidth: f64,
}

/// Arithmetic mean with a Student-t 95% half-width.
pub fn mean_ci(values: &[f64]) -> Result<MeanCi> {
    if values.is_empty() {
        return Err(Error::invalid("mean of an empty list"));
    }
    check_finite(values, "mean input")?;
    let m = mean(values);
    let n = values.len();
    if n < 2 {
        return Ok(MeanCi {
            mean: m,
            ci95_halfwidth: 0.0,
        });
    }
    let sd = sample_variance(values).sqrt();
    let t = student_t_quantile(0.975, (n - 1) as f64)?;
    Ok(MeanCi {
        mean: m,
        ci95_halfwidth: t * sd / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub skewness: f64,
}

/// Fisher–Pearson skewness `m3 / m2^1.5`; 0 for constant data.
pub fn skewness(values: &[f64]) -> f64 {
    let m = mean(values);
    let m2 = compensated_sum(values.iter().map(|v| (v - m).powi(2))) / values.len() as f64;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = compensated_sum(values.iter().map(|v| (v - m).powi(3))) / values.len() as f64;
    m3 / m2.powf(1.5)
}

/// Equal-width histogram over `[min, max]`. Constant data get one unit-wide
/// bin centred on the value.
pub fn histogram(values: &[f64], bin_count: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::invalid("histogram of an empty list"));
    }
    if bin_count == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    check_finite(values, "histogram input")?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let skewness = skewness(values);
    if lo == hi {
        return Ok(Histogram {
            edges: vec![lo - 0.5, lo + 0.5],
            counts: vec![values.len()],
            skewness,
        });
    }
    let width = (hi - lo) / bin_count as f64;
    let edges: Vec<f64> = (0..=bin_count)
        .map(|i| if i == bin_count { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; bin_count];
    for v in values {
        let idx = (((v - lo) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        skewness,
    })
}

/// Five-number summary with Tukey whiskers at 1.5 IQR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers_low: usize,
    pub outliers_high: usize,
}

/// Quantile by linear interpolation between order statistics of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::invalid("box summary of an empty list"));
    }
    check_finite(values, "box summary input")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v >= fence_lo && *v <= fence_hi)
        .collect();
    Ok(BoxStats {
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        lower_whisker: inside.first().copied().unwrap_or(q1),
        upper_whisker: inside.last().copied().unwrap_or(q3),
        outliers_low: sorted.iter().filter(|v| **v < fence_lo).count(),
        outliers_high: sorted.iter().filter(|v| **v > fence_hi).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Normal-equation OLS written out independently of `ols_fit`.
    fn brute_ols(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            sx += a;
            sy += b;
            sxx += a * a;
            sxy += a * b;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        ((sy - slope * sx) / n, slope)
    }

    #[test]
    fn ols_perfect_line() {
        let x = [1.0, 2.0, 3.5, 4.0, 6.0];
        let y: Vec<f64> = x.iter().map(|v| 0.3 + 0.1 * v).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.intercept - 0.3).abs() < 1e-12);
        assert!((fit.slope - 0.1).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.dof, (1, 3));
    }

    #[test]
    fn ols_constant_response() {
        let fit = ols_fit(&[1.0, 2.0, 3.0, 4.0], &[2.0; 4]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);
        assert_eq!(fit.f_stat, 0.0);
        assert_eq!(fit.p_value, 1.0);
    }

    #[test]
    fn ols_errors() {
        assert!(matches!(
            ols_fit(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(ols_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(ols_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn f_identity_spot_value() {
        let f = f_from_r_squared(0.3435, 2707);
        assert!((1413.0..=1417.0).contains(&f), "F = {f}");
    }

    #[test]
    fn ols_anova_identity_and_se() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 1.0 + 2.0 * v + ((i * 7919 % 13) as f64 - 6.0) * 0.05)
            .collect();
        let fit = ols_fit(&x, &y).unwrap();
        let (a, b) = brute_ols(&x, &y);
        assert!((fit.intercept - a).abs() < 1e-9 && (fit.slope - b).abs() < 1e-9);
        let expected_f = fit.r_squared / (1.0 - fit.r_squared) * 48.0;
        assert!(((fit.f_stat - expected_f) / expected_f).abs() < 1e-6);
        // t^2 = F for a single regressor
        let t = fit.slope / fit.slope_std_error;
        assert!(((t * t - fit.f_stat) / fit.f_stat).abs() < 1e-8);
    }

    #[test]
    fn pairwise_f_examples() {
        // variances 4 and 2
        let a = [-2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let b = [
            -2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        let r = pairwise_f_test(&a, &b).unwrap();
        assert!((r.f_stat - 2.0).abs() < 1e-12);
        assert_eq!(r.numerator, Numerator::First);
        assert_eq!(r.dof, (8, 16));
        let same = [1.0, 2.0, 4.0, 8.0];
        let r = pairwise_f_test(&same, &same).unwrap();
        assert_eq!(r.f_stat, 1.0);
        assert!((r.p_value - 0.5).abs() < 1e-12);
        assert!(pairwise_f_test(&[1.0, 1.0], &same).is_err());
    }

    #[test]
    fn tukey_identical_and_separated() {
        let g = vec![1.0, 2.0, 3.0, 4.0];
        let r = tukey_hsd(&[("a".to_string(), g.clone()), ("b".to_string(), g)]).unwrap();
        assert_eq!(r.pairs[0].mean_diff, 0.0);
        assert!((r.pairs[0].adjusted_p - 1.0).abs() < 1e-9);
        let lo = vec![0.0, 0.0, 0.001, 0.0, 0.001];
        let hi = vec![100.0, 100.0, 100.001, 100.0, 100.001];
        let r = tukey_hsd(&[("lo".to_string(), lo), ("hi".to_string(), hi)]).unwrap();
        assert!(r.pairs[0].reported_p() <= TUKEY_P_FLOOR);
        assert!(r.pairs[0].mean_diff < 0.0);
        assert!(tukey_hsd(&[("x".to_string(), vec![1.0])]).is_err());
    }

    #[test]
    fn tukey_two_groups_matches_t_test() {
        // with two groups, q = sqrt(2)|t| and Tukey p equals the pooled t-test p
        let a = [1.1, 2.3, 1.9, 2.8, 2.2, 1.7];
        let b = [2.9, 3.1, 2.2, 3.8, 3.3, 2.6, 3.0];
        let r = tukey_hsd(&[("a".to_string(), a.to_vec()), ("b".to_string(), b.to_vec())]).unwrap();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (ma, mb) = (mean(&a), mean(&b));
        let sp2 = ((na - 1.0) * sample_variance(&a) + (nb - 1.0) * sample_variance(&b)) / (na + nb - 2.0);
        let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        let p_t = 2.0 * (1.0 - crate::special::student_t_cdf(t.abs(), na + nb - 2.0).unwrap());
        assert!((r.pairs[0].q_stat - 2f64.sqrt() * t.abs()).abs() < 1e-12);
        assert!(
            (r.pairs[0].adjusted_p - p_t).abs() < 1e-6,
            "{} vs {p_t}",
            r.pairs[0].adjusted_p
        );
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 5.0, 8.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson_r(&x, &lin).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson_r(&x, &[1.0; 5]).is_err());
    }

    #[test]
    fn throughput_examples() {
        let r = throughput(&[4.0], &[1.0]).unwrap();
        assert_eq!((r.mean_bits_per_s, r.ci95_halfwidth), (4.0, 0.0));
        assert_eq!(throughput(&[2.0, 3.0], &[0.5, 1.0]).unwrap().mean_bits_per_s, 3.5);
        assert!(throughput(&[2.0], &[0.0]).is_err());
        assert!(throughput(&[2.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn throughput_compensated_vs_naive() {
        let n = 100_000;
        let ids: Vec<f64> = (0..n).map(|i| 1.0 + (i % 97) as f64 * 0.071).collect();
        let mts: Vec<f64> = (0..n).map(|i| 0.2 + (i % 89) as f64 * 0.013).collect();
        let r = throughput(&ids, &mts).unwrap();
        let mut naive = 0.0;
        for (id, mt) in ids.iter().zip(&mts) {
            naive += id / mt;
        }
        naive /= n as f64;
        assert!(((r.mean_bits_per_s - naive) / naive).abs() <= 1e-12);
    }

    #[test]
    fn mean_ci_examples() {
        let m = mean_ci(&[0.9043, 0.9201, 0.9059]).unwrap();
        assert!((m.mean - 0.9101).abs() < 1e-4);
        assert_eq!(
            mean_ci(&[5.0]).unwrap(),
            MeanCi {
                mean: 5.0,
                ci95_halfwidth: 0.0
            }
        );
        assert_eq!(
            mean_ci(&[1.0, 1.0, 1.0]).unwrap(),
            MeanCi {
                mean: 1.0,
                ci95_halfwidth: 0.0
            }
        );
        assert!(mean_ci(&[]).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(h.edges, vec![0.0, 1.5, 3.0]);
        assert_eq!(h.counts, vec![2, 2]);
        let c = histogram(&[4.0; 6], 10).unwrap();
        assert_eq!(c.counts, vec![6]);
        assert_eq!(c.edges, vec![3.5, 4.5]);
        let sym = histogram(&[-3.0, -1.0, -0.5, 0.5, 1.0, 3.0], 4).unwrap();
        assert!(sym.skewness.abs() < 1e-9);
        assert!(histogram(&[], 3).is_err());
    }

    #[test]
    fn box_stats_ordering_and_outliers() {
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        v.push(100.0);
        let b = box_stats(&v).unwrap();
        assert_eq!(b.median, 11.0);
        assert_eq!(b.outliers_high, 1);
        assert_eq!(b.upper_whisker, 20.0);
        assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
    }

    proptest! {
        #[test]
        fn pairwise_f_symmetric(a in prop::collection::vec(-50.0..50.0f64, 3..30), b in prop::collection::vec(-50.0..50.0f64, 3..30)) {
            let (Ok(ab), Ok(ba)) = (pairwise_f_test(&a, &b), pairwise_f_test(&b, &a)) else { return Ok(()); };
            prop_assert_eq!(ab.f_stat, ba.f_stat);
            prop_assert_eq!(ab.dof, ba.dof);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!(ab.f_stat >= 1.0);
        }

        #[test]
        fn f_identity_holds(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..60)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(fit) = ols_fit(&x, &y) {
                prop_assert!((0.0..=1.0).contains(&fit.r_squared));
                if fit.r_squared < 1.0 && fit.r_squared > 0.0 {
                    let want = fit.r_squared / (1.0 - fit.r_squared) * (fit.n as f64 - 2.0);
                    prop_assert!(((fit.f_stat - want) / want).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn f_cdf_monotone(d1 in 1.0..50.0f64, d2 in 1.0..200.0f64, x in 0.0..20.0f64, dx in 0.0..5.0f64) {
            let lo = crate::special::f_cdf(x, d1, d2).unwrap();
            let hi = crate::special::f_cdf(x + dx, d1, d2).unwrap();
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            prop_assert!(hi + 1e-12 >= lo);
        }

        #[test]
        fn box_stats_ordered(v in prop::collection::vec(-1e3..1e3f64, 1..80)) {
            let b = box_stats(&v).unwrap();
            prop_assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
            prop_assert!(b.lower_whisker <= b.upper_whisker || v.len() == 1);
        }
    }
}
