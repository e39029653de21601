//! Seeded generator of trials that follow the classical model
//! `MT = a + b·log2(A/W + 1)` exactly, up to optional noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::difficulty::id_na;
use crate::error::{Error, Result};
use crate::trial::{Dataset, LevelType, Point2, SourceTag, Trial};

/// Generated movement times never fall below this value.
pub const MIN_MOVEMENT_TIME_S: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_trials: usize,
    pub intercept_s: f64,
    pub slope_s_per_bit: f64,
    pub width_set: Vec<f64>,
    /// Inclusive `[lo, hi]` range of amplitudes in pixels.
    pub amplitude_range: (f64, f64),
    pub mt_noise_sd: f64,
    pub endpoint_scatter_sd: f64,
    pub seed: u64,
    pub participants: usize,
    pub sessions_per_participant: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_trials: 1000,
            intercept_s: 0.3,
            slope_s_per_bit: 0.1,
            width_set: vec![32.0, 64.0, 96.0, 128.0],
            amplitude_range: (64.0, 1024.0),
            mt_noise_sd: 0.05,
            endpoint_scatter_sd: 8.0,
            seed: 42,
            participants: 1,
            sessions_per_participant: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials must be at least 1"));
        }
        if self.participants == 0 || self.sessions_per_participant == 0 {
            return Err(Error::invalid("participants and sessions must be at least 1"));
        }
        let finite = [
            self.intercept_s,
            self.slope_s_per_bit,
            self.amplitude_range.0,
            self.amplitude_range.1,
            self.mt_noise_sd,
            self.endpoint_scatter_sd,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("synthesis parameters"));
        }
        if self.slope_s_per_bit < 0.0 {
            return Err(Error::invalid("slope must be >= 0"));
        }
        if self.mt_noise_sd < 0.0 || self.endpoint_scatter_sd < 0.0 {
            return Err(Error::invalid("noise standard deviations must be >= 0"));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::invalid(format!(
                "amplitude range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
            )));
        }
        if self.width_set.is_empty() || self.width_set.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("width set must be non-empty with positive widths"));
        }
        Ok(())
    }
}

/// Generates `spec.n_trials` trials. Output depends only on `spec`.
///
/// Each trial starts at a random screen point and aims at a target placed
/// `A` pixels away in a random direction; `amplitude_px` records `A`, and the
/// click lands on the start→target axis with Gaussian scatter.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups = spec.participants * spec.sessions_per_participant;
    let (lo, hi) = spec.amplitude_range;
    let mut trials = Vec::with_capacity(spec.n_trials);
    for i in 0..spec.n_trials {
        // the draw order below is part of the output contract
        let amplitude = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let width = spec.width_set[rng.random_range(0..spec.width_set.len())];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let start = Point2::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
        let mt_noise: f64 = rng.sample(StandardNormal);
        let scatter: f64 = rng.sample(StandardNormal);

        let (uy, ux) = angle.sin_cos();
        let center = Point2::new(start.x + amplitude * ux, start.y + amplitude * uy);
        let offset = spec.endpoint_scatter_sd * scatter;
        let end = Point2::new(center.x + offset * ux, center.y + offset * uy);
        let mt = (spec.intercept_s + spec.slope_s_per_bit * id_na(amplitude, width)? + spec.mt_noise_sd * mt_noise)
            .max(MIN_MOVEMENT_TIME_S);

        let group = i * groups / spec.n_trials;
        let participant = group / spec.sessions_per_participant;
        let session = group % spec.sessions_per_participant;
        trials.push(Trial {
            session_id: format!("p{:02}-s{:02}", participant + 1, session + 1),
            participant_id: format!("p{:02}", participant + 1),
            level_type: LevelType::Heterogeneous,
            level_label: format!("1.1.{}", session + 1),
            target_width_px: width,
            start,
            end: Some(end),
            target_center: Some(center),
            movement_time_s: mt,
            miss_clicks: 0,
            trajectory: None,
            amplitude_px: Some(amplitude),
        });
    }
    Ok(Dataset::new(trials, SourceTag::Synthetic))
}
