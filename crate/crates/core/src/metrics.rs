//! Raw TLX workload scoring and experiment summaries.
//!
//! Ratings use the 0-20 scale with higher meaning more demand; performance
//! follows the same orientation (higher = worse). Only the unweighted (raw)
//! score is computed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RATING_MAX: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("participant {participant}: {subscale} rating {value} outside [0, 20]")]
    RatingRange { participant: String, subscale: &'static str, value: f64 },
    #[error("sample standard deviation needs at least 2 values, got {0}")]
    TooFewSamples(usize),
    #[error("participant {participant}: no finished {modality} run")]
    IncompleteData { participant: String, modality: Modality },
    #[error("participant {participant}: more than one finished {modality} run")]
    DuplicateRun { participant: String, modality: Modality },
    #[error("no TLX records for modality {0}")]
    NoRecords(Modality),
    #[error("participant {0}: age must be positive")]
    BadAge(String),
    #[error("unrecognized value `{0}`")]
    Unrecognized(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Pose,
    Joystick,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Pose => "pose",
            Modality::Joystick => "joystick",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, MetricsError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pose" | "hpe" => Ok(Modality::Pose),
            "joystick" | "rc" => Ok(Modality::Joystick),
            other => Err(MetricsError::Unrecognized(other.into())),
        }
    }
}

pub const SUBSCALES: [&str; 6] = ["mental", "physical", "temporal", "performance", "effort", "frustration"];

/// One filled-in questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxRecord {
    pub participant_id: String,
    pub modality: Modality,
    pub mental: f64,
    pub physical: f64,
    pub temporal: f64,
    pub performance: f64,
    pub effort: f64,
    pub frustration: f64,
}

impl TlxRecord {
    pub fn ratings(&self) -> [f64; 6] {
        [self.mental, self.physical, self.temporal, self.performance, self.effort, self.frustration]
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        for (name, v) in SUBSCALES.iter().zip(self.ratings()) {
            if !(0.0..=RATING_MAX).contains(&v) {
                return Err(MetricsError::RatingRange {
                    participant: self.participant_id.clone(),
                    subscale: name,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Raw TLX: unweighted mean of the six subscales.
pub fn rtlx(record: &TlxRecord) -> Result<f64, MetricsError> {
    record.validate()?;
    Ok(record.ratings().iter().sum::<f64>() / 6.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UavExperience {
    Never,
    OneToThree,
    ThreeToFive,
    FiveOrMore,
}

impl UavExperience {
    pub fn as_str(self) -> &'static str {
        match self {
            UavExperience::Never => "never",
            UavExperience::OneToThree => "1-3",
            UavExperience::ThreeToFive => "3-5",
            UavExperience::FiveOrMore => "5+",
        }
    }
}

impl FromStr for UavExperience {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, MetricsError> {
        let norm = s.trim().to_ascii_lowercase();
        match norm.as_str() {
            "never" | "0" => Ok(UavExperience::Never),
            "1-3" | "1-3 times" => Ok(UavExperience::OneToThree),
            "3-5" | "3-5 times" => Ok(UavExperience::ThreeToFive),
            "5+" | "5 and more" => Ok(UavExperience::FiveOrMore),
            _ => Err(MetricsError::Unrecognized(norm)),
        }
    }
}

/// Background questionnaire row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub id: String,
    pub age: u32,
    pub gender: String,
    pub uav_experience: UavExperience,
    pub athlete: bool,
    pub pc_games: bool,
    pub console: bool,
    pub vr_ar: bool,
}

/// Outcome of one maze traversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub participant_id: String,
    pub modality: Modality,
    /// Seconds; `None` if the finish gate was never reached.
    pub traversal_time: Option<f64>,
    pub collision_count: usize,
}

/// Mean and Bessel-corrected standard deviation (single-pass Welford).
pub fn mean_and_sample_std(values: &[f64]) -> Result<(f64, f64), MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewSamples(values.len()));
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    Ok((mean, libm::sqrt(m2 / (values.len() - 1) as f64)))
}

/// Age mean and sample standard deviation of the participant pool.
pub fn summarize_ages(participants: &[ParticipantRecord]) -> Result<(f64, f64), MetricsError> {
    if let Some(p) = participants.iter().find(|p| p.age == 0) {
        return Err(MetricsError::BadAge(p.id.clone()));
    }
    let ages: Vec<f64> = participants.iter().map(|p| p.age as f64).collect();
    mean_and_sample_std(&ages)
}

/// Per participant `t_joystick - t_pose` over finished runs.
pub fn time_differences(runs: &[RunSummary]) -> Result<BTreeMap<String, f64>, MetricsError> {
    let mut times: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
    for run in runs {
        let slot = &mut times.entry(run.participant_id.as_str()).or_default()[run.modality as usize];
        if let Some(t) = run.traversal_time {
            if slot.is_some() {
                return Err(MetricsError::DuplicateRun {
                    participant: run.participant_id.clone(),
                    modality: run.modality,
                });
            }
            *slot = Some(t);
        }
    }
    let mut out = BTreeMap::new();
    for (id, [pose, joy]) in times {
        let missing = |modality| MetricsError::IncompleteData { participant: id.into(), modality };
        let pose = pose.ok_or_else(|| missing(Modality::Pose))?;
        let joy = joy.ok_or_else(|| missing(Modality::Joystick))?;
        out.insert(id.into(), joy - pose);
    }
    Ok(out)
}

/// Mean of each subscale over all records of one modality.
pub fn subscale_means(records: &[TlxRecord], modality: Modality) -> Result<[f64; 6], MetricsError> {
    let mut sums = [0.0; 6];
    let mut n = 0usize;
    for r in records.iter().filter(|r| r.modality == modality) {
        r.validate()?;
        for (s, v) in sums.iter_mut().zip(r.ratings()) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::NoRecords(modality));
    }
    Ok(sums.map(|s| s / n as f64))
}
