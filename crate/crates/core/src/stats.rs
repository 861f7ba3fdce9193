//! Agreement, significance, and survey statistics.
//!
//! Covers the measurement side of the study: inter-annotator reliability
//! (Krippendorff's alpha, nominal level, two raters, binary codes), paired
//! two-tailed t-tests over matched score columns, and preference tallies
//! from judgment surveys.
//!
//! File formats accepted by the parsers here:
//!
//! * agreement: one unit per line, two whitespace-separated binary codes
//!   (`1 0` means rater A said 1, rater B said 0); `#` comments allowed.
//! * paired scores: one pair of floats per line, again whitespace-separated.
//! * survey responses: one JSON record per line with fields `respondent`,
//!   `item`, `question`, and `choice` (`human`, `model`, or
//!   `no_difference`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no rating pairs supplied")]
    EmptyAgreement,
    #[error("all ratings are identical; expected disagreement is zero and alpha is undefined")]
    DegenerateAgreement,
    #[error("score columns differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} paired samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("differences have zero variance; the t statistic is undefined")]
    ZeroVariance,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Complete two-rater binary ratings, one pair per coded unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementTable {
    pairs: Vec<(Label, Label)>,
}

impl AgreementTable {
    pub fn new(pairs: Vec<(Label, Label)>) -> Result<AgreementTable, StatsError> {
        if pairs.is_empty() {
            return Err(StatsError::EmptyAgreement);
        }
        Ok(AgreementTable { pairs })
    }

    /// Parses `a b` binary code lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<AgreementTable, StatsError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (a, b) = match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(StatsError::Malformed {
                        line: line_no,
                        message: "expected two binary codes".into(),
                    })
                }
            };
            let code = |s: &str| -> Result<Label, StatsError> {
                s.parse::<u8>()
                    .ok()
                    .and_then(|v| Label::try_from(v).ok())
                    .ok_or_else(|| StatsError::Malformed {
                        line: line_no,
                        message: format!("bad code `{s}`, expected 0 or 1"),
                    })
            };
            pairs.push((code(a)?, code(b)?));
        }
        AgreementTable::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Label, Label)] {
        &self.pairs
    }

    /// Krippendorff's alpha for nominal binary data with two raters and no
    /// missing ratings. Built from the coincidence matrix: each unit
    /// contributes both ordered pairs of its two ratings. Errors when every
    /// rating in the table is identical, since expected disagreement is
    /// then zero.
    pub fn krippendorff_alpha(&self) -> Result<f64, StatsError> {
        let mut coincidence = [[0.0f64; 2]; 2];
        for (a, b) in &self.pairs {
            let (i, j) = (a.bit() as usize, b.bit() as usize);
            coincidence[i][j] += 1.0;
            coincidence[j][i] += 1.0;
        }
        let n_zero: f64 = coincidence[0][0] + coincidence[0][1];
        let n_one: f64 = coincidence[1][0] + coincidence[1][1];
        let n = n_zero + n_one;
        let observed = (coincidence[0][1] + coincidence[1][0]) / n;
        let expected = 2.0 * n_zero * n_one / (n * (n - 1.0));
        if expected == 0.0 {
            return Err(StatsError::DegenerateAgreement);
        }
        Ok(1.0 - observed / expected)
    }
}

/// Paired two-tailed t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
    pub mean_difference: f64,
}

/// Tests whether matched scores `a` and `b` differ in mean. The statistic
/// is `mean(d) / (sd(d) / sqrt(n))` over differences `d = a - b` with the
/// sample (n-1) standard deviation; significance is two-tailed under
/// Student's t with `n - 1` degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    let p_two_tailed = 2.0 * (1.0 - t_cdf(t.abs(), df));
    Ok(TTestResult {
        t,
        df,
        p_two_tailed,
        mean_difference: mean,
    })
}

/// Parses paired score lines (`a b` floats, `#` comments).
pub fn parse_paired_scores(text: &str) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(StatsError::Malformed {
                    line: line_no,
                    message: "expected two scores".into(),
                })
            }
        };
        let score = |s: &str| -> Result<f64, StatsError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| StatsError::Malformed {
                    line: line_no,
                    message: format!("bad score `{s}`"),
                })
        };
        left.push(score(a)?);
        right.push(score(b)?);
    }
    Ok((left, right))
}

/// Student's t cumulative distribution via the regularized incomplete beta
/// function. `df` must be at least 1.
pub fn t_cdf(t: f64, df: usize) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    if t == 0.0 {
        return 0.5;
    }
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * reg_inc_beta(v / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction
/// (modified Lentz), accurate to ~1e-14 for moderate arguments.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    // The continued fraction converges fastest below the mean; use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the far side.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 coefficients).
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// One forced-choice answer in a blinded judgment survey.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyChoice {
    Human,
    Model,
    NoDifference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub respondent: String,
    pub item: String,
    pub question: String,
    pub choice: SurveyChoice,
}

/// Per-question counts of each forced-choice answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChoiceTally {
    pub human: usize,
    pub model: usize,
    pub no_difference: usize,
}

impl ChoiceTally {
    pub fn total(&self) -> usize {
        self.human + self.model + self.no_difference
    }

    /// Fractions of each answer; an empty tally reports zeros.
    pub fn shares(&self) -> (f64, f64, f64) {
        let total = self.total();
        if total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let n = total as f64;
        (
            self.human as f64 / n,
            self.model as f64 / n,
            self.no_difference as f64 / n,
        )
    }
}

/// Parses one survey record per line (JSON).
pub fn parse_survey_records(text: &str) -> Result<Vec<SurveyRecord>, StatsError> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record: SurveyRecord =
            serde_json::from_str(raw).map_err(|e| StatsError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Groups answers by question, preserving nothing but counts.
pub fn tally_choices<'a, I>(records: I) -> BTreeMap<String, ChoiceTally>
where
    I: IntoIterator<Item = &'a SurveyRecord>,
{
    let mut tallies: BTreeMap<String, ChoiceTally> = BTreeMap::new();
    for record in records {
        let tally = tallies.entry(record.question.clone()).or_default();
        match record.choice {
            SurveyChoice::Human => tally.human += 1,
            SurveyChoice::Model => tally.model += 1,
            SurveyChoice::NoDifference => tally.no_difference += 1,
        }
    }
    tallies
}
