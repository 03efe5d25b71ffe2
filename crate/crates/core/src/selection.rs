//! Fit ratios, likelihood-based criteria and grid search over
//! `(na, nb, lambda)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Result, TvError};
use crate::model::{simulate, ModelStructure};
use crate::rml::{three_pass_estimate, Estimation, EstimationOptions};
use crate::signal::Signal;

/// Variances below this are clamped before taking logarithms.
pub const VARIANCE_FLOOR: f64 = 1e-300;

/// Default score gap under which the lower AR order is preferred.
pub const PARSIMONY_GAP: f64 = 1e-5;

fn energy_ratio(num: impl Iterator<Item = f64>, y: &[f64]) -> Result<f64> {
    let sss: f64 = y.iter().map(|v| v * v).sum();
    if !(sss > 0.0) {
        return Err(invalid("signal has zero energy; the fit ratio is undefined"));
    }
    Ok(num.map(|v| v * v).sum::<f64>() / sss)
}

fn same_len(a: &Signal, b: &Signal, what: &'static str) -> Result<()> {
    if a.len() != b.len() {
        return Err(TvError::LengthMismatch {
            what,
            expected: b.len(),
            actual: a.len(),
        });
    }
    Ok(())
}

/// `sum e^2 / sum y^2` as a fraction.
pub fn rss_sss(residuals: &Signal, y: &Signal) -> Result<f64> {
    same_len(residuals, y, "residual length")?;
    energy_ratio(residuals.samples().iter().copied(), y.samples())
}

/// `sum (y - y_sim)^2 / sum y^2` as a fraction.
pub fn ess_sss(y_sim: &Signal, y: &Signal) -> Result<f64> {
    same_len(y_sim, y, "simulation length")?;
    energy_ratio(
        y.samples().iter().zip(y_sim.samples()).map(|(a, b)| a - b),
        y.samples(),
    )
}

/// Gaussian log-likelihood with a time-varying variance,
/// `-(N/2) ln 2pi - 1/2 sum (ln s2[t] + e[t]^2 / s2[t])`.
pub fn gaussian_loglik(residuals: &[f64], sigma2e: &[f64]) -> Result<f64> {
    if residuals.len() != sigma2e.len() {
        return Err(TvError::LengthMismatch {
            what: "variance sequence",
            expected: residuals.len(),
            actual: sigma2e.len(),
        });
    }
    if residuals.is_empty() {
        return Err(invalid("log-likelihood of an empty residual sequence"));
    }
    if sigma2e.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("variances must be nonnegative"));
    }
    if sigma2e.iter().all(|v| *v <= VARIANCE_FLOOR) {
        return Err(invalid("every variance is zero; the likelihood is unbounded"));
    }
    let n = residuals.len() as f64;
    let sum: f64 = residuals
        .iter()
        .zip(sigma2e)
        .map(|(e, v)| {
            let v = v.max(VARIANCE_FLOOR);
            v.ln() + e * e / v
        })
        .sum();
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * sum)
}

pub fn aic(loglik: f64, d: usize) -> f64 {
    -2.0 * loglik + 2.0 * d as f64
}

/// `-loglik + (ln N / 2) d`.
pub fn bic(loglik: f64, d: usize, n: usize) -> f64 {
    -loglik + 0.5 * (n as f64).ln() * d as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    RssSss,
    EssSss,
    Bic,
    Aic,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::RssSss => "rss_sss",
            Criterion::EssSss => "ess_sss",
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('/', "_").as_str() {
            "rss_sss" | "rss" => Ok(Criterion::RssSss),
            "ess_sss" | "ess" => Ok(Criterion::EssSss),
            "bic" => Ok(Criterion::Bic),
            "aic" => Ok(Criterion::Aic),
            other => Err(invalid(format!(
                "unknown criterion '{other}' (expected rss_sss, ess_sss, bic or aic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    Ok,
    Diverged,
}

impl CandidateStatus {
    pub fn name(self) -> &'static str {
        match self {
            CandidateStatus::Ok => "ok",
            CandidateStatus::Diverged => "diverged",
        }
    }
}

/// Scores of one structure. Diverged candidates carry NaN scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub structure: ModelStructure,
    pub rss_sss: f64,
    /// Zero-noise simulation error; absent for TAR models or when the
    /// simulation blew up under a different ranking criterion.
    pub ess_sss: Option<f64>,
    pub aic: f64,
    pub bic: f64,
    pub loglik: f64,
    pub status: CandidateStatus,
    /// Gap to the best score of the search (filled by [`grid_search`]).
    pub delta: f64,
}

impl CandidateScore {
    fn diverged(structure: ModelStructure) -> Self {
        CandidateScore {
            structure,
            rss_sss: f64::NAN,
            ess_sss: None,
            aic: f64::NAN,
            bic: f64::NAN,
            loglik: f64::NAN,
            status: CandidateStatus::Diverged,
            delta: f64::NAN,
        }
    }

    pub fn score(&self, c: Criterion) -> f64 {
        match c {
            Criterion::RssSss => self.rss_sss,
            Criterion::EssSss => self.ess_sss.unwrap_or(f64::NAN),
            Criterion::Bic => self.bic,
            Criterion::Aic => self.aic,
        }
    }
}

/// Scores computed from an existing estimate.
///
/// RSS/SSS, the likelihood and the information criteria use the a-priori
/// residuals after the first `structure.transient()` samples. ESS/SSS
/// compares the zero-noise simulation with the whole record.
pub fn score_estimate(
    est: &Estimation,
    y: &Signal,
    x: Option<&Signal>,
) -> Result<CandidateScore> {
    let s = *est.trajectory.structure();
    let n = y.len();
    let skip = s.transient().min(n.saturating_sub(1));
    let e = &est.residuals.samples()[skip..];
    let yw = &y.samples()[skip..];
    let rss = energy_ratio(e.iter().copied(), yw)?;
    let ll = gaussian_loglik(e, &est.trajectory.sigma2e()[skip..])?;
    let d = s.n_params();
    let ess = match x {
        Some(x) if s.has_x() => match simulate(&est.trajectory, x, None) {
            Ok(sim) => Some(ess_sss(&sim, y)?),
            Err(TvError::Diverged { .. }) => None,
            Err(err) => return Err(err),
        },
        _ => None,
    };
    Ok(CandidateScore {
        structure: s,
        rss_sss: rss,
        ess_sss: ess,
        aic: aic(ll, d),
        bic: bic(ll, d, e.len()),
        loglik: ll,
        status: CandidateStatus::Ok,
        delta: f64::NAN,
    })
}

/// Three-pass estimate plus scores for one structure. Numerical blow-ups
/// are reported through the status instead of an error.
pub fn score_candidate(
    y: &Signal,
    x: Option<&Signal>,
    s: &ModelStructure,
    criterion: Criterion,
    opts: &EstimationOptions,
) -> Result<CandidateScore> {
    let est = match three_pass_estimate(y, x, s, opts) {
        Ok(est) => est,
        Err(TvError::NumericalFailure { .. }) => return Ok(CandidateScore::diverged(*s)),
        Err(err) => return Err(err),
    };
    let mut score = score_estimate(&est, y, x)?;
    if !score.score(criterion).is_finite() {
        score.status = CandidateStatus::Diverged;
    }
    Ok(score)
}

/// Orders and forgetting factors to search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub na: Vec<usize>,
    pub nb: Option<Vec<usize>>,
    pub lambdas: Vec<f64>,
}

impl SearchGrid {
    pub fn len(&self) -> usize {
        self.na.len() * self.nb.as_ref().map_or(1, Vec::len) * self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every structure in `na`, `nb`, `lambda` nesting order.
    pub fn structures(&self) -> Result<Vec<ModelStructure>> {
        let nbs: Vec<Option<usize>> = match &self.nb {
            Some(v) => v.iter().map(|b| Some(*b)).collect(),
            None => vec![None],
        };
        let mut out = Vec::with_capacity(self.len());
        for &na in &self.na {
            for &nb in &nbs {
                for &lambda in &self.lambdas {
                    out.push(ModelStructure::new(na, nb, lambda)?);
                }
            }
        }
        Ok(out)
    }
}

/// `start, start + step, ...` up to `stop` inclusive, rounded to 12
/// decimals so that decimal steps come out clean.
pub fn lambda_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(invalid("lambda grid needs start <= stop and a positive step"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn rank(a: &CandidateScore, b: &CandidateScore, c: Criterion) -> Ordering {
    let key = |s: &CandidateScore| (s.status != CandidateStatus::Ok, s.score(c).is_nan());
    key(a)
        .cmp(&key(b))
        .then_with(|| a.score(c).partial_cmp(&b.score(c)).unwrap_or(Ordering::Equal))
        .then(a.structure.na.cmp(&b.structure.na))
        .then(a.structure.nb.cmp(&b.structure.nb))
        .then(b.structure.lambda.total_cmp(&a.structure.lambda))
}

/// Estimates every structure of the grid with the three-pass scheme and
/// ranks them ascending by `criterion`. Diverged candidates come last;
/// ties go to the smaller `na`, then the smaller `nb`, then the larger
/// `lambda`. Candidates run in parallel; the ranking does not depend on
/// completion order.
pub fn grid_search(
    y: &Signal,
    x: Option<&Signal>,
    grid: &SearchGrid,
    criterion: Criterion,
    opts: &EstimationOptions,
) -> Result<Vec<CandidateScore>> {
    if grid.is_empty() {
        return Err(invalid("search grid is empty"));
    }
    if grid.nb.is_some() != x.is_some() {
        return Err(invalid(
            "an nb range and an excitation signal must be given together",
        ));
    }
    if criterion == Criterion::EssSss && x.is_none() {
        return Err(invalid("the ess_sss criterion needs an excitation signal"));
    }
    if y.energy() == 0.0 {
        return Err(invalid("signal has zero energy"));
    }
    let structures = grid.structures()?;
    let mut scores = structures
        .par_iter()
        .map(|s| score_candidate(y, x, s, criterion, opts))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| rank(a, b, criterion));
    let best = scores[0].score(criterion);
    for s in &mut scores {
        if s.status == CandidateStatus::Ok {
            s.delta = s.score(criterion) - best;
        }
    }
    Ok(scores)
}

/// Index into a ranked list of the candidate with the smallest `na` whose
/// score is within `gap` of the best one.
pub fn select_parsimonious(ranked: &[CandidateScore], criterion: Criterion, gap: f64) -> Option<usize> {
    let best = ranked.first()?;
    if best.status != CandidateStatus::Ok {
        return Some(0);
    }
    let target = best.score(criterion);
    ranked
        .iter()
        .enumerate()
        .filter(|(_, s)| s.status == CandidateStatus::Ok && s.score(criterion) - target < gap)
        .min_by(|a, b| {
            a.1.structure
                .na
                .cmp(&b.1.structure.na)
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _)| i)
}
