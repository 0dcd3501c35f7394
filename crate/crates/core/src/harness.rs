//! Experiment orchestration: Haar rotations, remainder scans over a
//! geometric t-grid, dyadic-block exponent fits and persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Error, Result};
use crate::exponents::{hlawka_exponent, randol_exponent, theorem_exponent, to_f64, Omega};
use crate::geometry::{ConvexBody, Rotation};
use crate::lattice::{count_points, remainder_from, volume, RemainderSample};

/// Fewest dyadic blocks accepted by [`fit_exponent`].
pub const MIN_BLOCKS: usize = 4;

/// Column order of the scan CSV.
pub const CSV_HEADER: &str = "rotation,t,count,volume_term,remainder,theta";

/// Stream-split generator: stream `k` of the master seed.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed rotation of `R^d`. The generator is fully determined by
/// `seed`.
pub fn haar_rotation(seed: u64, d: usize) -> Result<Rotation> {
    if d < 2 {
        return domain(format!("rotations need d >= 2, got {d}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_from_rng(&mut rng, d)
}

fn haar_from_rng(rng: &mut ChaCha8Rng, d: usize) -> Result<Rotation> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.swap_columns(0, 1);
    }
    Rotation::from_dmatrix(&q, 1e-10)
}

/// Parameters of one scan-and-fit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Body spec understood by [`ConvexBody::parse`]; `supersphere` alone
    /// takes its type from `omega`.
    pub body: String,
    pub d: usize,
    pub omega: Option<u32>,
    pub seed: u64,
    pub rotations: usize,
    /// Use `θ = I` for the first rotation.
    pub identity: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Regression window: only blocks inside `[fit_t_min, fit_t_max]`.
    pub fit_t_min: f64,
    pub fit_t_max: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            body: "ball".into(),
            d: 2,
            omega: None,
            seed: 0,
            rotations: 1,
            identity: false,
            t_min: 1.0,
            t_max: 1e4,
            points: 64,
            fit_t_min: 16.0,
            fit_t_max: f64::INFINITY,
            out: None,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("bad boolean '{v}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value '{v}' for key '{key}'")))
}

impl ExperimentConfig {
    /// Plain `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "body" => c.body = v.to_string(),
                "d" => c.d = parse_num(k, v)?,
                "omega" => c.omega = Some(parse_num(k, v)?),
                "seed" => c.seed = parse_num(k, v)?,
                "rotations" => c.rotations = parse_num(k, v)?,
                "identity" => c.identity = parse_bool(v)?,
                "t_min" => c.t_min = parse_num(k, v)?,
                "t_max" => c.t_max = parse_num(k, v)?,
                "points" => c.points = parse_num(k, v)?,
                "fit_t_min" => c.fit_t_min = parse_num(k, v)?,
                "fit_t_max" => c.fit_t_max = parse_num(k, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                _ => return Err(Error::Parse(format!("line {}: unknown key '{k}'", lineno + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min >= 1.0) || !(self.t_max > self.t_min) || !self.t_max.is_finite() {
            return domain(format!("need 1 <= t_min < t_max, got [{}, {}]", self.t_min, self.t_max));
        }
        if self.points < 2 {
            return domain("t-grid needs at least 2 points");
        }
        if self.rotations == 0 {
            return domain("rotation count must be positive");
        }
        if self.d < 2 || self.d > 4 {
            return domain(format!("scans support 2 <= d <= 4, got {}", self.d));
        }
        self.body_spec().map(|_| ())
    }

    pub fn body_spec(&self) -> Result<ConvexBody> {
        let spec = match (self.body.trim(), self.omega) {
            ("supersphere", Some(w)) => format!("supersphere:{w}"),
            ("supersphere", None) => return domain("supersphere needs omega"),
            (s, _) => s.to_string(),
        };
        let body = ConvexBody::parse(&spec, Some(self.d))?;
        if body.dim() != self.d {
            return domain(format!("body dimension {} differs from d = {}", body.dim(), self.d));
        }
        Ok(body)
    }

    /// Finite type used for reference exponents.
    pub fn omega_type(&self) -> Option<u32> {
        self.omega.or_else(|| self.body_spec().ok().and_then(|b| b.finite_type()))
    }

    pub fn t_grid(&self) -> Vec<f64> {
        geometric_grid(self.t_min, self.t_max, self.points)
    }

    /// Rotation `k` of the experiment.
    pub fn rotation(&self, k: usize) -> Result<Rotation> {
        if self.identity && k == 0 {
            return Ok(Rotation::identity(self.d));
        }
        haar_from_rng(&mut task_rng(self.seed, k as u64), self.d)
    }
}

/// `n` points from `a` to `b` in geometric progression, endpoints exact.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / (n - 1) as f64;
    (0..n)
        .map(|k| match k {
            0 => a,
            k if k == n - 1 => b,
            k => a * (r * k as f64).exp(),
        })
        .collect()
}

/// One row of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub rotation: usize,
    pub sample: RemainderSample,
}

/// Counts every `(rotation, t)` pair. Rows come back sorted by rotation then
/// grid index, whatever the thread schedule.
pub fn remainder_scan(config: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    config.validate()?;
    let body = config.body_spec()?;
    let vol = volume(&body)?.value;
    let grid = config.t_grid();
    let rots: Vec<Rotation> = (0..config.rotations).map(|k| config.rotation(k)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..rots.len()).flat_map(|r| (0..grid.len()).map(move |i| (r, i))).collect();
    let mut rows: Vec<(usize, usize, RemainderSample)> = tasks
        .par_iter()
        .map(|&(r, i)| {
            let t = grid[i];
            let count = count_points(&body, &rots[r], t)?;
            Ok((r, i, remainder_from(&rots[r], t, count, vol, config.d)))
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|(r, i, _)| (*r, *i));
    Ok(rows.into_iter().map(|(rotation, _, sample)| ScanRow { rotation, sample }).collect())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[ScanRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for row in rows {
        let r = &row.sample;
        let theta: Vec<String> = r.theta.entries().iter().map(|&x| fmt_f(x)).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.rotation,
            fmt_f(r.t),
            r.count,
            fmt_f(r.volume_term),
            fmt_f(r.remainder),
            theta.join(";")
        );
    }
    s
}

pub fn from_csv(text: &str) -> Result<Vec<ScanRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    let bad = |n: usize, what: &str| Error::Parse(format!("CSV row {n}: bad {what}"));
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(n + 1, "field count"));
        }
        let rotation: usize = f[0].parse().map_err(|_| bad(n + 1, "rotation"))?;
        let t: f64 = f[1].parse().map_err(|_| bad(n + 1, "t"))?;
        let count: u64 = f[2].parse().map_err(|_| bad(n + 1, "count"))?;
        let volume_term: f64 = f[3].parse().map_err(|_| bad(n + 1, "volume_term"))?;
        let remainder: f64 = f[4].parse().map_err(|_| bad(n + 1, "remainder"))?;
        let entries: Vec<f64> =
            f[5].split(';').map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(n + 1, "theta"))?;
        let d = (entries.len() as f64).sqrt().round() as usize;
        if d * d != entries.len() {
            return Err(bad(n + 1, "theta size"));
        }
        let theta = Rotation::from_rows(&entries.chunks(d).map(|c| c.to_vec()).collect::<Vec<_>>(), 1e-9)?;
        out.push(ScanRow { rotation, sample: RemainderSample { theta, t, count, volume_term, remainder } });
    }
    Ok(out)
}

pub fn write_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ScanRow>> {
    from_csv(&fs::read_to_string(path)?)
}

/// `sup |P|` over one dyadic block `[2^j, 2^{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSup {
    pub block: i32,
    pub center: f64,
    pub sup: f64,
    pub samples: usize,
}

/// Reference exponents for comparison with a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponents {
    pub trivial: f64,
    pub hlawka: f64,
    pub theorem: Option<f64>,
    pub randol: Option<f64>,
}

impl ReferenceExponents {
    pub fn new(d: usize, omega: Option<u32>) -> ReferenceExponents {
        let du = d as u32;
        let om = match omega {
            Some(w) => Omega::Finite(w),
            None => Omega::Infinity,
        };
        ReferenceExponents {
            trivial: (d - 1) as f64,
            hlawka: to_f64(&hlawka_exponent(du)),
            theorem: theorem_exponent(du, om).ok().map(|q| to_f64(&q)),
            randol: omega.and_then(|w| randol_exponent(du, w).ok()).map(|q| to_f64(&q)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub fitted_alpha: f64,
    pub confidence_halfwidth: f64,
    pub intercept: f64,
    pub block_sups: Vec<BlockSup>,
    pub reference: ReferenceExponents,
    /// `fitted_alpha <= d - 1 + 0.1`.
    pub within_trivial: bool,
    /// Fitted exponent not above the theorem exponent. Consistency only.
    pub below_theorem: Option<bool>,
}

/// Which blocks enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { t_min: 1.0, t_max: f64::INFINITY }
    }
}

/// Dyadic-block sups of `|P|` for blocks inside the window that the sampled
/// range spans completely.
pub fn block_sups(samples: &[RemainderSample], window: FitWindow) -> Vec<BlockSup> {
    let mut blocks: Vec<BlockSup> = Vec::new();
    let mut sorted: Vec<&RemainderSample> = samples.iter().filter(|s| s.t > 0.0).collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let Some((first, last)) = sorted.first().zip(sorted.last()).map(|(a, b)| (a.t, b.t)) else {
        return blocks;
    };
    let lo_bound = window.t_min.max(first) * (1.0 - 1e-12);
    let hi_bound = window.t_max.min(last) * (1.0 + 1e-12);
    for s in sorted {
        let j = s.t.log2().floor() as i32;
        let lo = 2f64.powi(j);
        if lo < lo_bound || 2.0 * lo > hi_bound {
            continue;
        }
        match blocks.last_mut() {
            Some(b) if b.block == j => {
                b.sup = b.sup.max(s.remainder.abs());
                b.samples += 1;
            }
            _ => blocks.push(BlockSup { block: j, center: lo * std::f64::consts::SQRT_2, sup: s.remainder.abs(), samples: 1 }),
        }
    }
    blocks
}

/// Least-squares slope of `log sup|P|` against `log` block center, with a
/// 95% Student-t half-width. `omega` selects the reference exponents.
pub fn fit_exponent(samples: &[RemainderSample], window: FitWindow, omega: Option<u32>) -> Result<ExponentFit> {
    let d = samples.first().map(|s| s.theta.dim()).ok_or_else(|| Error::Domain("no samples".into()))?;
    let blocks: Vec<BlockSup> = block_sups(samples, window).into_iter().filter(|b| b.sup > 0.0).collect();
    if blocks.len() < MIN_BLOCKS {
        return domain(format!("fit needs at least {MIN_BLOCKS} non-empty dyadic blocks, got {}", blocks.len()));
    }
    let xs: Vec<f64> = blocks.iter().map(|b| b.center.ln()).collect();
    let ys: Vec<f64> = blocks.iter().map(|b| b.sup.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    let tq = StudentsT::new(0.0, 1.0, n - 2.0).map_err(|e| Error::Domain(e.to_string()))?.inverse_cdf(0.975);
    let reference = ReferenceExponents::new(d, omega);
    Ok(ExponentFit {
        fitted_alpha: slope,
        confidence_halfwidth: tq * se,
        intercept,
        within_trivial: slope <= reference.trivial + 0.1,
        below_theorem: reference.theorem.map(|th| slope <= th),
        block_sups: blocks,
        reference,
    })
}

/// Fit of one rotation's rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationFit {
    pub rotation: usize,
    pub theta: Rotation,
    /// `sup |P|` over the top dyadic block of the scan.
    pub top_block_sup: f64,
    pub fit: Option<ExponentFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub body: String,
    pub rows: usize,
    pub reference: ReferenceExponents,
    pub fits: Vec<RotationFit>,
    pub mean_alpha: Option<f64>,
    pub csv_path: Option<PathBuf>,
}

/// Fits every rotation of a scan separately.
pub fn fit_rows(rows: &[ScanRow], config: &ExperimentConfig) -> Vec<RotationFit> {
    let window = FitWindow { t_min: config.fit_t_min, t_max: config.fit_t_max };
    let mut ids: Vec<usize> = rows.iter().map(|r| r.rotation).collect();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let samples: Vec<RemainderSample> =
                rows.iter().filter(|r| r.rotation == id).map(|r| r.sample.clone()).collect();
            let top = block_sups(&samples, FitWindow::default()).last().map_or(0.0, |b| b.sup);
            let (fit, fit_error) = match fit_exponent(&samples, window, config.omega_type()) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            RotationFit { rotation: id, theta: samples[0].theta.clone(), top_block_sup: top, fit, fit_error }
        })
        .collect()
}

/// Scan, fit, and (when `out` is set) write `out` as CSV plus a summary
/// JSON next to it.
pub fn experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let rows = remainder_scan(config)?;
    let fits = fit_rows(&rows, config);
    let alphas: Vec<f64> = fits.iter().filter_map(|f| f.fit.as_ref().map(|x| x.fitted_alpha)).collect();
    let summary = ExperimentSummary {
        config: config.clone(),
        body: config.body_spec()?.name(),
        rows: rows.len(),
        reference: ReferenceExponents::new(config.d, config.omega_type()),
        mean_alpha: (!alphas.is_empty()).then(|| alphas.iter().sum::<f64>() / alphas.len() as f64),
        fits,
        csv_path: config.out.clone(),
    };
    if let Some(out) = &config.out {
        write_csv(out, &rows)?;
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(summary_path(out), json)?;
    }
    Ok(summary)
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}
