//! Evaluation metrics, multi-seed aggregation, predictive entropy, kernel
//! density estimates and report emission (`results.csv`, `entropy.svg`).

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::data::Modality;
use crate::ensemble::BoostMode;
use crate::error::{Error, Result};
use crate::nn::GaussianPrediction;

pub const RESULTS_FILE: &str = "results.csv";
pub const ENTROPY_FILE: &str = "entropy.svg";
pub const DEFAULT_GRID_POINTS: usize = 256;
pub const MIN_GRID_POINTS: usize = 16;

/// `0.5 * ln(2 pi e)`.
const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::mismatch(
            format!("{} targets", predictions.len()),
            format!("{} targets", targets.len()),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::Data("rmse of an empty list".into()));
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Differential entropy of the predictive Gaussian, in nats.
pub fn predictive_entropy(pred: &GaussianPrediction) -> Result<f64> {
    if !(pred.sigma > 0.0) || !pred.sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive and finite, got {}", pred.sigma)));
    }
    Ok(HALF_LN_2PI_E + pred.sigma.ln())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::mismatch(format!("{} values", a.len()), format!("{} values", b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Data("correlation needs at least two values".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Domain("correlation of a constant series".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `n^(-1/5) * sample_std`.
    Scott,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeSpec {
    pub bandwidth: Bandwidth,
    pub grid_points: usize,
}

impl Default for KdeSpec {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Scott,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl KdeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "kde needs at least {MIN_GRID_POINTS} grid points, got {}",
                self.grid_points
            )));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!("kde bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Gaussian kernel density estimate on an even grid over `[min - 3h, max + 3h]`.
pub fn kde(values: &[f64], spec: &KdeSpec) -> Result<KdeCurve> {
    spec.validate()?;
    if values.is_empty() {
        return Err(Error::Data("kde of an empty list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("kde input contains non-finite values".into()));
    }
    let h = match spec.bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Scott => {
            let s = sample_std(values);
            if !(s > 0.0) {
                return Err(Error::Domain(
                    "scott bandwidth needs at least two distinct values; use a fixed bandwidth".into(),
                ));
            }
            (values.len() as f64).powf(-0.2) * s
        }
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let last = (spec.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..spec.grid_points)
        .map(|i| lo + (hi - lo) * (i as f64 / last))
        .collect();
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| {
            norm * values
                .iter()
                .map(|&v| {
                    let z = (g - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeCurve {
        grid,
        density,
        bandwidth: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_seed_rmse: Vec<f64>,
    pub mean_rmse: f64,
    /// Sample standard deviation (n - 1).
    pub std_rmse: f64,
    pub seeds: Vec<u64>,
}

impl EvalReport {
    pub fn from_values(seeds: Vec<u64>, per_seed_rmse: Vec<f64>) -> Result<Self> {
        if seeds.len() != per_seed_rmse.len() {
            return Err(Error::mismatch(
                format!("{} values", seeds.len()),
                format!("{} values", per_seed_rmse.len()),
            ));
        }
        if seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        Ok(Self {
            mean_rmse: mean(&per_seed_rmse),
            std_rmse: sample_std(&per_seed_rmse),
            per_seed_rmse,
            seeds,
        })
    }
}

/// Runs `run` once per seed on up to `jobs` threads. Results follow the seed
/// order; the first failure in seed order is reported with its seed.
pub fn run_seeds<T, F>(seeds: &[u64], jobs: usize, run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::Config("seed list must not be empty".into()));
    }
    let wrap = |seed: u64, r: Result<T>| {
        r.map_err(|e| Error::Seed {
            seed,
            source: Box::new(e),
        })
    };
    let jobs = jobs.max(1).min(seeds.len());
    if jobs == 1 {
        return seeds.iter().map(|&s| wrap(s, run(s))).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let r = run(seeds[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .zip(seeds)
        .map(|(r, &s)| wrap(s, r.expect("every seed ran")))
        .collect()
}

/// One RMSE per seed, aggregated. Needs at least two seeds.
pub fn multi_seed_evaluate<F>(run: F, seeds: &[u64]) -> Result<EvalReport>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    multi_seed_evaluate_jobs(run, seeds, 1)
}

pub fn multi_seed_evaluate_jobs<F>(run: F, seeds: &[u64], jobs: usize) -> Result<EvalReport>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if seeds.len() < 2 {
        return Err(Error::Config(format!("multi-seed evaluation needs at least 2 seeds, got {}", seeds.len())));
    }
    let values = run_seeds(seeds, jobs, run)?;
    EvalReport::from_values(seeds.to_vec(), values)
}

/// Per-stage predictive entropies of one boosted ensemble and their KDEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub mode: BoostMode,
    pub stages: Vec<Modality>,
    /// `[stage][sample]`, nats.
    pub per_learner_entropies: Vec<Vec<f64>>,
    pub kde_curves: Vec<KdeCurve>,
}

impl EntropyReport {
    /// A series with no spread gets a 0.01-nat fixed bandwidth instead of
    /// Scott's rule.
    pub fn new(mode: BoostMode, stages: Vec<Modality>, entropies: Vec<Vec<f64>>, spec: &KdeSpec) -> Result<Self> {
        if stages.len() != entropies.len() {
            return Err(Error::mismatch(
                format!("{} stages", stages.len()),
                format!("{} stages", entropies.len()),
            ));
        }
        let kde_curves = entropies
            .iter()
            .map(|e| {
                let spec = if matches!(spec.bandwidth, Bandwidth::Scott) && !(sample_std(e) > 0.0) {
                    KdeSpec {
                        bandwidth: Bandwidth::Fixed(0.01),
                        ..*spec
                    }
                } else {
                    *spec
                };
                kde(e, &spec)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            mode,
            stages,
            per_learner_entropies: entropies,
            kde_curves,
        })
    }

    pub fn from_predictions(
        mode: BoostMode,
        stages: Vec<Modality>,
        predictions: &[Vec<GaussianPrediction>],
        spec: &KdeSpec,
    ) -> Result<Self> {
        let entropies = predictions
            .iter()
            .map(|stage| stage.iter().map(predictive_entropy).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(mode, stages, entropies, spec)
    }

    pub fn mean_entropies(&self) -> Vec<f64> {
        self.per_learner_entropies.iter().map(|e| mean(e)).collect()
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub mode: String,
    pub fusion: String,
    pub report: EvalReport,
}

fn config_echo(config: &serde_json::Value) -> String {
    serde_json::to_string(config).expect("json values serialize")
}

/// `results.csv`: `#`-prefixed config echo, then one row per method.
pub fn results_csv(rows: &[ResultRow], config: &serde_json::Value) -> Result<String> {
    let seeds = rows.first().map(|r| r.report.seeds.clone()).unwrap_or_default();
    if let Some(r) = rows.iter().find(|r| r.report.seeds != seeds) {
        return Err(Error::Data(format!("row `{}` was evaluated on a different seed list", r.method)));
    }
    let mut out = format!("# config: {}\n", config_echo(config));
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["method", "mode", "fusion", "mean_rmse", "std_rmse"].map(String::from).to_vec();
    header.extend(seeds.iter().map(|s| format!("rmse_seed_{s}")));
    let csv_err = |e: csv::Error| Error::Data(format!("csv encoding failed: {e}"));
    writer.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut record = vec![
            row.method.clone(),
            row.mode.clone(),
            row.fusion.clone(),
            format!("{:.6}", row.report.mean_rmse),
            format!("{:.6}", row.report.std_rmse),
        ];
        record.extend(row.report.per_seed_rmse.iter().map(|v| format!("{v:.6}")));
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Data(format!("csv encoding failed: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn panel_title(mode: BoostMode) -> &'static str {
    match mode {
        BoostMode::Vanilla => "vanilla boosting",
        BoostMode::Ua => "uncertainty-aware boosting",
    }
}

/// Side-by-side KDE panels, one per report, sharing both axes.
pub fn entropy_svg(panels: &[EntropyReport], config: &serde_json::Value) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::Data("no entropy panels to draw".into()));
    }
    let curves = || panels.iter().flat_map(|p| p.kde_curves.iter());
    if curves().next().is_none() {
        return Err(Error::Data("entropy panels contain no curves".into()));
    }
    let x_lo = curves().map(|c| c.grid[0]).fold(f64::INFINITY, f64::min);
    let x_hi = curves().map(|c| c.grid[c.grid.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let y_hi = curves().flat_map(|c| c.density.iter().copied()).fold(0.0, f64::max) * 1.05;
    let y_hi = if y_hi > 0.0 { y_hi } else { 1.0 };

    let (pw, ph) = (420.0, 300.0);
    let (left, top, gap) = (60.0, 50.0, 70.0);
    let width = left + panels.len() as f64 * pw + (panels.len() - 1) as f64 * gap + 30.0;
    let height = top + ph + 60.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>Predictive entropy by boosting stage</title>");
    let _ = writeln!(s, "<desc>{}</desc>", xml_escape(&config_echo(config)));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (k, panel) in panels.iter().enumerate() {
        let x0 = left + k as f64 * (pw + gap);
        let sx = |x: f64| x0 + (x - x_lo) / (x_hi - x_lo) * pw;
        let sy = |y: f64| top + ph - y / y_hi * ph;
        let _ = writeln!(s, r#"<g class="panel" data-mode="{}">"#, panel.mode);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            x0 + pw / 2.0,
            top - 20.0,
            panel_title(panel.mode)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        for t in 0..=4 {
            let xv = x_lo + (x_hi - x_lo) * t as f64 / 4.0;
            let yv = y_hi * t as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
                sx(xv),
                top + ph + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2}</text>"#,
                x0 - 4.0,
                sy(yv) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">predictive entropy (nats)</text>"#,
            x0 + pw / 2.0,
            top + ph + 36.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">density</text>"#,
            x0 - 40.0,
            top + ph / 2.0,
            x0 - 40.0,
            top + ph / 2.0
        );
        for (i, (modality, curve)) in panel.stages.iter().zip(&panel.kde_curves).enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let points: Vec<String> = curve
                .grid
                .iter()
                .zip(&curve.density)
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let label = format!("stage {}: {}", i + 1, modality);
            let _ = writeln!(
                s,
                r#"<polyline class="curve" data-stage="{}" data-modality="{modality}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{label}</title></polyline>"#,
                i + 1,
                points.join(" ")
            );
            let ly = top + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
                x0 + pw - 150.0,
                ly - 4.0,
                x0 + pw - 130.0,
                ly - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text class="legend" x="{:.2}" y="{ly:.2}">{label}</text>"#,
                x0 + pw - 125.0
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv` (when rows are given) and `entropy.svg` (when panels
/// are given) into `out_dir`, creating it if needed.
pub fn emit_reports(
    rows: &[ResultRow],
    panels: &[EntropyReport],
    config: &serde_json::Value,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !rows.is_empty() {
        write_file(&dir.join(RESULTS_FILE), &results_csv(rows, config)?)?;
    }
    if !panels.is_empty() {
        write_file(&dir.join(ENTROPY_FILE), &entropy_svg(panels, config)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.535_533_905_932_737_6, epsilon = 1e-12);
        assert_relative_eq!(rmse(&[3.5, 0.5, -1.0], &[1.0, -2.0, -3.5]).unwrap(), 2.5, epsilon = 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let h1 = predictive_entropy(&GaussianPrediction { mu: 0.0, sigma: 1.0 }).unwrap();
        assert_relative_eq!(h1, 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln(), epsilon = 1e-15);
        assert!((h1 - 1.418939).abs() < 1e-6);
        let h2 = predictive_entropy(&GaussianPrediction { mu: 3.0, sigma: 2.0 }).unwrap();
        assert_relative_eq!(h2 - h1, std::f64::consts::LN_2, epsilon = 1e-12);
        assert!(predictive_entropy(&GaussianPrediction { mu: 0.0, sigma: 0.0 }).is_err());
    }

    #[test]
    fn kde_peak_of_single_point() {
        let spec = KdeSpec {
            bandwidth: Bandwidth::Fixed(1.0),
            grid_points: 257,
        };
        let c = kde(&[0.0], &spec).unwrap();
        assert_eq!(c.grid[128], 0.0);
        assert_relative_eq!(c.density[128], 0.398_942_280_401_432_7, epsilon = 1e-12);
        assert!((c.integral() - 1.0).abs() < 0.05);
    }

    #[test]
    fn kde_spec_checks() {
        let scott = KdeSpec::default();
        assert!(kde(&[2.0, 2.0], &scott).is_err());
        assert!(kde(&[1.0, 2.0], &KdeSpec { grid_points: 15, ..scott }).is_err());
        assert!(kde(&[1.0], &KdeSpec { bandwidth: Bandwidth::Fixed(0.0), ..scott }).is_err());
    }

    #[test]
    fn kde_symmetric_input() {
        let c = kde(&[-2.0, -0.5, 0.5, 2.0], &KdeSpec::default()).unwrap();
        let n = c.density.len();
        for i in 0..n {
            assert!((c.density[i] - c.density[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn multi_seed_examples() {
        let r = multi_seed_evaluate(|_| Ok(4.0), &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!((r.mean_rmse, r.std_rmse, r.per_seed_rmse.len()), (4.0, 0.0, 5));
        let r = multi_seed_evaluate(|s| Ok(if s == 0 { 3.0 } else { 5.0 }), &[0, 1]).unwrap();
        assert_eq!(r.mean_rmse, 4.0);
        assert_relative_eq!(r.std_rmse, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert!(multi_seed_evaluate(|_| Ok(1.0), &[3]).is_err());
    }

    #[test]
    fn failing_seed_is_named() {
        let err = multi_seed_evaluate(|s| if s == 7 { Err(Error::Training("diverged".into())) } else { Ok(1.0) }, &[3, 7, 9])
            .unwrap_err();
        assert!(matches!(err, Error::Seed { seed: 7, .. }));
        assert_eq!(err.kind(), crate::ErrorKind::Training);
    }

    #[test]
    fn parallel_runs_keep_seed_order() {
        let seeds: Vec<u64> = (0..9).collect();
        let serial = run_seeds(&seeds, 1, |s| Ok(s * s)).unwrap();
        let parallel = run_seeds(&seeds, 4, |s| Ok(s * s)).unwrap();
        assert_eq!(serial, parallel);
    }

    fn sample_panels() -> Vec<EntropyReport> {
        let stages = vec![Modality::Disfluency, Modality::Interventions, Modality::Acoustic];
        [BoostMode::Vanilla, BoostMode::Ua]
            .iter()
            .map(|&mode| {
                let ent = (0..3)
                    .map(|k| (0..20).map(|i| 1.0 + 0.1 * k as f64 + 0.03 * i as f64).collect())
                    .collect();
                EntropyReport::new(mode, stages.clone(), ent, &KdeSpec::default()).unwrap()
            })
            .collect()
    }

    #[test]
    fn svg_has_three_curves_per_panel() {
        let cfg = serde_json::json!({"command": "entropy", "seeds": [0, 1]});
        let svg = entropy_svg(&sample_panels(), &cfg).unwrap();
        assert_eq!(svg.matches("class=\"panel\"").count(), 2);
        assert_eq!(svg.matches("class=\"curve\"").count(), 6);
        assert_eq!(svg.matches("class=\"legend\"").count(), 6);
        let vanilla = svg.find("data-mode=\"vanilla\"").unwrap();
        let ua = svg.find("data-mode=\"ua\"").unwrap();
        assert!(vanilla < ua);
        assert!(svg.contains("<desc>{&quot;command&quot;:&quot;entropy&quot;"));
        assert_eq!(svg, entropy_svg(&sample_panels(), &cfg).unwrap());
    }

    #[test]
    fn csv_layout() {
        let report = EvalReport::from_values(vec![0, 1], vec![5.0, 4.5]).unwrap();
        let rows = vec![ResultRow {
            method: "ua_ensemble_weighted".into(),
            mode: "ua".into(),
            fusion: "inverse_sigma".into(),
            report,
        }];
        let text = results_csv(&rows, &serde_json::json!({"seeds": [0, 1]})).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"# config: {"seeds":[0,1]}"#);
        assert_eq!(lines[1], "method,mode,fusion,mean_rmse,std_rmse,rmse_seed_0,rmse_seed_1");
        assert_eq!(lines[2], "ua_ensemble_weighted,ua,inverse_sigma,4.750000,0.353553,5.000000,4.500000");
    }

    proptest! {
        #[test]
        fn kde_is_a_density(values in proptest::collection::vec(-10.0f64..10.0, 2..60)) {
            prop_assume!(sample_std(&values) > 1e-3);
            let c = kde(&values, &KdeSpec::default()).unwrap();
            prop_assert!(c.density.iter().all(|&d| d >= 0.0));
            prop_assert!((c.integral() - 1.0).abs() < 0.05);
        }

        #[test]
        fn entropy_order_matches_sigma_order(a in 1e-3f64..100.0, b in 1e-3f64..100.0) {
            let ha = predictive_entropy(&GaussianPrediction { mu: 0.0, sigma: a }).unwrap();
            let hb = predictive_entropy(&GaussianPrediction { mu: 0.0, sigma: b }).unwrap();
            prop_assert_eq!(a < b, ha < hb);
        }

        #[test]
        fn report_aggregates_recompute(values in proptest::collection::vec(0.0f64..20.0, 2..10)) {
            let seeds = (0..values.len() as u64).collect();
            let r = EvalReport::from_values(seeds, values.clone()).unwrap();
            let m = values.iter().sum::<f64>() / values.len() as f64;
            let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
            prop_assert!((r.mean_rmse - m).abs() < 1e-12);
            prop_assert!((r.std_rmse - v.sqrt()).abs() < 1e-12);
        }
    }
}
