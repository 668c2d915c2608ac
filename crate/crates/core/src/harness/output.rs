//! Files written by a simulation: `mse.csv`, `summary.txt`, `mse.svg`,
//! `config.txt`, and for each retained run `trajectory_run<r>.csv` with a
//! `trajectory_run<r>.meta` sidecar: the run index and seed as comments
//! followed by the resolved configuration, so the sidecar itself parses as a
//! configuration file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::{ExperimentOutcome, MseSeries};
use crate::analysis::{excitation_report, rate_fit, ExcitationConfig, RateWindow};
use crate::error::{Error, Result};
use crate::numfmt::full_precision;

pub fn mse_header(n: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((1..=n).map(|i| format!("mse_coop_{i}")));
    h.extend((1..=n).map(|i| format!("mse_nonco_{i}")));
    h.extend(["max_coop", "min_coop", "max_nonco", "min_nonco"].map(String::from));
    h
}

pub fn write_mse_csv(series: &MseSeries, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err)?;
    wtr.write_record(mse_header(series.n)).map_err(csv_err)?;
    for k in 1..=series.steps() {
        let mut row = vec![k.to_string()];
        row.extend(series.coop[k - 1].iter().chain(&series.nonco[k - 1]).map(|&v| full_precision(v)));
        row.extend(
            [series.max_coop(k), series.min_coop(k), series.max_nonco(k), series.min_nonco(k)].map(full_precision),
        );
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

/// Log-scale line plot of the max/min MSE of both estimators against `k`.
pub fn render_svg(series: &MseSeries) -> String {
    let steps = series.steps();
    let curves: [(&str, &str, &str, Vec<f64>); 4] = [
        ("cooperative max", "#1f77b4", "", (1..=steps).map(|k| series.max_coop(k)).collect()),
        ("cooperative min", "#1f77b4", "6,4", (1..=steps).map(|k| series.min_coop(k)).collect()),
        ("non-cooperative max", "#d62728", "", (1..=steps).map(|k| series.max_nonco(k)).collect()),
        ("non-cooperative min", "#d62728", "6,4", (1..=steps).map(|k| series.min_nonco(k)).collect()),
    ];
    let positive: Vec<f64> = curves.iter().flat_map(|c| c.3.iter().copied()).filter(|&v| v > 0.0 && v.is_finite()).collect();
    let (mut lo, mut hi) = match (positive.iter().copied().reduce(f64::min), positive.iter().copied().reduce(f64::max)) {
        (Some(lo), Some(hi)) => (lo.log10().floor(), hi.log10().ceil()),
        _ => (-1.0, 0.0),
    };
    if hi <= lo {
        lo -= 1.0;
        hi += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |k: usize| {
        if steps <= 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * (k - 1) as f64 / (steps - 1) as f64
        }
    };
    let y_of = |v: f64| {
        let l = if v > 0.0 && v.is_finite() { v.log10().clamp(lo, hi) } else { lo };
        TOP + plot_h * (hi - l) / (hi - lo)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-k-min="1" data-k-max="{steps}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let decades = (hi - lo) as i64;
    let stride = (decades / 10).max(1);
    for d in (0..=decades).step_by(stride as usize) {
        let e = lo as i64 + d;
        let y = TOP + plot_h * (hi - e as f64) / (hi - lo);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + plot_w);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">1e{e}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<usize> = vec![1];
    let step = nice_step(steps);
    ticks.extend((1..).map(|t| t * step).take_while(|&t| t < steps));
    if steps > 1 {
        ticks.push(steps);
    }
    for k in ticks {
        let x = x_of(k);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{k}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">MSE</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (idx, (label, color, dash, values)) in curves.iter().enumerate() {
        let points: Vec<String> = values.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x_of(i + 1), y_of(v))).collect();
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} data-label="{label}" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 20.0 + 22.0 * idx as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>"#,
            lx + 30.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{label}</text>"#, lx + 36.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn nice_step(steps: usize) -> usize {
    let raw = (steps as f64 / 6.0).max(1.0);
    let mag = 10f64.powf(raw.log10().floor());
    let unit = [1.0, 2.0, 5.0, 10.0].into_iter().find(|u| u * mag >= raw).unwrap_or(10.0);
    (unit * mag) as usize
}

fn summary(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<String> {
    let s_ = &outcome.series;
    let last = s_.steps();
    let mut s = String::new();
    let _ = writeln!(s, "runs: {}", s_.runs);
    let _ = writeln!(s, "steps: {last}");
    let _ = writeln!(s, "sensors: {}, parameter dimension: {}", config.n, config.m);
    let _ = writeln!(s, "diameter: {}, Q: {}", outcome.diameter, config.params.q);
    let _ = writeln!(s, "mu: {}, nu: {}, mu*(1+4*nu): {}", config.params.mu, config.params.nu, config.params.step_product());
    for w in &outcome.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s);
    let rows = [
        ("cooperative max", s_.max_coop(1), s_.max_coop(last)),
        ("cooperative min", s_.min_coop(1), s_.min_coop(last)),
        ("non-cooperative max", s_.max_nonco(1), s_.max_nonco(last)),
        ("non-cooperative min", s_.min_nonco(1), s_.min_nonco(last)),
    ];
    let _ = writeln!(s, "{:<22}{:>16}{:>16}{:>14}", "MSE", "k = 1", format!("k = {last}"), "final/first");
    for (label, first, fin) in rows {
        let ratio = if first > 0.0 { format!("{:.4e}", fin / first) } else { "n/a".into() };
        let _ = writeln!(s, "{label:<22}{first:>16.6e}{fin:>16.6e}{ratio:>14}");
    }
    if let Some((run, t)) = outcome.trajectories.first() {
        let _ = writeln!(s);
        let _ = writeln!(s, "diagnostics of run {run}:");
        let rep = excitation_report(t, ExcitationConfig::default())?;
        let _ = writeln!(
            s,
            "  cooperative excitation: {} (fitted N = {})",
            rep.cooperative_verdict,
            rep.fitted_n.map_or("n/a".into(), |v| format!("{v:.6e}"))
        );
        let _ = writeln!(
            s,
            "  per-sensor log-normalized excitation failing: {} of {}",
            rep.failing_sensors(|x| x.excitation_verdict),
            config.n
        );
        match rate_fit(t, &config.theta, RateWindow::default()) {
            Ok(fit) => {
                let _ = writeln!(s, "  rate fit: d1_hat = {:.6e} over {} points (rms residual {:.3e})", fit.d1_hat, fit.used, fit.residual);
            }
            Err(e) => {
                let _ = writeln!(s, "  rate fit: unavailable ({e})");
            }
        }
    }
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes every output file into `dir` (created if missing) and returns
/// their paths.
pub fn emit_outputs(config: &ExperimentConfig, outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    if outcome.series.steps() == 0 {
        return Err(Error::Invalid("nothing to write: empty MSE series".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let csv_path = dir.join("mse.csv");
    write_mse_csv(&outcome.series, &csv_path)?;
    written.push(csv_path);

    for (name, body) in [
        ("summary.txt", summary(config, outcome)?),
        ("mse.svg", render_svg(&outcome.series)),
        ("config.txt", config.echo()),
    ] {
        let p = dir.join(name);
        write_file(&p, &body)?;
        written.push(p);
    }

    for (run, t) in &outcome.trajectories {
        let p = dir.join(format!("trajectory_run{run}.csv"));
        t.save(&p)?;
        written.push(p);
        let meta = dir.join(format!("trajectory_run{run}.meta"));
        let mut body = format!("# run = {run}\n# run_seed = {}\n", t.seed.unwrap_or_default());
        body.push_str(&config.echo());
        write_file(&meta, &body)?;
        written.push(meta);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(steps: usize) -> MseSeries {
        let row = |k: usize, base: f64| vec![base / k as f64, 2.0 * base / k as f64];
        MseSeries {
            n: 2,
            runs: 1,
            coop: (1..=steps).map(|k| row(k, 1.0)).collect(),
            nonco: (1..=steps).map(|k| row(k, 10.0)).collect(),
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            mse_header(2).join(","),
            "k,mse_coop_1,mse_coop_2,mse_nonco_1,mse_nonco_2,max_coop,min_coop,max_nonco,min_nonco"
        );
    }

    #[test]
    fn svg_structure() {
        let svg = render_svg(&series(600));
        assert_eq!(svg.matches("<polyline").count(), 4);
        for label in ["cooperative max", "cooperative min", "non-cooperative max", "non-cooperative min"] {
            assert!(svg.contains(&format!(">{label}</text>")));
        }
        assert!(svg.contains(r#"data-k-max="600""#));
        assert!(svg.contains(">600</text>") && svg.contains(">1</text>"));
        let all_zero = MseSeries { coop: vec![vec![0.0; 2]; 3], nonco: vec![vec![0.0; 2]; 3], ..series(3) };
        assert!(render_svg(&all_zero).contains("<polyline"));
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(600), 100);
        assert_eq!(nice_step(1), 1);
        assert_eq!(nice_step(40), 10);
    }
}
