use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::ResultsError;
use crate::metrics::{mean_std, RunResult};

pub const COLUMNS: [&str; 15] = [
    "scenario",
    "seed",
    "n_uavs",
    "malicious_ratio",
    "t_s",
    "attack",
    "fpr",
    "fnr",
    "dr",
    "pdr_mean",
    "pdr_eq8",
    "sent",
    "received",
    "defense",
    "sim_time",
];

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "NA".to_string(),
    }
}

pub fn write_results_csv<W: io::Write>(w: W, results: &[RunResult]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in results {
        out.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            r.n_uavs.to_string(),
            r.malicious_ratio.to_string(),
            r.t_s.to_string(),
            r.attack.clone(),
            opt(r.fpr),
            opt(r.fnr),
            opt(r.dr),
            opt(r.pdr_mean),
            opt(r.pdr_eq8),
            r.sent.to_string(),
            r.received.to_string(),
            r.defense.clone(),
            r.sim_time.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a results file back. Columns are located by header name, so extra
/// columns are ignored; `NA` reads as a missing value.
pub fn read_results_csv<R: io::Read>(r: R) -> Result<Vec<RunResult>, ResultsError> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let mut idx = BTreeMap::new();
    for c in COLUMNS {
        let i = headers.iter().position(|h| h == c).ok_or(ResultsError::MissingColumn(c))?;
        idx.insert(c, i);
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let get = |c: &'static str| rec.get(idx[c]).unwrap_or("");
        let bad = |c: &'static str| ResultsError::BadValue { row, column: c, value: get(c).to_string() };
        let num = |c: &'static str| -> Result<f64, ResultsError> {
            get(c).parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(c))
        };
        let count = |c: &'static str| -> Result<u64, ResultsError> { get(c).parse::<u64>().map_err(|_| bad(c)) };
        let maybe = |c: &'static str| -> Result<Option<f64>, ResultsError> {
            if get(c) == "NA" {
                Ok(None)
            } else {
                num(c).map(Some)
            }
        };
        out.push(RunResult {
            scenario: get("scenario").to_string(),
            seed: count("seed")?,
            n_uavs: get("n_uavs").parse().map_err(|_| bad("n_uavs"))?,
            malicious_ratio: num("malicious_ratio")?,
            t_s: num("t_s")?,
            attack: get("attack").to_string(),
            fpr: maybe("fpr")?,
            fnr: maybe("fnr")?,
            dr: maybe("dr")?,
            pdr_mean: maybe("pdr_mean")?,
            pdr_eq8: maybe("pdr_eq8")?,
            sent: count("sent")?,
            received: count("received")?,
            defense: get("defense").to_string(),
            sim_time: num("sim_time")?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Dr,
    Fnr,
    Fpr,
    Pdr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Dr, Metric::Fnr, Metric::Fpr, Metric::Pdr];

    pub fn file_stem(self) -> &'static str {
        match self {
            Metric::Dr => "dr",
            Metric::Fnr => "fnr",
            Metric::Fpr => "fpr",
            Metric::Pdr => "pdr",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Dr => "Detection rate",
            Metric::Fnr => "False negative rate",
            Metric::Fpr => "False positive rate",
            Metric::Pdr => "Packet delivery ratio",
        }
    }

    fn of(self, r: &RunResult) -> Option<f64> {
        match self {
            Metric::Dr => r.dr,
            Metric::Fnr => r.fnr,
            Metric::Fpr => r.fpr,
            Metric::Pdr => r.pdr_mean,
        }
    }
}

/// Identity of one aggregated cell. Floats are keyed by their bit patterns,
/// which order correctly for the non-negative values used here.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    defense: String,
    attack: String,
    n_uavs: usize,
    sim_time: u64,
    t_s: u64,
    ratio: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub defense: String,
    pub attack: String,
    pub n_uavs: usize,
    pub sim_time: f64,
    pub t_s: f64,
    pub malicious_ratio: f64,
    pub runs: usize,
    /// (mean, sample std) per metric over the runs where it is defined.
    pub stats: BTreeMap<Metric, (f64, f64)>,
}

impl CellSummary {
    pub fn mean(&self, m: Metric) -> Option<f64> {
        self.stats.get(&m).map(|s| s.0)
    }
}

pub fn summarize(results: &[RunResult]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<CellKey, Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        let key = CellKey {
            defense: r.defense.clone(),
            attack: r.attack.clone(),
            n_uavs: r.n_uavs,
            sim_time: r.sim_time.to_bits(),
            t_s: r.t_s.to_bits(),
            ratio: r.malicious_ratio.to_bits(),
        };
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(k, rs)| {
            let mut stats = BTreeMap::new();
            for m in Metric::ALL {
                let vals: Vec<f64> = rs.iter().filter_map(|r| m.of(r)).collect();
                if let Some(s) = mean_std(&vals) {
                    stats.insert(m, s);
                }
            }
            CellSummary {
                defense: k.defense,
                attack: k.attack,
                n_uavs: k.n_uavs,
                sim_time: f64::from_bits(k.sim_time),
                t_s: f64::from_bits(k.t_s),
                malicious_ratio: f64::from_bits(k.ratio),
                runs: rs.len(),
                stats,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Ratio,
    SimTime,
    NUavs,
    Ts,
}

impl Axis {
    fn of(self, c: &CellSummary) -> f64 {
        match self {
            Axis::Ratio => c.malicious_ratio,
            Axis::SimTime => c.sim_time,
            Axis::NUavs => c.n_uavs as f64,
            Axis::Ts => c.t_s,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Axis::Ratio => "malicious ratio",
            Axis::SimTime => "simulation time (s)",
            Axis::NUavs => "number of UAVs",
            Axis::Ts => "surveillance threshold",
        }
    }

    fn varies(self, cells: &[CellSummary]) -> bool {
        cells.iter().map(|c| self.of(c).to_bits()).collect::<BTreeSet<_>>().len() > 1
    }
}

const AXES: [Axis; 4] = [Axis::Ratio, Axis::SimTime, Axis::NUavs, Axis::Ts];

fn x_axis(cells: &[CellSummary]) -> Axis {
    AXES.into_iter().find(|a| a.varies(cells)).unwrap_or(Axis::Ratio)
}

fn series_label(c: &CellSummary, x: Axis, cells: &[CellSummary]) -> String {
    let mut s = format!("{} / {}", c.defense, c.attack);
    for a in AXES {
        if a != x && a.varies(cells) {
            let v = a.of(c);
            match a {
                Axis::Ratio => write!(s, ", ratio {v}"),
                Axis::SimTime => write!(s, ", {v} s"),
                Axis::NUavs => write!(s, ", {v} UAVs"),
                Axis::Ts => write!(s, ", t_s {v}"),
            }
            .expect("writing to a String");
        }
    }
    s
}

const PALETTE: [&str; 8] = ["#1b6ca8", "#d1495b", "#2a9d8f", "#e9a03b", "#6a4c93", "#4d4d4d", "#8ab17d", "#c06c84"];

/// One line per defense/attack configuration, x the swept variable, y 0..100.
pub fn render_plot(metric: Metric, cells: &[CellSummary]) -> String {
    let x = x_axis(cells);
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for c in cells {
        let pts = series.entry(series_label(c, x, cells)).or_default();
        if let Some(y) = c.mean(metric) {
            pts.push((x.of(c), y));
        }
    }
    let xs: Vec<f64> = {
        let set: BTreeSet<u64> = cells.iter().map(|c| x.of(c).to_bits()).collect();
        set.into_iter().map(f64::from_bits).collect()
    };
    let (w, h) = (760.0, 440.0);
    let (left, right, top, bottom) = (64.0, 520.0, 40.0, 380.0);
    let (x0, x1) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let px = |v: f64| left + (v - x0) / (x1 - x0) * (right - left);
    let py = |v: f64| bottom - v.clamp(0.0, 100.0) / 100.0 * (bottom - top);

    let mut s = String::new();
    let mut put = |line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    put(format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    ));
    put(format!(r#"<rect width="{w}" height="{h}" fill="white"/>"#));
    put(format!(
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        metric.title()
    ));
    for k in 0..=5 {
        let v = f64::from(k) * 20.0;
        let y = py(v);
        put(format!(r##"<line x1="{left}" y1="{y}" x2="{right}" y2="{y}" stroke="#dddddd"/>"##));
        put(format!(r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, left - 6.0, y + 4.0));
    }
    for &v in &xs {
        let xp = px(v);
        put(format!(r#"<line x1="{xp}" y1="{bottom}" x2="{xp}" y2="{}" stroke="black"/>"#, bottom + 5.0));
        put(format!(r#"<text x="{xp}" y="{}" text-anchor="middle">{v}</text>"#, bottom + 18.0));
    }
    put(format!(r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#));
    put(format!(r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#));
    put(format!(
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        bottom + 40.0,
        x.label()
    ));
    put(format!(
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{} (%)</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        metric.file_stem().to_uppercase()
    ));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() > 1 {
            let coords: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b))).collect();
            put(format!(r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" ")));
        }
        for &(a, b) in pts {
            put(format!(r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(a), py(b)));
        }
        let ly = top + 10.0 + i as f64 * 18.0;
        put(format!(r#"<rect x="{}" y="{}" width="14" height="4" fill="{color}"/>"#, right + 20.0, ly - 4.0));
        put(format!(r#"<text x="{}" y="{ly}">{}</text>"#, right + 40.0, xml_escape(label)));
    }
    put("</svg>".to_string());
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cell_text(c: &CellSummary, m: Metric) -> String {
    match c.stats.get(&m) {
        Some((mean, std)) => format!("{mean:.2} ± {std:.2}"),
        None => "NA".to_string(),
    }
}

/// Averages per scheme and setting, one row each, in the layout of a
/// framework-comparison table: detection rate, FNR, FPR, PDR.
pub fn summary_table(cells: &[CellSummary]) -> String {
    let x = x_axis(cells);
    let mut s =
        String::from("| Scheme | Setting | Runs | Detection rate | FNR | FPR | PDR |\n|---|---|---|---|---|---|---|\n");
    for c in cells {
        let mut setting = Vec::new();
        for a in AXES {
            if a == x || a.varies(cells) {
                let v = a.of(c);
                setting.push(match a {
                    Axis::Ratio => format!("malicious ratio {v:.2}"),
                    Axis::SimTime => format!("{v} s"),
                    Axis::NUavs => format!("{v} UAVs"),
                    Axis::Ts => format!("t_s {v}"),
                });
            }
        }
        writeln!(
            s,
            "| {} / {} | {} | {} | {} | {} | {} | {} |",
            c.defense,
            c.attack,
            setting.join(", "),
            c.runs,
            cell_text(c, Metric::Dr),
            cell_text(c, Metric::Fnr),
            cell_text(c, Metric::Fpr),
            cell_text(c, Metric::Pdr)
        )
        .expect("writing to a String");
    }
    s
}

/// Plots and summary table for already-computed results.
pub fn emit_plots(results: &[RunResult], out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let cells = summarize(results);
    let mut written = Vec::new();
    for m in Metric::ALL {
        let path = out_dir.join(format!("{}.svg", m.file_stem()));
        std::fs::write(&path, render_plot(m, &cells))?;
        written.push(path);
    }
    let path = out_dir.join("summary.md");
    std::fs::write(&path, summary_table(&cells))?;
    written.push(path);
    Ok(written)
}

/// results.csv, one plot per metric, and the summary table.
pub fn emit_outputs(results: &[RunResult], out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("results.csv");
    let file = std::fs::File::create(&path)?;
    write_results_csv(io::BufWriter::new(file), results).map_err(io::Error::other)?;
    let mut written = vec![path];
    written.extend(emit_plots(results, out_dir)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(defense: &str, ratio: f64, seed: u64, dr: Option<f64>, pdr: f64) -> RunResult {
        RunResult {
            scenario: "t".into(),
            seed,
            n_uavs: 100,
            malicious_ratio: ratio,
            t_s: 0.1,
            attack: "mixed".into(),
            defense: defense.into(),
            sim_time: 300.0,
            fpr: Some(1.5),
            fnr: dr.map(|d| 100.0 - d),
            dr,
            pdr_mean: Some(pdr),
            pdr_eq8: Some(pdr / 4.0),
            sent: 100,
            received: 80,
        }
    }

    #[test]
    fn csv_round_trips_with_na() {
        let rows = vec![row("suas-his", 0.0, 1, None, 80.0), row("none", 0.3, 2, Some(90.0), 12.5)];
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("scenario,seed,n_uavs,malicious_ratio,t_s,attack,fpr,fnr,dr,pdr_mean,pdr_eq8,sent,received"));
        assert!(text.lines().nth(1).unwrap().contains(",NA,NA,"));
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn reader_rejects_garbage() {
        assert!(matches!(read_results_csv("a,b\n1,2\n".as_bytes()), Err(ResultsError::MissingColumn(_))));
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &[row("none", 0.1, 1, Some(1.0), 1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(",100,80,", ",x,80,");
        assert!(matches!(read_results_csv(text.as_bytes()), Err(ResultsError::BadValue { column: "sent", .. })));
    }

    #[test]
    fn summary_averages_and_plots_span_0_to_100() {
        let rows = vec![
            row("suas-his", 0.1, 1, Some(80.0), 70.0),
            row("suas-his", 0.1, 2, Some(90.0), 80.0),
            row("suas-his", 0.2, 1, Some(70.0), 60.0),
            row("none", 0.1, 1, Some(0.0), 10.0),
        ];
        let cells = summarize(&rows);
        assert_eq!(cells.len(), 3);
        let c = cells.iter().find(|c| c.defense == "suas-his" && c.malicious_ratio == 0.1).unwrap();
        assert_eq!(c.runs, 2);
        assert_eq!(c.mean(Metric::Dr), Some(85.0));
        let svg = render_plot(Metric::Fpr, &cells);
        assert!(svg.contains(">0</text>") && svg.contains(">100</text>"));
        assert!(svg.contains(">0.1</text>") && svg.contains(">0.2</text>"));
        assert!(svg.contains("suas-his / mixed") && svg.contains("none / mixed"));
        let table = summary_table(&cells);
        assert!(table.contains("| suas-his / mixed | malicious ratio 0.10 | 2 | 85.00 ± 7.07 |"));
    }

    #[test]
    fn emitting_twice_is_byte_identical() {
        let rows = vec![row("suas-his", 0.1, 1, Some(80.0), 70.0), row("none", 0.2, 1, None, 20.0)];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_outputs(&rows, a.path()).unwrap();
        let fb = emit_outputs(&rows, b.path()).unwrap();
        assert_eq!(fa.len(), 6);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
