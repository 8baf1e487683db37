use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;

/// Full-precision decimal: 17 significant digits, parses back to the same bits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 CSV bytes.
pub fn csv_bytes<I, R>(header: &[String], rows: I) -> Result<Vec<u8>, HarnessError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Csv(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.to_string()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Grid indices written for a series of `n_steps + 1` points: every point, or
/// `points` equidistant ones at `k·⌊N/points⌋`, `k = 1..=points`.
pub fn subsample(n_steps: usize, points: Option<usize>) -> Vec<usize> {
    match points {
        Some(p) if p > 0 && p < n_steps => {
            let stride = n_steps / p;
            (1..=p).map(|k| k * stride).collect()
        }
        _ => (0..=n_steps).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run an output directory: the config as parsed, the
/// seed, the tool version and a digest of every file written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub files: Vec<FileDigest>,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub csv: Vec<PathBuf>,
    pub svg: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub content_hash: String,
}

/// Collects files for one output directory and writes the manifest last.
pub(crate) struct BundleWriter {
    dir: PathBuf,
    files: Vec<FileDigest>,
    csv: Vec<PathBuf>,
    svg: Vec<PathBuf>,
}

impl BundleWriter {
    pub fn new(dir: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), csv: Vec::new(), svg: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.files.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        if name.ends_with(".svg") {
            self.svg.push(path.clone());
        } else {
            self.csv.push(path.clone());
        }
        Ok(path)
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C, master_seed: u64) -> Result<OutputBundle, HarnessError> {
        let config = serde_json::to_value(config).expect("config serializes");
        let version = env!("CARGO_PKG_VERSION").to_string();
        let mut hasher = Sha256::new();
        hasher.update(format!("{command}\n{version}\n{master_seed}\n{config}\n"));
        for f in &self.files {
            hasher.update(format!("{}  {}\n", f.sha256, f.path));
        }
        let content_hash = hex(&hasher.finalize());
        let manifest = Manifest {
            tool: "spoisson".into(),
            version,
            command: command.into(),
            master_seed,
            config,
            files: self.files,
            content_hash: content_hash.clone(),
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
        Ok(OutputBundle { dir: self.dir, csv: self.csv, svg: self.svg, manifest: path, content_hash })
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 760.0;
const H: f64 = 440.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-300_f64.max(1e-12 * hi.abs().max(lo.abs())) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// SVG 1.1 line plot, one polyline per series.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x0, x1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y0, y1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let (bx, by) = (H - BOTTOM, W - RIGHT);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{bx}" x2="{by}" y2="{bx}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bx}"/></g>"#);
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{bx}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, bx + 5.0, bx + 18.0, tick_label(xv));
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 5.0, LEFT - 8.0, py + 4.0, tick_label(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));
    let _ = writeln!(s, "</g>");
    for (i, (name, pts)) in series.iter().enumerate() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="{}" fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            escape(name),
            COLORS[i % COLORS.len()],
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Coordinate pairs of every polyline in an SVG written by [`svg_line_plot`].
pub fn polyline_points(svg: &str) -> Vec<usize> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .filter_map(|l| l.split("points=\"").nth(1).map(|rest| rest.split('"').next().unwrap_or("")))
        .map(|pts| pts.split_whitespace().count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn numbers_round_trip_through_csv(xs in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
            let bytes = csv_bytes(&["x".to_string()], xs.iter().map(|x| vec![fmt_num(*x)])).unwrap();
            let mut r = csv::Reader::from_reader(bytes.as_slice());
            let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
            prop_assert_eq!(back.len(), xs.len());
            for (a, b) in back.iter().zip(&xs) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn quoting() {
        let bytes = csv_bytes(&["a".to_string(), "b".to_string()], [vec!["x,y".to_string(), "say \"hi\"".to_string()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn subsampling() {
        assert_eq!(subsample(3, None), vec![0, 1, 2, 3]);
        assert_eq!(subsample(10, Some(20)), (0..=10).collect::<Vec<_>>());
        let idx = subsample(1_000_000, Some(1000));
        assert_eq!(idx.len(), 1000);
        assert_eq!((idx[0], idx[999]), (1000, 1_000_000));
        let idx = subsample(2500, Some(1000));
        assert_eq!((idx.len(), idx[1] - idx[0], *idx.last().unwrap()), (1000, 2, 2000));
    }

    #[test]
    fn plot_counts_points_per_series() {
        let a: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, (i as f64).sin())).collect();
        let b: Vec<(f64, f64)> = (0..3).map(|i| (i as f64, 0.0)).collect();
        let svg = svg_line_plot("t < 1 & y", "t", "y", &[("a".into(), a), ("b".into(), b)]);
        assert_eq!(polyline_points(&svg), vec![7, 3]);
        assert!(svg.contains("t &lt; 1 &amp; y"));
        let flat = svg_line_plot("flat", "t", "y", &[("c".into(), vec![(0.0, 2.0), (1.0, 2.0)])]);
        assert!(!flat.contains("NaN"));
    }

    #[test]
    fn digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
