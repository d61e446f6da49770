//! File emitters: CSV with LF endings, pretty JSON, and static SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Header row then one row per record; an empty record list gives a header-only file.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    ensure_parent(path)?;
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip decimal form, so equal data gives equal bytes.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = to_json(value);
    text.push('\n');
    write_text(path, &text)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data always serializes")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

/// Linear map from data bounds to the plot frame.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite()) {
                (0.0, 1.0)
            } else if hi - lo > 0.0 {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for i in 0..=5 {
        let a = i as f64 / 5.0;
        let xv = f.x.0 + a * (f.x.1 - f.x.0);
        let yv = f.y.0 + a * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/><text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            y0 + 5.0,
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" stroke=\"black\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Scatter of `(x, y, weight)` with marker area proportional to weight in `[0, 1]`.
pub fn scatter_svg(points: &[(f64, f64, f64)], title: &str, xlabel: &str, ylabel: &str) -> String {
    let f = Frame::new(
        bounds(points.iter().map(|p| p.0)),
        bounds(points.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    svg_open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for &(x, y, w) in points {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let w = w.clamp(0.0, 1.0);
        let r = 0.5 + 3.0 * w.sqrt();
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\" fill=\"#1f4e9c\" fill-opacity=\"{:.3}\"/>",
            f.px(x),
            f.py(y),
            0.15 + 0.85 * w
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Row-major `rows x cols` grid; row `i` sits at `y_i`, column `j` at `x_j`.
pub struct Heatmap<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub values: &'a [f64],
    /// Colour scale limits.
    pub range: (f64, f64),
}

/// Heat map with optional polylines drawn on top, downsampled by max pooling
/// to at most `max_cells` per axis.
pub fn heatmap_svg(
    map: &Heatmap,
    overlays: &[Vec<[f64; 2]>],
    title: &str,
    xlabel: &str,
    ylabel: &str,
    max_cells: usize,
) -> String {
    let (nx, ny) = (map.xs.len(), map.ys.len());
    let f = Frame::new(bounds(map.xs.iter().copied()), bounds(map.ys.iter().copied()));
    let mut out = String::new();
    svg_open(&mut out, title);
    if nx > 0 && ny > 0 {
        let bx = nx.div_ceil(max_cells.max(1));
        let by = ny.div_ceil(max_cells.max(1));
        let (lo, hi) = map.range;
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edge = |v: &[f64], i: usize| -> (f64, f64) {
            let n = v.len();
            let left = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
            let right = if i + 1 >= n { v[n - 1] } else { 0.5 * (v[i] + v[i + 1]) };
            (left, right)
        };
        for bi in (0..ny).step_by(by) {
            for bj in (0..nx).step_by(bx) {
                let mut v = f64::NEG_INFINITY;
                for i in bi..(bi + by).min(ny) {
                    for j in bj..(bj + bx).min(nx) {
                        v = v.max(map.values[i * nx + j]);
                    }
                }
                if !v.is_finite() {
                    continue;
                }
                let (xl, _) = edge(map.xs, bj);
                let (_, xr) = edge(map.xs, (bj + bx).min(nx) - 1);
                let (yl, _) = edge(map.ys, bi);
                let (_, yr) = edge(map.ys, (bi + by).min(ny) - 1);
                let a = ((v - lo) / span).clamp(0.0, 1.0);
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    f.px(xl),
                    f.py(yr),
                    (f.px(xr) - f.px(xl)).max(0.5),
                    (f.py(yl) - f.py(yr)).max(0.5),
                    colour(a)
                );
            }
        }
    }
    for line in overlays {
        if line.len() < 2 {
            continue;
        }
        let pts: Vec<String> = line
            .iter()
            .map(|p| format!("{:.2},{:.2}", f.px(p[0]), f.py(p[1])))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"4 2\"/>",
            pts.join(" ")
        );
    }
    axes(&mut out, &f, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}

/// White to dark blue.
fn colour(a: f64) -> String {
    let lerp = |from: f64, to: f64| (from + a * (to - from)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        write_csv(&p, &["q", "omega"], Vec::<Vec<String>>::new()).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "q,omega\n");
    }

    #[test]
    fn csv_rows_use_lf() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.csv");
        write_csv(&p, &["a", "b"], vec![vec![num(0.5), num(-2.0)]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n0.5,-2\n");
    }

    #[test]
    fn svg_is_static() {
        let s = scatter_svg(&[(0.0, 1.0, 1.0), (1.0, 2.0, 0.1)], "t", "x", "y");
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("<script"));
        assert_eq!(s.matches("<circle").count(), 2);
        let values = [0.0, 1.0, 2.0, 3.0];
        let h = heatmap_svg(
            &Heatmap {
                xs: &[0.0, 1.0],
                ys: &[0.0, 1.0],
                values: &values,
                range: (0.0, 3.0),
            },
            &[vec![[0.0, 0.0], [1.0, 1.0]]],
            "h",
            "x",
            "y",
            100,
        );
        assert_eq!(h.matches("<rect x=").count(), 5);
        assert!(h.contains("<polyline"));
    }

    #[test]
    fn ticks_trim() {
        assert_eq!(tick(2.0), "2");
        assert_eq!(tick(0.25), "0.25");
        assert_eq!(tick(-0.0), "0");
    }
}
