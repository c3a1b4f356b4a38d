//! CSV and SVG emitters and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::counts::CountRecord;
use crate::povm::PovmElement;
use crate::sweep::{BlochRow, SweepResult};

pub const SWEEP_HEADER: &str = "length_m,jitter_s,method,f_min,d_max,worst_state,seconds";
pub const BLOCH_HEADER: &str = "t_seconds,x,y,z,mu";
pub const COUNTS_HEADER: &str = "t_seconds,n_expected,n_measured";

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Sweep table. The `seconds` column is left empty unless `timing` is set,
/// which keeps the file byte-reproducible.
pub fn sweep_csv(rows: &[SweepResult], timing: bool) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let secs = if timing { fmt_sig(r.wall_time) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_sig(r.length),
            fmt_sig(r.jitter),
            r.method,
            fmt_sig(r.f_min),
            fmt_sig(r.d_max),
            quote(&r.worst_state),
            secs
        );
    }
    out
}

pub fn bloch_csv(rows: &[BlochRow]) -> String {
    let mut out = String::from(BLOCH_HEADER);
    out.push('\n');
    for r in rows {
        let p = r.point;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(r.time),
            fmt_sig(p.x),
            fmt_sig(p.y),
            fmt_sig(p.z),
            fmt_sig(p.mu)
        );
    }
    out
}

pub fn counts_csv(records: &[CountRecord]) -> String {
    let mut out = String::from(COUNTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{}", fmt_sig(r.time), fmt_sig(r.expected), fmt_sig(r.measured));
    }
    out
}

/// One row per element: time, weight, then every matrix entry as `re,im`.
pub fn povm_csv(elements: &[PovmElement]) -> String {
    let dim = elements.first().map(|e| e.matrix.dim()).unwrap_or(0);
    let mut out = String::from("t_seconds,mu");
    for j in 0..dim {
        for k in 0..dim {
            let _ = write!(out, ",m{j}{k}_re,m{j}{k}_im");
        }
    }
    out.push('\n');
    for e in elements {
        let _ = write!(out, "{},{}", fmt_sig(e.time), fmt_sig(e.weight));
        for z in e.matrix.as_slice() {
            let _ = write!(out, ",{},{}", fmt_sig(z.re), fmt_sig(z.im));
        }
        out.push('\n');
    }
    out
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// A named polyline for [`line_plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#e5ae38", "#2ca02c", "#9467bd", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

/// Minimal SVG line chart. With `log_x` the x axis is log10-scaled and
/// nonpositive x values are dropped. The y axis spans `[0, 1]`.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .filter(|&x| !log_x || x > 0.0)
        .map(tx)
        .collect();
    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (tx(x) - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_T + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_L + plot_w / 2.0, escape(title));
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="black"/>"#,
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            MARGIN_L - 4.0,
            py(y),
            MARGIN_L,
            py(y),
            MARGIN_L - 7.0,
            py(y) + 4.0,
            y
        );
    }
    let ticks = 5;
    for i in 0..=ticks {
        let t = x0 + (x1 - x0) * i as f64 / ticks as f64;
        let value = if log_x { 10f64.powf(t) } else { t };
        let xpix = MARGIN_L + (t - x0) / (x1 - x0) * plot_w;
        let _ = writeln!(
            s,
            r#"<line x1="{xpix:.2}" y1="{:.2}" x2="{xpix:.2}" y2="{:.2}" stroke="black"/><text x="{xpix:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 4.0,
            MARGIN_T + plot_h + 18.0,
            short_number(value)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        if log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| !log_x || p.0 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// x–z projection of qubit operators inside the unit disk; marker opacity
/// is `mu / max mu`.
pub fn bloch_scatter(title: &str, rows: &[BlochRow]) -> String {
    let size = 400.0;
    let c = size / 2.0;
    let r = size / 2.0 - 40.0;
    let mu_max = rows.iter().map(|r| r.point.mu).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{c}" y="18" text-anchor="middle" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{c}" x2="{:.2}" y2="{c}" stroke="#999"/><line x1="{c}" y1="{:.2}" x2="{c}" y2="{:.2}" stroke="#999"/>"##,
        c - r,
        c + r,
        c - r,
        c + r
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">x</text><text x="{:.2}" y="{:.2}">z</text>"#, c + r + 6.0, c + 4.0, c + 6.0, c - r - 6.0);
    for row in rows {
        let p = row.point;
        let opacity = if mu_max > 0.0 { p.mu / mu_max } else { 0.0 };
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#d62728" fill-opacity="{:.4}" stroke="#d62728" stroke-width="0.5"/>"##,
            c + p.x * r,
            c - p.z * r,
            opacity
        );
    }
    s.push_str("</svg>\n");
    s
}

fn short_number(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Method;
    use crate::povm::BlochPoint;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(200.0), "200");
        assert_eq!(fmt_sig(1e-12), "1e-12");
        assert_eq!(fmt_sig(4e-12), "4e-12");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_sig(1e4), "10000");
        assert_eq!(fmt_sig(0.000123), "0.000123");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
    }

    #[test]
    fn sweep_csv_layout() {
        let row = SweepResult {
            length: 200.0,
            jitter: 1e-12,
            method: Method::Ls,
            f_min: 0.75,
            d_max: 0.25,
            worst_state: "(r=1,theta=0,phi=0)".into(),
            worst_index: 0,
            nonconverged: 0,
            wall_time: 1.25,
        };
        let csv = sweep_csv(std::slice::from_ref(&row), false);
        assert_eq!(
            csv,
            "length_m,jitter_s,method,f_min,d_max,worst_state,seconds\n200,1e-12,LS,0.75,0.25,\"(r=1,theta=0,phi=0)\",\n"
        );
        assert!(sweep_csv(&[row], true).ends_with(",1.25\n"));
    }

    #[test]
    fn bloch_csv_layout() {
        let rows = [BlochRow {
            time: 2e-12,
            point: BlochPoint { x: 1.0, y: 0.0, z: 0.0, mu: 3.5e11 },
        }];
        assert_eq!(bloch_csv(&rows), "t_seconds,x,y,z,mu\n2e-12,1,0,0,350000000000\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        let leftovers = fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn svg_documents() {
        let series = vec![Series {
            label: "LS, 1 ps".into(),
            points: vec![(100.0, 0.5), (1000.0, 0.9), (10000.0, 0.99)],
        }];
        let svg = line_plot("F_min", "L [m]", "F_min", &series, true);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("log scale"));
        let rows = [BlochRow {
            time: 0.0,
            point: BlochPoint { x: 0.0, y: 0.0, z: 1.0, mu: 1.0 },
        }];
        let svg = bloch_scatter("L = 0", &rows);
        assert!(svg.contains(r#"fill-opacity="1.0000""#));
    }
}
