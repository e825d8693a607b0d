use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::schema::Settings;
use super::CliError;

/// `<path>.meta`: everything about the run that must stay out of the data
/// file (time stamp, command line, thread count).
pub fn write_meta(data: &Path, s: &Settings, seed: u64, n_traj: usize) -> Result<(), CliError> {
    let mut name = data.as_os_str().to_owned();
    name.push(".meta");
    let path = PathBuf::from(name);
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = String::new();
    let _ = writeln!(text, "cascadeq_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "created_unix={created}");
    let _ = writeln!(text, "command={}", std::env::args().collect::<Vec<_>>().join(" "));
    let _ = writeln!(text, "seed={seed}");
    let _ = writeln!(text, "n_traj={n_traj}");
    for (ns, key, value) in s.entries() {
        let _ = writeln!(text, "{ns}.{key}={value}");
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub struct Series {
    pub name: &'static str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Axes, one polyline per series and a legend.
pub fn write_svg(path: &Path, x_label: &str, series: &[Series]) -> Result<(), CliError> {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 60.0;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let y_top = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(1.0f64, f64::max);
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - y / y_top * (H - 2.0 * M);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{M} {} L{M} {} L{} {}" fill="none" stroke="black"/>"#,
        M,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(svg, r#"<text x="{M}" y="{}" text-anchor="middle">{x0:.4}</text>"#, H - M + 18.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x1:.4}</text>"#, W - M, H - M + 18.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">0</text>"#, M - 6.0, H - M + 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{y_top:.2}</text>"#, M - 6.0, M + 4.0);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        let ly = M + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="black"{dash}/><text x="{}" y="{}">{}</text>"#,
            W - M - 110.0,
            W - M - 80.0,
            W - M - 74.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}
