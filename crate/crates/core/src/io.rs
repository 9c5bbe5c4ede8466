//! Text exports: path CSV, quantile CSV and a log-log SVG plot.
//!
//! Numbers are written with `f64`'s shortest round-trip formatting, so equal
//! values always produce identical bytes.

use crate::euler::EulerPath;
use crate::harness::RateReport;
use crate::oracle::{Provenance, ReferencePath};
use std::fmt::Write as _;
use std::io::{self, Write};

fn write_grid<W: Write>(
    mut w: W,
    header: &str,
    n: u64,
    d: usize,
    values: &[f64],
    until: f64,
) -> io::Result<()> {
    writeln!(w, "# {header}")?;
    let mut cols = String::from("t");
    for i in 1..=d {
        let _ = write!(cols, ",X{i}");
    }
    writeln!(w, "{cols}")?;
    let last = ((until * n as f64) + 1e-9).floor() as usize;
    for (j, row) in values.chunks_exact(d).enumerate().take(last + 1) {
        let mut line = format!("{}", j as f64 / n as f64);
        for v in row {
            let _ = write!(line, ",{v}");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Grid values of an Euler path up to the requested horizon.
pub fn write_path_csv<W: Write>(w: W, path: &EulerPath) -> io::Result<()> {
    let model = path.model();
    let header = format!(
        "model={},n={},seed={}",
        model.label(),
        path.n(),
        path.noise().seed()
    );
    write_grid(w, &header, path.n(), path.d(), path.values(), model.requested_horizon())
}

/// Grid values of a reference path up to `until`.
pub fn write_reference_csv<W: Write>(
    w: W,
    path: &ReferencePath,
    model: &str,
    seed: u64,
    until: f64,
) -> io::Result<()> {
    let kind = match path.provenance() {
        Provenance::ExactSteps => "exact_steps",
        Provenance::FineEuler { .. } => "fine_euler",
    };
    let header = format!("model={model},n={},seed={seed},reference={kind}", path.n_ref());
    let d = path.values().len() / (path.steps() + 1);
    write_grid(w, &header, path.n_ref(), d, path.values(), until)
}

/// One row per level: `n,q25,q50,q75,q99,exceedance@ε…`.
pub fn write_rate_csv<W: Write>(mut w: W, report: &RateReport) -> io::Result<()> {
    writeln!(
        w,
        "# model={},n_ref={},paths={},seed={}",
        report.model, report.n_ref, report.paths, report.seed
    )?;
    let mut cols = String::from("n,q25,q50,q75,q99");
    if let Some(first) = report.levels.first() {
        for (eps, _) in &first.exceedance {
            let _ = write!(cols, ",exceedance@{eps}");
        }
    }
    writeln!(w, "{cols}")?;
    for l in &report.levels {
        let mut line = format!("{},{},{},{},{}", l.n, l.q25, l.q50, l.q75, l.q99);
        for (_, p) in &l.exceedance {
            let _ = write!(line, ",{p}");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Log-log plot of the error quantiles against `n`, with a slope −1/2 guide
/// through the coarsest median.
pub fn rate_plot_svg(report: &RateReport) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let pts: Vec<(f64, [f64; 4])> = report
        .levels
        .iter()
        .map(|l| ((l.n as f64).log10(), [l.q25, l.q50, l.q75, l.q99].map(f64::log10)))
        .collect();
    let finite = |v: &f64| v.is_finite();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().flat_map(|p| p.1).filter(finite).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{PAD}\" y=\"20\" font-size=\"13\">{} sup error vs n (log-log)</text>",
        report.model
    );
    if xs.is_empty() || ys.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        svg,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let names = ["q25", "q50", "q75", "q99"];
    let colors = ["#9ecae1", "#08519c", "#9ecae1", "#e6550d"];
    for (k, (name, color)) in names.iter().zip(colors).enumerate() {
        let line: Vec<String> = pts
            .iter()
            .filter(|p| p.1[k].is_finite())
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1[k])))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"><title>{name}</title></polyline>",
            line.join(" ")
        );
    }
    if let Some(&(x, q)) = pts.first().filter(|p| p.1[1].is_finite()) {
        let y = q[1];
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#555\" stroke-dasharray=\"4 3\"><title>slope -1/2</title></line>",
            px(x),
            py(y),
            px(x1),
            py(y - 0.5 * (x1 - x))
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"11\">n = {} .. {}</text>",
        H - 16.0,
        report.levels[0].n,
        report.levels[report.levels.len() - 1].n
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;
    use crate::euler::integrate;
    use crate::model::builtin;
    use crate::oracle::method_of_steps;

    #[test]
    fn path_csv_layout() {
        let model = builtin("drift_only").unwrap();
        let noise = sample_path(1, 2.0, 4, 9).unwrap();
        let path = integrate(&model, &noise, 4).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# model=drift_only,n=4,seed=9");
        assert_eq!(lines[1], "t,X1");
        assert_eq!(lines[2], "0,1");
        assert_eq!(lines[3], "0.25,1.25");
        assert_eq!(lines.len(), 2 + 9);
        assert_eq!(*lines.last().unwrap(), "2,3");
    }

    #[test]
    fn normalized_horizon_is_cut_at_the_request() {
        let model = builtin("delay_gbm").unwrap().with_horizon(1.3).unwrap();
        let noise = sample_path(1, 1.5, 10, 1).unwrap();
        let path = integrate(&model, &noise, 10).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with("1.3,"));
        assert_eq!(text.lines().count(), 2 + 14);
    }

    #[test]
    fn reference_csv_header() {
        let model = builtin("linear_pure_delay").unwrap();
        let noise = sample_path(1, 2.0, 8, 3).unwrap();
        let r = method_of_steps(&model, &noise).unwrap();
        let mut buf = Vec::new();
        write_reference_csv(&mut buf, &r, "linear_pure_delay", 3, 2.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# model=linear_pure_delay,n=8,seed=3,reference=exact_steps\n"));
        assert_eq!(text.lines().count(), 2 + 17);
    }

    #[test]
    fn rate_csv_and_svg() {
        let ns = [8, 16, 32];
        let errors = vec![vec![0.25, 0.75], vec![0.2, 0.3], vec![0.1, 0.2]];
        let r = RateReport::from_errors("x", Provenance::ExactSteps, &ns, 512, errors, &[0.25, 0.45], 0.4, 7)
            .unwrap();
        let mut buf = Vec::new();
        write_rate_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "n,q25,q50,q75,q99,exceedance@0.25,exceedance@0.45");
        assert!(lines[2].starts_with("8,0.375,0.5,0.625,"));
        assert!(lines[2].ends_with(",0.5,0.5"));
        let svg = rate_plot_svg(&r);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
    }
}
