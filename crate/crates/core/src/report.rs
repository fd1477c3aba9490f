//! Deterministic rendering of model results as CSV, SVG or text tables.
//!
//! Formatting is pinned: modeled seconds print with two significant digits
//! (dropping the trailing zero below 0.1 s), throughput prints with four
//! decimals. Identical inputs always produce byte-identical output.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::cpi::{KernelCpi, COUNTERS, PM_RUN_CYC};
use crate::error::{Error, Result};
use crate::nmc::{estimate_fft2d_time, EstimateReport, NmcConfig};
use crate::roofline::{MachineSpec, RooflinePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
    TextTable,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            "table" | "text-table" => Ok(ReportFormat::TextTable),
            other => Err(Error::Config(format!(
                "unknown format `{other}` (expected csv, svg or table)"
            ))),
        }
    }
}

/// Round to two significant decimal digits.
pub fn round_sig2(value: f64) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let exponent = floor_log10(value.abs());
    let scale = 10f64.powi(1 - exponent);
    (value * scale).round() / scale
}

/// Execution-time formatting: two significant digits, keeping the trailing
/// zero for values at or above 0.1 s (`0.80`, `0.10`) and dropping it below
/// (`0.05` rather than `0.050`).
pub fn format_seconds_2sig(seconds: f64) -> String {
    let rounded = round_sig2(seconds);
    if rounded <= 0.0 || !rounded.is_finite() {
        return format!("{rounded}");
    }
    let exponent = floor_log10(rounded);
    let decimals = (1 - exponent).max(0) as usize;
    let mut text = format!("{rounded:.decimals$}");
    if rounded < 0.1 && text.ends_with('0') {
        text.pop();
    }
    text
}

/// Throughput formatting: four decimals, TFLOP/s.
pub fn format_tflops(tflops: f64) -> String {
    format!("{tflops:.4}")
}

/// Intensity formatting: four decimals, matching plot coordinates.
pub fn format_ai(ai: f64) -> String {
    format!("{ai:.4}")
}

/// Grid-size label in the k convention: 4096 -> "4k".
pub fn size_label(n: usize) -> String {
    if n >= 1024 && n.is_multiple_of(1024) {
        format!("{}k", n / 1024)
    } else {
        n.to_string()
    }
}

fn floor_log10(value: f64) -> i32 {
    let mut exponent = value.log10().floor() as i32;
    // Guard against log10 landing a hair below an exact decade.
    if 10f64.powi(exponent + 1) <= value {
        exponent += 1;
    } else if 10f64.powi(exponent) > value {
        exponent -= 1;
    }
    exponent
}

/// Modeled execution times for a size x config matrix.
#[derive(Debug, Clone)]
pub struct EstimateGrid {
    pub sizes: Vec<usize>,
    pub configs: Vec<NmcConfig>,
    /// Row-major: `reports[size_idx][config_idx]`.
    pub reports: Vec<Vec<EstimateReport>>,
}

pub fn build_estimate_grid(sizes: &[usize], configs: &[NmcConfig]) -> Result<EstimateGrid> {
    let mut reports = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut row = Vec::with_capacity(configs.len());
        for cfg in configs {
            row.push(estimate_fft2d_time(n, cfg)?);
        }
        reports.push(row);
    }
    Ok(EstimateGrid {
        sizes: sizes.to_vec(),
        configs: configs.to_vec(),
        reports,
    })
}

pub fn render_estimate_grid(grid: &EstimateGrid, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("size,config,bandwidth_gib_s,time_s,bottleneck,min_accelerators\n");
            for (row, &n) in grid.reports.iter().zip(&grid.sizes) {
                for (report, cfg) in row.iter().zip(&grid.configs) {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        size_label(n),
                        cfg.name,
                        cfg.aggregate_bw_gib(),
                        format_seconds_2sig(report.time_s),
                        report.bottleneck,
                        report.min_accelerators_for_overlap,
                    )
                    .unwrap();
                }
            }
            Ok(out.into_bytes())
        }
        ReportFormat::TextTable => {
            let mut headers = vec!["Size".to_string()];
            for cfg in &grid.configs {
                headers.push(format!("{} {} GiB/s", cfg.label(), cfg.aggregate_bw_gib()));
            }
            let mut rows = Vec::with_capacity(grid.sizes.len());
            for (row, &n) in grid.reports.iter().zip(&grid.sizes) {
                let mut cells = vec![size_label(n)];
                for report in row {
                    cells.push(format!("{} s", format_seconds_2sig(report.time_s)));
                }
                rows.push(cells);
            }
            Ok(render_table(&headers, &rows).into_bytes())
        }
        ReportFormat::Svg => Err(Error::UnsupportedFormat {
            format: "svg",
            report: "estimate",
        }),
    }
}

/// Parse a `kernel,ai,perf_tflops[,...]` points file; extra columns (such as
/// the `bound` column this crate emits) are ignored, so emitted CSV parses
/// back.
pub fn parse_roofline_points(text: &str) -> Result<Vec<(String, f64, f64)>> {
    let mut points = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if !line.starts_with("kernel,ai,perf_tflops") {
                return Err(Error::ParseLine {
                    line: line_no,
                    message: format!("expected header `kernel,ai,perf_tflops[,bound]`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::ParseLine {
                line: line_no,
                message: format!("expected at least 3 fields, got {}", fields.len()),
            });
        }
        let ai: f64 = fields[1].parse().map_err(|_| Error::ParseLine {
            line: line_no,
            message: format!("invalid intensity `{}`", fields[1]),
        })?;
        let perf: f64 = fields[2].parse().map_err(|_| Error::ParseLine {
            line: line_no,
            message: format!("invalid performance `{}`", fields[2]),
        })?;
        points.push((fields[0].to_string(), ai, perf));
    }
    Ok(points)
}

pub fn render_roofline(
    machine: &MachineSpec,
    points: &[RooflinePoint],
    format: ReportFormat,
) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("kernel,ai,perf_tflops,bound\n");
            for p in points {
                writeln!(
                    out,
                    "{},{},{},{}",
                    p.kernel,
                    format_ai(p.ai),
                    format_tflops(p.perf_tflops),
                    p.bound
                )
                .unwrap();
            }
            Ok(out.into_bytes())
        }
        ReportFormat::TextTable => {
            let headers = vec![
                "Kernel".to_string(),
                "AI (flop/byte)".to_string(),
                "Perf (TFLOP/s)".to_string(),
                "Ceiling (TFLOP/s)".to_string(),
                "Bound".to_string(),
            ];
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    vec![
                        p.kernel.clone(),
                        format_ai(p.ai),
                        format_tflops(p.perf_tflops),
                        format_tflops(p.ceiling_tflops),
                        p.bound.to_string(),
                    ]
                })
                .collect();
            let mut out = format!(
                "{}: peak {} TFLOP/s, bandwidth {} GB/s, ridge {} flop/byte\n",
                machine.name,
                format_tflops(machine.peak_tflops()?),
                machine.peak_bw_gbs,
                format_ai(machine.ridge_flop_per_byte()?),
            );
            out.push_str(&render_table(&headers, &rows));
            Ok(out.into_bytes())
        }
        ReportFormat::Svg => roofline_svg(machine, points).map(String::into_bytes),
    }
}

pub fn render_cpi(rows: &[KernelCpi], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("kernel,counter,percent\n");
            for row in rows {
                for counter in COUNTERS.iter().filter(|&&c| c != PM_RUN_CYC) {
                    if let Some(pct) = row.percents.get(*counter) {
                        writeln!(out, "{},{},{}", row.kernel, counter, pct).unwrap();
                    }
                }
            }
            Ok(out.into_bytes())
        }
        ReportFormat::TextTable => {
            let mut headers = vec!["Kernel".to_string()];
            for counter in COUNTERS.iter().filter(|&&c| c != PM_RUN_CYC) {
                headers.push(counter.trim_start_matches("PM_").to_string());
            }
            headers.push("Class".to_string());
            let rows_out: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    let mut cells = vec![row.kernel.clone()];
                    for counter in COUNTERS.iter().filter(|&&c| c != PM_RUN_CYC) {
                        cells.push(match row.percents.get(*counter) {
                            Some(pct) => format!("{pct:.0}%"),
                            None => "-".to_string(),
                        });
                    }
                    cells.push(row.boundness.to_string());
                    cells
                })
                .collect();
            Ok(render_table(&headers, &rows_out).into_bytes())
        }
        ReportFormat::Svg => Err(Error::UnsupportedFormat {
            format: "svg",
            report: "cpi",
        }),
    }
}

fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let emit_row = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            for _ in cell.len()..widths[i] {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    emit_row(&mut out, headers);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    emit_row(&mut out, &rule);
    for row in rows {
        emit_row(&mut out, row);
    }
    out
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

const SVG_W: f64 = 860.0;
const SVG_H: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Log-log roofline plot: bandwidth slope up to the ridge, flat compute
/// ceiling beyond it, dashed ridge marker, one labelled dot per point.
fn roofline_svg(machine: &MachineSpec, points: &[RooflinePoint]) -> Result<String> {
    let peak = machine.peak_tflops()?;
    let ridge = machine.ridge_flop_per_byte()?;
    let bw_tb = machine.peak_bw_tbytes();

    let mut x_lo = ridge / 10.0;
    let mut x_hi = ridge * 10.0;
    let mut y_lo = peak / 1000.0;
    let mut y_hi = peak * 3.0;
    for p in points {
        x_lo = x_lo.min(p.ai / 2.0);
        x_hi = x_hi.max(p.ai * 2.0);
        y_lo = y_lo.min(p.perf_tflops / 2.0);
        y_hi = y_hi.max(p.perf_tflops * 2.0);
    }
    let x_lo = 10f64.powf(x_lo.log10().floor());
    let x_hi = 10f64.powf(x_hi.log10().ceil());
    let y_lo = 10f64.powf(y_lo.log10().floor());
    let y_hi = 10f64.powf(y_hi.log10().ceil());

    let px = |x: f64| {
        MARGIN_L + (x.log10() - x_lo.log10()) / (x_hi.log10() - x_lo.log10()) * (SVG_W - MARGIN_L - MARGIN_R)
    };
    let py = |y: f64| {
        SVG_H - MARGIN_B
            - (y.log10() - y_lo.log10()) / (y_hi.log10() - y_lo.log10()) * (SVG_H - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">{} roofline</text>",
        MARGIN_L, machine.name
    )
    .unwrap();

    // Decade grid lines with labels.
    let mut x = x_lo;
    while x <= x_hi * 1.0001 {
        writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            px(x),
            py(y_lo),
            px(x),
            py(y_hi)
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            px(x),
            SVG_H - MARGIN_B + 16.0,
            format_decade(x)
        )
        .unwrap();
        x *= 10.0;
    }
    let mut y = y_lo;
    while y <= y_hi * 1.0001 {
        writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            px(x_lo),
            py(y),
            px(x_hi),
            py(y)
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 6.0,
            py(y) + 4.0,
            format_decade(y)
        )
        .unwrap();
        y *= 10.0;
    }
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">flop/byte</text>",
        (MARGIN_L + SVG_W - MARGIN_R) / 2.0,
        SVG_H - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">TFLOP/s</text>",
        (MARGIN_T + SVG_H - MARGIN_B) / 2.0,
        (MARGIN_T + SVG_H - MARGIN_B) / 2.0
    )
    .unwrap();

    // Ceilings: slope from the left edge to the ridge, then flat peak.
    let slope_start_x = x_lo.max(y_lo / bw_tb);
    writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\"/>",
        px(slope_start_x),
        py(slope_start_x * bw_tb),
        px(ridge),
        py(peak),
        px(x_hi),
        py(peak)
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#1f4e9c\" stroke-dasharray=\"6,4\"/>",
        px(ridge),
        py(y_lo),
        px(ridge),
        py(peak)
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">ridge {}</text>",
        px(ridge) + 5.0,
        py(y_lo) - 6.0,
        format_ai(ridge)
    )
    .unwrap();

    for p in points {
        let color = match p.bound {
            crate::roofline::Bound::Memory => "#c03030",
            crate::roofline::Bound::Compute => "#2e7d32",
        };
        writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{}\"/>",
            px(p.ai),
            py(p.perf_tflops),
            color
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            px(p.ai) + 7.0,
            py(p.perf_tflops) - 7.0,
            p.kernel
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_decade(value: f64) -> String {
    if value >= 1.0 {
        format!("{value:.0}")
    } else {
        format!("{value}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpi::{analyze_samples, BoundnessThresholds};
    use crate::ingest::{parse_counter_dump, SpecFile};
    use crate::roofline::roofline_classify;

    #[test]
    fn seconds_formatting_matches_pinned_precision() {
        let cases = [
            (1.0 / 30.0, "0.033"),
            (1.0 / 60.0, "0.017"),
            (0.05, "0.05"),
            (0.0015625, "0.0016"),
            (2.0 / 15.0, "0.13"),
            (1.0 / 15.0, "0.067"),
            (0.2, "0.20"),
            (0.00625, "0.0063"),
            (8.0 / 15.0, "0.53"),
            (4.0 / 15.0, "0.27"),
            (0.8, "0.80"),
            (0.025, "0.025"),
            (32.0 / 15.0, "2.1"),
            (16.0 / 15.0, "1.1"),
            (3.2, "3.2"),
            (0.1, "0.10"),
        ];
        for (value, expected) in cases {
            assert_eq!(format_seconds_2sig(value), expected, "value {value}");
        }
    }

    #[test]
    fn size_labels() {
        assert_eq!(size_label(4096), "4k");
        assert_eq!(size_label(32768), "32k");
        assert_eq!(size_label(100), "100");
    }

    #[test]
    fn estimate_table_regenerates_reference_cells() {
        let spec = SpecFile::builtin();
        let grid = build_estimate_grid(&[4096, 8192, 16384, 32768], &spec.nmc_configs).unwrap();
        let table =
            String::from_utf8(render_estimate_grid(&grid, ReportFormat::TextTable).unwrap())
                .unwrap();
        let expected = [
            ["0.033 s", "0.017 s", "0.05 s", "0.0016 s"],
            ["0.13 s", "0.067 s", "0.20 s", "0.0063 s"],
            ["0.53 s", "0.27 s", "0.80 s", "0.025 s"],
            ["2.1 s", "1.1 s", "3.2 s", "0.10 s"],
        ];
        for row in expected.iter().flatten() {
            assert!(table.contains(row), "missing `{row}` in\n{table}");
        }
        assert!(table.contains("1 DDR4 DIMM 15 GiB/s"));
        assert!(table.contains("32 HBM2 channels 320 GiB/s"));
    }

    #[test]
    fn empty_results_render_header_only_csv() {
        let grid = build_estimate_grid(&[], &[]).unwrap();
        let csv = render_estimate_grid(&grid, ReportFormat::Csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "size,config,bandwidth_gib_s,time_s,bottleneck,min_accelerators\n"
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = SpecFile::builtin();
        let grid = build_estimate_grid(&[4096, 8192], &spec.nmc_configs).unwrap();
        let one = render_estimate_grid(&grid, ReportFormat::Csv).unwrap();
        let two = render_estimate_grid(&grid, ReportFormat::Csv).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn roofline_csv_round_trips() {
        let spec = SpecFile::builtin();
        let machine = spec.machine("ad9h7").unwrap();
        let points = vec![
            roofline_classify("fft-4k", 16.1061, 1.2583, machine).unwrap(),
            roofline_classify("fft-32k", 20.1327, 1.6106, machine).unwrap(),
        ];
        let csv = render_roofline(machine, &points, ReportFormat::Csv).unwrap();
        let parsed = parse_roofline_points(&String::from_utf8(csv).unwrap()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, "fft-4k");
        assert!((parsed[0].1 - 16.1061).abs() < 1e-9);
        assert!((parsed[1].2 - 1.6106).abs() < 1e-9);
    }

    #[test]
    fn roofline_svg_contains_ceilings_and_points() {
        let spec = SpecFile::builtin();
        let machine = spec.machine("ad9h7").unwrap();
        let points = vec![roofline_classify("fft-4k", 16.1061, 1.2583, machine).unwrap()];
        let svg =
            String::from_utf8(render_roofline(machine, &points, ReportFormat::Svg).unwrap())
                .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray")); // ridge marker
        assert!(svg.contains("fft-4k"));
        assert!(svg.contains("ridge 7.9891"));
    }

    #[test]
    fn svg_is_refused_for_tabular_reports() {
        let grid = build_estimate_grid(&[], &[]).unwrap();
        assert!(matches!(
            render_estimate_grid(&grid, ReportFormat::Svg),
            Err(Error::UnsupportedFormat { .. })
        ));
    }

    #[test]
    fn cpi_table_echoes_whole_percentages() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/microbench_counters.csv"
        ))
        .unwrap();
        let samples = parse_counter_dump(&text).unwrap();
        let rows = analyze_samples(&samples, &BoundnessThresholds::default());
        let table = String::from_utf8(render_cpi(&rows, ReportFormat::TextTable).unwrap()).unwrap();
        assert!(table.contains("70%"));
        assert!(table.contains("67%"));
        assert!(table.contains("memory_bound"));
        assert!(table.contains("compute_bound"));
    }
}
