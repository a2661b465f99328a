//! Presentation of a counterfactual summary: ribbon table, markdown and SVG.

use std::fmt::Write as _;

use rw2cf_core::{CounterfactualSummary, MonthSummary, Significance};

pub const RIBBON_COLUMNS: [&str; 5] = ["month", "observed", "pred_median", "pred_lo", "pred_hi"];

pub fn ribbon_csv(summary: &CounterfactualSummary) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RIBBON_COLUMNS)?;
    for m in &summary.months {
        w.write_record([
            m.month.to_string(),
            m.observed.map(|v| v.to_string()).unwrap_or_default(),
            m.prediction.median.to_string(),
            m.prediction.lower.to_string(),
            m.prediction.upper.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Fixed-point with thousands separators, e.g. `-359,531` or `12.97`.
pub fn format_number(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v.abs());
    let (int, frac) = s.split_once('.').map_or((s.as_str(), None), |(i, f)| (i, Some(f)));
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let negative = v < 0.0 && s.chars().any(|c| c.is_ascii_digit() && c != '0');
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&grouped);
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

fn interval(median: f64, lo: f64, hi: f64, d: usize) -> String {
    format!(
        "{} ({} to {})",
        format_number(median, d),
        format_number(lo, d),
        format_number(hi, d)
    )
}

fn important(summary: &CounterfactualSummary) -> Vec<&MonthSummary> {
    summary
        .months
        .iter()
        .filter(|m| matches!(m.flag, Some(Significance::Decrease | Significance::Increase)))
        .collect()
}

pub fn markdown(summary: &CounterfactualSummary, title: &str, decimals: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {title}\n");
    let (Some(first), Some(last)) = (summary.months.first(), summary.months.last()) else {
        s.push_str("Nothing to report: no months requested.\n");
        return s;
    };
    let _ = writeln!(
        s,
        "Counterfactual for {} to {} ({} months). Intervals are central 95% posterior intervals; \
         excess is observed minus predicted.\n",
        first.month,
        last.month,
        summary.months.len()
    );
    s.push_str("| Month | Observed | Predicted | Excess | Flag |\n");
    s.push_str("|---|---:|---:|---:|---|\n");
    for m in &summary.months {
        let p = &m.prediction;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            m.month,
            m.observed.map_or("n/a".into(), |v| format_number(v, decimals)),
            interval(p.median, p.lower, p.upper, decimals),
            m.excess
                .map_or("n/a".into(), |e| interval(e.median, e.lower, e.upper, decimals)),
            m.flag.map_or("n/a", |f| f.as_str()),
        );
    }

    s.push_str("\n## Statistically important months\n\n");
    let hits = important(summary);
    if hits.is_empty() {
        s.push_str("None: every 95% excess interval contains zero.\n");
    }
    for m in &hits {
        let e = m.excess.expect("flagged months have an excess");
        let _ = writeln!(
            s,
            "- {}: {}, excess {}",
            m.month,
            m.flag.unwrap().as_str(),
            interval(e.median, e.lower, e.upper, decimals)
        );
    }
    let by_excess = |flag: Significance| {
        hits.iter()
            .filter(|m| m.flag == Some(flag))
            .map(|m| (m.month, m.excess.unwrap().median))
            .reduce(|a, b| match flag {
                Significance::Decrease if b.1 < a.1 => b,
                Significance::Increase if b.1 > a.1 => b,
                _ => a,
            })
    };
    if let Some((month, v)) = by_excess(Significance::Decrease) {
        let _ = writeln!(s, "\nLargest decrease: {month} ({})", format_number(v, decimals));
    }
    if let Some((month, v)) = by_excess(Significance::Increase) {
        let _ = writeln!(s, "\nLargest increase: {month} ({})", format_number(v, decimals));
    }
    s
}

/// Minimal static chart: 95% ribbon, predicted median and observed values.
pub fn svg(summary: &CounterfactualSummary, title: &str) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const TOP: f64 = 40.0;
    const B: f64 = 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{L}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let months = &summary.months;
    if months.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let values = months.iter().flat_map(|m| {
        [m.prediction.lower, m.prediction.upper]
            .into_iter()
            .chain(m.observed)
    });
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let n = months.len();
    let x = |i: usize| {
        if n == 1 {
            L + (W - L - R) / 2.0
        } else {
            L + (W - L - R) * i as f64 / (n - 1) as f64
        }
    };
    let y = |v: f64| TOP + (H - TOP - B) * (hi - v) / (hi - lo);

    let mut ribbon: Vec<String> = (0..n)
        .map(|i| format!("{:.2},{:.2}", x(i), y(months[i].prediction.upper)))
        .collect();
    ribbon.extend(
        (0..n)
            .rev()
            .map(|i| format!("{:.2},{:.2}", x(i), y(months[i].prediction.lower))),
    );
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##,
        ribbon.join(" ")
    );
    let median: Vec<String> = (0..n)
        .map(|i| format!("{:.2},{:.2}", x(i), y(months[i].prediction.median)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#3182bd" stroke-width="2"/>"##,
        median.join(" ")
    );
    for (i, m) in months.iter().enumerate() {
        if let Some(o) = m.observed {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="black"/>"#,
                x(i),
                y(o)
            );
        }
    }
    let axis = H - B;
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{axis}" x2="{}" y2="{axis}" stroke="black"/>"#,
        W - R
    );
    let _ = writeln!(s, r#"<line x1="{L}" y1="{TOP}" x2="{L}" y2="{axis}" stroke="black"/>"#);
    for (i, m) in months.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x(i),
            axis + 16.0,
            m.month
        );
    }
    for v in [lo, (lo + hi) / 2.0, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            L - 6.0,
            y(v) + 3.0,
            format_number(v, if hi - lo < 100.0 { 2 } else { 0 })
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
