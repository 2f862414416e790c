use std::fmt::Write;

use legalex_core::stats::DisabilityDistribution;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

/// Bar chart of histogram fractions as a standalone SVG document.
pub fn histogram_svg(d: &DisabilityDistribution) -> String {
    let h = &d.histogram;
    let max = h.fractions.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let bar_w = plot_w / h.counts.len() as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">Disability percentage per ruling (n = {})</text>"#,
        WIDTH / 2.0,
        d.n
    );
    for (i, f) in h.fractions.iter().enumerate() {
        let bh = plot_h * f / max;
        let x = MARGIN + i as f64 * bar_w;
        let y = MARGIN + plot_h - bh;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{bh:.1}" fill="#4a7ab5"><title>{}-{}: {}</title></rect>"##,
            bar_w - 2.0,
            h.bin_edges[i],
            h.bin_edges[i + 1],
            h.counts[i]
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}">{}</text>"#,
            MARGIN + plot_h + 14.0,
            h.bin_edges[i]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
        MARGIN + plot_w,
        MARGIN + plot_h + 14.0,
        h.bin_edges[h.bin_edges.len() - 1]
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        MARGIN + plot_h,
        MARGIN + plot_w
    );
    s.push_str("</svg>\n");
    s
}
