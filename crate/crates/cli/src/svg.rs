//! Static SVG chart for one smoothed tracklet: the raw per-frame
//! probability as a thin line, the smoothed probability as a thick line,
//! and a confidence band. The band maps mu_hat +- sqrt(var_hat) through
//! the logistic, which lands in [0, 1] by construction; that mapping is
//! recorded in the <desc> element so the file explains itself.

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PLOT_W: f64 = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
const PLOT_H: f64 = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

pub struct Chart<'a> {
    pub tracklet_id: &'a str,
    /// logistic(q) per frame.
    pub raw: &'a [f64],
    /// Smoothed probability p per frame.
    pub smoothed: &'a [f64],
    /// logistic(mu_hat + sqrt(var_hat)) per frame.
    pub band_hi: &'a [f64],
    /// logistic(mu_hat - sqrt(var_hat)) per frame.
    pub band_lo: &'a [f64],
}

fn x_at(t: usize, n: usize) -> f64 {
    let span = (n.saturating_sub(1)).max(1) as f64;
    MARGIN_LEFT + (t as f64) * PLOT_W / span
}

fn y_at(p: f64) -> f64 {
    MARGIN_TOP + (1.0 - p.clamp(0.0, 1.0)) * PLOT_H
}

fn points_of(series: &[f64]) -> String {
    let n = series.len();
    let mut out = String::with_capacity(n * 14);
    for (t, &p) in series.iter().enumerate() {
        if t > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{:.2},{:.2}", x_at(t, n), y_at(p)));
    }
    out
}

/// Band outline: the upper edge left to right, then the lower edge back.
fn band_points(hi: &[f64], lo: &[f64]) -> String {
    let n = hi.len();
    let mut out = String::with_capacity(n * 28);
    for (t, &p) in hi.iter().enumerate() {
        if t > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{:.2},{:.2}", x_at(t, n), y_at(p)));
    }
    for (t, &p) in lo.iter().enumerate().rev() {
        out.push_str(&format!(" {:.2},{:.2}", x_at(t, n), y_at(p)));
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn render(chart: &Chart) -> String {
    let n = chart.raw.len();
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + PLOT_W;
    let y0 = MARGIN_TOP + PLOT_H;
    let y1 = MARGIN_TOP;
    let mid_y = MARGIN_TOP + PLOT_H / 2.0;

    let mut s = String::with_capacity(4096 + n * 64);
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!(
        "  <desc>tracklet {} over {} frames; thin line: raw probability logistic(q); \
         thick line: smoothed probability p; band: logistic(mu_hat +- sqrt(var_hat)), \
         clipped to [0, 1]</desc>\n",
        xml_escape(chart.tracklet_id),
        n
    ));
    s.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));

    s.push_str(&format!(
        "  <polygon id=\"band\" fill=\"#c3d6f2\" stroke=\"none\" points=\"{}\"/>\n",
        band_points(chart.band_hi, chart.band_lo)
    ));
    s.push_str(&format!(
        "  <polyline id=\"raw\" fill=\"none\" stroke=\"#9b9b9b\" stroke-width=\"1\" \
         points=\"{}\"/>\n",
        points_of(chart.raw)
    ));
    s.push_str(&format!(
        "  <polyline id=\"smoothed\" fill=\"none\" stroke=\"#2563c4\" stroke-width=\"2.5\" \
         points=\"{}\"/>\n",
        points_of(chart.smoothed)
    ));

    // Axes with probability ticks at 0, 1/2 and 1, frame ticks at the ends.
    s.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#222222\" \
         stroke-width=\"1\"/>\n"
    ));
    s.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#222222\" \
         stroke-width=\"1\"/>\n"
    ));
    for (value, label) in [(0.0, "0.0"), (0.5, "0.5"), (1.0, "1.0")] {
        let y = y_at(value);
        s.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"#222222\" \
             stroke-width=\"1\"/>\n",
            x0 - 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" \
             fill=\"#222222\">{label}</text>\n",
            x0 - 9.0,
            y + 4.0
        ));
    }
    for t in [0, n.saturating_sub(1)] {
        let x = x_at(t, n);
        s.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#222222\" \
             stroke-width=\"1\"/>\n",
            y0 + 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
             fill=\"#222222\">{t}</text>\n",
            y0 + 20.0
        ));
    }
    s.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" \
         fill=\"#222222\">frame index</text>\n",
        MARGIN_LEFT + PLOT_W / 2.0,
        HEIGHT - 12.0
    ));
    s.push_str(&format!(
        "  <text x=\"18\" y=\"{mid_y:.2}\" font-size=\"13\" text-anchor=\"middle\" \
         fill=\"#222222\" transform=\"rotate(-90 18 {mid_y:.2})\">probability</text>\n"
    ));
    s.push_str("</svg>\n");
    s
}
