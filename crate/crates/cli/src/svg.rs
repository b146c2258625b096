//! Static SVG phase portraits in the first-mode plane.
//!
//! Coordinates are printed with a fixed number of decimals so the output is
//! byte-stable for a given input.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 56.0;

pub struct Portrait {
    title: String,
    bounds: [f64; 4],
    layers: Vec<String>,
}

impl Portrait {
    /// Frames every point of `extent` with a 10% margin.
    pub fn new(title: &str, extent: &[(f64, f64)]) -> Self {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for &(x, y) in extent {
            b[0] = b[0].min(x);
            b[1] = b[1].max(x);
            b[2] = b[2].min(y);
            b[3] = b[3].max(y);
        }
        if !b.iter().all(|v| v.is_finite()) {
            b = [-1.0, 1.0, -1.0, 1.0];
        }
        for k in [0, 2] {
            let span = (b[k + 1] - b[k]).max(1e-3);
            let mid = 0.5 * (b[k] + b[k + 1]);
            b[k] = mid - 0.55 * span;
            b[k + 1] = mid + 0.55 * span;
        }
        Self {
            title: title.to_string(),
            bounds: b,
            layers: Vec::new(),
        }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let [x0, x1, y0, y1] = self.bounds;
        (M + (x - x0) / (x1 - x0) * (W - 2.0 * M), H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M))
    }

    pub fn curve(&mut self, pts: &[(f64, f64)], colour: &str, width: f64, class: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (k, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
        }
        self.layers.push(format!(
            "<path class=\"{class}\" d=\"{d}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"{width}\"/>"
        ));
    }

    pub fn point(&mut self, p: (f64, f64), colour: &str, label: &str) {
        let (x, y) = self.map(p);
        self.layers.push(format!(
            "<circle class=\"equilibrium\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{colour}\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{label}</text>",
            x + 7.0,
            y - 7.0
        ));
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (colour, text)) in entries.iter().enumerate() {
            let y = M + 16.0 * k as f64;
            self.layers.push(format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{text}</text>",
                W - M - 150.0,
                W - M - 130.0,
                W - M - 124.0,
                y + 4.0
            ));
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
        );
        let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(s, "<text x=\"{M}\" y=\"24\" font-size=\"14\">{}</text>", self.title);
        let [x0, x1, y0, y1] = self.bounds;
        let _ = writeln!(
            s,
            "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            W - 2.0 * M,
            H - 2.0 * M
        );
        // zero axes when they are in frame
        if x0 < 0.0 && x1 > 0.0 {
            let (x, _) = self.map((0.0, 0.0));
            let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{M}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ccc\"/>", H - M);
        }
        if y0 < 0.0 && y1 > 0.0 {
            let (_, y) = self.map((0.0, 0.0));
            let _ = writeln!(s, "<line x1=\"{M}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ccc\"/>", W - M);
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">&lt;v, phi1&gt;  [{x0:.3}, {x1:.3}]</text>",
            W / 2.0,
            H - M / 2.0 + 8.0
        );
        let _ = writeln!(
            s,
            "<text x=\"16\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">&lt;v_t, phi1&gt;  [{y0:.3}, {y1:.3}]</text>",
            H / 2.0,
            H / 2.0
        );
        for l in &self.layers {
            let _ = writeln!(s, "{l}");
        }
        s.push_str("</svg>\n");
        s
    }
}
