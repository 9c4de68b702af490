//! SVG diagnostics from event logs: distance and quality per iteration, and
//! fractionality with the temperature and move markers.

use std::fmt::Write;

use crate::engine::Event;
use crate::moves::MoveKind;

const W: f64 = 720.0;
const H: f64 = 260.0;
const PAD: f64 = 48.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Distance and objective quality per iteration.
    DistanceQuality,
    /// Fractionality and alpha per iteration with move markers.
    Anneal,
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Axis { lo, hi }
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.lo) / (self.hi - self.lo) * (H - 2.0 * PAD)
    }
}

fn x_pos(i: usize, n: usize) -> f64 {
    let span = (n.max(2) - 1) as f64;
    PAD + i as f64 / span * (W - 2.0 * PAD)
}

fn polyline(out: &mut String, ys: &[f64], axis: &Axis, colour: &str) {
    let pts: Vec<String> = ys
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, &v)| format!("{:.1},{:.1}", x_pos(i, ys.len()), axis.y(v)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
}

fn frame(out: &mut String, title: &str, left: (&str, &Axis), right: (&str, &Axis)) {
    let _ = writeln!(
        out,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{title}</text>"#, W / 2.0);
    for (label, axis, x, anchor) in [(left.0, left.1, PAD - 4.0, "end"), (right.0, right.1, W - PAD + 4.0, "start")] {
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{:.1}" font-size="10" text-anchor="{anchor}">{:.3}</text>"#,
            axis.y(axis.hi) + 4.0,
            axis.hi
        );
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{:.1}" font-size="10" text-anchor="{anchor}">{:.3}</text>"#,
            axis.y(axis.lo),
            axis.lo
        );
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{:.1}" font-size="11" text-anchor="{anchor}">{label}</text>"#,
            H / 2.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">iteration</text>"#,
        W / 2.0,
        H - 14.0
    );
}

fn marker_colour(kind: Option<MoveKind>) -> &'static str {
    match kind {
        Some(MoveKind::RandomizedRounding) | None => "#1b9e77",
        Some(MoveKind::WeakPerturbation | MoveKind::WeakPerturbationDomain) => "#d95f02",
        Some(MoveKind::StrongPerturbation | MoveKind::StrongPerturbationDomain) => "#7570b3",
    }
}

/// Renders one SVG document for a sequence of events, typically one run.
pub fn render_svg(events: &[Event], kind: PlotKind, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let frac: Vec<f64> = events.iter().map(|e| e.fractionality).collect();
    match kind {
        PlotKind::DistanceQuality => {
            let quality: Vec<f64> = events.iter().map(|e| e.quality).collect();
            let a = Axis::fit(frac.iter().copied());
            let b = Axis::fit(quality.iter().copied());
            frame(&mut out, title, ("distance", &a), ("quality", &b));
            polyline(&mut out, &frac, &a, "#1f77b4");
            polyline(&mut out, &quality, &b, "#ff7f0e");
        }
        PlotKind::Anneal => {
            let alpha: Vec<f64> = events.iter().map(|e| e.alpha).collect();
            let a = Axis::fit(frac.iter().copied());
            let b = Axis::fit(alpha.iter().copied().chain([0.0, 1.0]));
            frame(&mut out, title, ("fractionality", &a), ("alpha", &b));
            polyline(&mut out, &frac, &a, "#1f77b4");
            polyline(&mut out, &alpha, &b, "#999");
            for (i, e) in events.iter().enumerate() {
                let (x, y) = (x_pos(i, events.len()), a.y(e.fractionality));
                let colour = marker_colour(e.move_kind);
                if e.accepted {
                    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{colour}"/>"#);
                } else {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="none" stroke="{colour}"/>"#
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
