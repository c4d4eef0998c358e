//! Deterministic SVG drawings of configurations and exploration records.
//!
//! Output depends only on the input: no timestamps, hash-map iteration or
//! locale, and every coordinate is printed with one decimal.

use std::fmt::Write;
use std::path::Path;

use crate::explore::ExplorationRecord;
use crate::lattice::{Dir, DirectedDualEdge, Window};
use crate::models::Configuration;
use crate::Error;

pub const MAX_RENDER_RADIUS: u32 = 128;

const UNIT: f64 = 24.0;
const MARGIN: f64 = 16.0;
const ARROW: f64 = 0.78;
const CLUSTER_FILLS: [&str; 6] = ["#8ecae6", "#ffb703", "#90be6d", "#f28482", "#b8a1e3", "#cdb4a0"];

pub enum RenderTarget<'a> {
    Configuration(&'a Configuration),
    /// The configuration is optional; without it only revealed dual edges
    /// and the primal edges they certify open are drawn.
    Exploration { record: &'a ExplorationRecord, config: Option<&'a Configuration> },
}

struct Canvas {
    window: Window,
    out: String,
}

impl Canvas {
    fn new(window: Window) -> Result<Self, Error> {
        if window.dim != 2 {
            return Err(Error::Unsupported("only planar windows render".into()));
        }
        if window.radius > MAX_RENDER_RADIUS {
            return Err(Error::Guard(format!("render radius {} exceeds {MAX_RENDER_RADIUS}", window.radius)));
        }
        let size = 2.0 * MARGIN + UNIT * (window.side() as f64);
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.1}" height="{size:.1}" viewBox="0 0 {size:.1} {size:.1}">"#
        )
        .unwrap();
        out.push_str(concat!(
            "<defs>\n",
            r#"<marker id="head" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="5" markerHeight="5" orient="auto-start-reverse">"#,
            r#"<path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker>"#,
            "\n</defs>\n",
            r##"<rect width="100%" height="100%" fill="#ffffff"/>"##,
            "\n",
        ));
        Ok(Canvas { window, out })
    }

    /// Pixel position of a point in primal coordinates.
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let r = self.window.radius as f64;
        let (cx, cy) = (self.window.center[0] as f64, self.window.center[1] as f64);
        (MARGIN + UNIT * (x - cx + r + 0.5), MARGIN + UNIT * (r - (y - cy) + 0.5))
    }

    fn arrow(&mut self, from: (f64, f64), dir: Dir, class: &str, extra: &str) {
        let (dx, dy) = dir.delta();
        let shrink = (1.0 - ARROW) / 2.0;
        let a = (from.0 + shrink * dx as f64, from.1 + shrink * dy as f64);
        let b = (from.0 + (1.0 - shrink) * dx as f64, from.1 + (1.0 - shrink) * dy as f64);
        let (x1, y1) = self.px(a.0, a.1);
        let (x2, y2) = self.px(b.0, b.1);
        writeln!(
            self.out,
            r#"<line class="{class}" x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}"{extra} marker-end="url(#head)"/>"#
        )
        .unwrap();
    }

    fn primal_edges(&mut self, config: &Configuration) {
        self.out.push_str(r##"<g id="primal" stroke="#9a9a9a" stroke-width="1.5">"##);
        self.out.push('\n');
        for i in 0..config.window.len() {
            let (x, y) = config.window.point2(i);
            let o = config.outcomes[i];
            writeln!(self.out, r#"<g class="vertex" data-x="{x}" data-y="{y}" data-mask="{}">"#, o.mask_string()).unwrap();
            for d in Dir::ALL {
                if o.has_dir(d) {
                    self.arrow((x as f64, y as f64), d, "primal", "");
                }
            }
            self.out.push_str("</g>\n");
        }
        self.out.push_str("</g>\n");
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn dual_point(e: DirectedDualEdge) -> (f64, f64) {
    (e.tail.a as f64 + 0.5, e.tail.b as f64 + 0.5)
}

pub fn render_svg(target: &RenderTarget<'_>) -> Result<String, Error> {
    match *target {
        RenderTarget::Configuration(config) => {
            let mut c = Canvas::new(config.window)?;
            c.primal_edges(config);
            Ok(c.finish())
        }
        RenderTarget::Exploration { record, config } => render_exploration(record, config),
    }
}

fn render_exploration(record: &ExplorationRecord, config: Option<&Configuration>) -> Result<String, Error> {
    let mut c = Canvas::new(record.window)?;

    c.out.push_str("<g id=\"clusters\" fill-opacity=\"0.35\">\n");
    for (k, cluster) in record.clusters.iter().enumerate() {
        let fill = CLUSTER_FILLS[k % CLUSTER_FILLS.len()];
        for v in cluster {
            let (x, y) = c.px(v.a as f64 + 0.5, v.b as f64 + 0.5);
            let h = UNIT * 0.45;
            writeln!(
                c.out,
                r#"<rect class="cluster" data-k="{}" x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}"/>"#,
                k + 1,
                x - h,
                y - h,
                2.0 * h,
                2.0 * h
            )
            .unwrap();
        }
    }
    c.out.push_str("</g>\n");

    match config {
        Some(config) => c.primal_edges(config),
        None => {
            // A dual edge revealed closed certifies its primal edge open.
            c.out.push_str(r##"<g id="primal" stroke="#9a9a9a" stroke-width="1.5">"##);
            c.out.push('\n');
            for s in record.steps.iter().filter(|s| !s.open) {
                let p = crate::lattice::dual_to_primal(s.edge);
                c.arrow((p.tail.x as f64, p.tail.y as f64), p.dir, "primal", "");
            }
            c.out.push_str("</g>\n");
        }
    }

    let pivotal: std::collections::BTreeSet<usize> = record.pivotal_times.iter().copied().collect();
    c.out.push_str("<g id=\"dual\" stroke-width=\"2.2\">\n");
    for s in &record.steps {
        let (class, extra) = match (s.open, pivotal.contains(&s.n)) {
            (true, false) => ("dual-open", r##" stroke="#1d4ed8""##),
            (false, false) => ("dual-closed", r##" stroke="#dc2626" stroke-dasharray="4 3""##),
            (true, true) => ("dual-open pivotal", r##" stroke="#f59e0b" stroke-width="4""##),
            (false, true) => ("dual-closed pivotal", r##" stroke="#f59e0b" stroke-width="4" stroke-dasharray="4 3""##),
        };
        let extra = format!(r#"{extra} data-step="{}""#, s.n);
        c.arrow(dual_point(s.edge), s.edge.dir, class, &extra);
    }
    c.out.push_str("</g>\n");

    let (x, y) = c.px(record.start.a as f64 + 0.5, record.start.b as f64 + 0.5);
    writeln!(c.out, r##"<circle id="origin" cx="{x:.1}" cy="{y:.1}" r="4.0" fill="#111111"/>"##).unwrap();
    Ok(c.finish())
}

pub fn write_svg(target: &RenderTarget<'_>, path: &Path) -> Result<usize, Error> {
    let svg = render_svg(target)?;
    std::fs::write(path, &svg)?;
    Ok(svg.len())
}
