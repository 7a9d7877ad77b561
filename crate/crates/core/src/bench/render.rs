use std::fmt::Write as _;
use std::path::Path;

use crate::envgen::{CellClass, EnvironmentMap};
use crate::grid::Point;
use crate::planner::Roadmap;

/// Figure colours.
#[derive(Debug, Clone, Copy)]
pub struct Palette {
    pub wall: &'static str,
    pub step_low: &'static str,
    pub step_high: &'static str,
    pub free: &'static str,
    pub edge: &'static str,
    pub path: &'static str,
    pub start: &'static str,
    pub goal: &'static str,
}

pub const PALETTE: Palette = Palette {
    wall: "#3465a4",
    step_low: "#9fc5e8",
    step_high: "#1c3f73",
    free: "#ffffff",
    edge: "#a0a0a0",
    path: "#000000",
    start: "#2ca02c",
    goal: "#d62728",
};

/// Pixels per cell.
const SCALE: f64 = 8.0;

fn px(v: f64) -> f64 {
    v * SCALE
}

/// The whole figure as an SVG string: obstacles, roadmap edges in gray,
/// the path in black, start and goal as green and red circles.
pub fn svg_document(
    env: &EnvironmentMap,
    roadmap: Option<&Roadmap>,
    path: Option<&[Point]>,
    start: Point,
    goal: Point,
) -> String {
    let (w, h) = (env.width(), env.height());
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        px(w as f64),
        px(h as f64),
        px(w as f64),
        px(h as f64)
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="{}"/>"#, px(w as f64), px(h as f64), PALETTE.free).unwrap();

    s.push_str("<g id=\"obstacles\" stroke=\"none\">\n");
    for y in 0..h {
        // one rect per horizontal run of equal class
        let mut x = 0;
        while x < w {
            let c = env.get(x, y);
            let run = (x..w).take_while(|&xx| env.get(xx, y) == c).count();
            let fill = match c {
                CellClass::Free => None,
                CellClass::Wall => Some(PALETTE.wall),
                CellClass::StepLow => Some(PALETTE.step_low),
                CellClass::StepHigh => Some(PALETTE.step_high),
            };
            if let Some(fill) = fill {
                writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                    px(x as f64),
                    px(y as f64),
                    px(run as f64),
                    SCALE
                )
                .unwrap();
            }
            x += run;
        }
    }
    s.push_str("</g>\n");

    if let Some(rm) = roadmap {
        writeln!(s, r#"<g id="roadmap" stroke="{}" stroke-width="1">"#, PALETTE.edge).unwrap();
        for e in rm.edges() {
            let (a, b) = (rm.nodes()[e.a], rm.nodes()[e.b]);
            writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, px(a.x), px(a.y), px(b.x), px(b.y)).unwrap();
        }
        writeln!(s, r#"</g>"#).unwrap();
        writeln!(s, r#"<g id="nodes" fill="{}">"#, PALETTE.edge).unwrap();
        for p in rm.nodes() {
            writeln!(s, r#"<circle cx="{}" cy="{}" r="1.5"/>"#, px(p.x), px(p.y)).unwrap();
        }
        writeln!(s, r#"</g>"#).unwrap();
    }

    if let Some(points) = path.filter(|p| !p.is_empty()) {
        let pts: Vec<String> = points.iter().map(|p| format!("{},{}", px(p.x), px(p.y))).collect();
        writeln!(
            s,
            r#"<polyline id="path" points="{}" fill="none" stroke="{}" stroke-width="3"/>"#,
            pts.join(" "),
            PALETTE.path
        )
        .unwrap();
    }

    for (id, p, fill) in [("start", start, PALETTE.start), ("goal", goal, PALETTE.goal)] {
        writeln!(s, r#"<circle id="{id}" cx="{}" cy="{}" r="{}" fill="{fill}"/>"#, px(p.x), px(p.y), SCALE * 0.9).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_svg(
    env: &EnvironmentMap,
    roadmap: Option<&Roadmap>,
    path: Option<&[Point]>,
    start: Point,
    goal: Point,
    out_path: impl AsRef<Path>,
) -> std::io::Result<()> {
    std::fs::write(out_path, svg_document(env, roadmap, path, start, goal))
}
