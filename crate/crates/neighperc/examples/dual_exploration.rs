//! Runs the dual exploration from the dual origin of a (2,0)-configuration,
//! prints the pivotal reveals and the visited clusters, and writes an SVG.
//!
//! `cargo run --release --example dual_exploration -- [seed] [out.svg]`

use neighperc::cli::render::{write_svg, RenderTarget};
use neighperc::explore::{explore_dual_forward, forward_set};
use neighperc::lattice::{DualVertex, Window};
use neighperc::models::{param, sample_configuration, ModelSpec};

fn main() -> Result<(), neighperc::Error> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(21);
    let out = args.next().unwrap_or_else(|| "exploration.svg".into());

    let spec = ModelSpec::TwoEps { eps: param(0, 1) };
    let window = Window::square(0, 0, 16);
    let config = sample_configuration(&spec, window, seed)?;
    let rec = explore_dual_forward(&config, &spec, DualVertex::ORIGIN, window)?;

    println!("{:?} after {} reveals, {} vertices visited", rec.termination, rec.steps.len(), rec.visited.len());
    for ev in &rec.pivotal_events {
        let e = ev.edge;
        println!(
            "  pivotal at step {:>3}: dual edge from ({}, {}) heading {:?}, {}",
            ev.step,
            e.tail.a,
            e.tail.b,
            e.dir,
            if ev.open { "open" } else { "closed" }
        );
    }
    let sizes: Vec<usize> = rec.clusters.iter().map(Vec::len).collect();
    println!("visited clusters: {sizes:?}");

    let f = forward_set(&config, DualVertex::ORIGIN, window)?;
    println!("dual forward set: {} vertices (escaped: {})", f.vertices.len(), f.escaped);

    let bytes = write_svg(&RenderTarget::Exploration { record: &rec, config: Some(&config) }, out.as_ref())?;
    println!("wrote {out} ({bytes} bytes)");
    Ok(())
}
