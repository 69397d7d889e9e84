//! Embed one window into the three padded frames, list its area of
//! interest, and swap two feature rows.
//!
//! cargo run --example padded_frames

use saliency_audit::data::{synthesize, SyntheticSpec};
use saliency_audit::framing::{aoi_cells, frame_seed, pad_window, swap_features, FrameSpec, Placement, SwapSpec};

fn glyphs(row: &[f64]) -> String {
    row.iter()
        .map(|v| match v {
            v if *v > 1.5 => '#',
            v if *v > 0.5 => '+',
            v if *v > -0.5 => '.',
            _ => ' ',
        })
        .collect()
}

fn main() -> saliency_audit::Result<()> {
    let ds = synthesize(&SyntheticSpec::default())?;
    let w = &ds.train[0];
    let spec = FrameSpec::default();
    let len = spec.validate(w.len())?;
    println!("window {} (label {}), d = {}, frame {} x {len}", w.window_id, w.label, w.len(), spec.alpha);

    for p in Placement::ALL {
        let f = pad_window(w, &spec, p, frame_seed(0, &ds.name, w.window_id, p))?;
        let cells = aoi_cells(&f);
        println!("\n{p}: offset {}, area of interest rows {:?} cols {}..{}", f.time_offset, [f.signal_feature], cells[0].1, cells[cells.len() - 1].1);
        for n in 0..f.alpha {
            println!("  {n} |{}|", glyphs(f.row(n)));
        }
    }

    let f = pad_window(w, &spec, Placement::Middle, frame_seed(0, &ds.name, w.window_id, Placement::Middle))?;
    let swap = SwapSpec::new(1, 3, spec.alpha)?;
    let s = swap_features(&f, swap)?;
    println!("\nafter swapping rows 1 and 3 the window sits in row {}", s.signal_feature);
    for n in 0..s.alpha {
        println!("  {n} |{}|", glyphs(s.row(n)));
    }
    assert_eq!(swap_features(&s, swap)?, f);
    Ok(())
}
