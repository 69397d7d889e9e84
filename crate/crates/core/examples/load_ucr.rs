//! Parse a UCR-style file (label first, then the series), split it, and
//! normalize with train statistics.
//!
//! cargo run --example load_ucr -- [path/to/NAME_TRAIN.tsv]

use saliency_audit::data::{parse_ucr, parse_ucr_str, Delimiter};

const SAMPLE: &str = "\
1\t0.1\t0.4\t0.9\t1.6\t0.8\t0.2
2\t1.1\t0.7\t0.2\t-0.3\t-0.1\t0.5
1\t0.0\t0.5\t1.1\t1.4\t0.9\t0.1
2\t0.9\t0.6\t0.1\t-0.4\t0.0\t0.6
1\t0.2\t0.3\t1.0\t1.5\t0.7\t0.3
2\t1.2\t0.8\t0.3\t-0.2\t-0.2\t0.4
";

fn main() -> saliency_audit::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) => parse_ucr(path, Delimiter::Auto)?,
        None => parse_ucr_str(SAMPLE, "sample", Delimiter::Auto)?,
    };
    println!(
        "{}: {} windows of length {}, labels {:?} -> classes 0..{}",
        ds.name,
        ds.train.len(),
        ds.window_len(),
        ds.label_names,
        ds.num_classes
    );

    let ds = ds.split(0.7, 42)?.normalize()?;
    let norm = ds.normalization.expect("normalize sets statistics");
    println!("split {} / {}, train mean {:.4}, std {:.4}", ds.train.len(), ds.test.len(), norm.mean, norm.std);
    println!("fingerprint {}", ds.fingerprint());
    print!("{}", ds.to_canonical(&ds.test));
    Ok(())
}
