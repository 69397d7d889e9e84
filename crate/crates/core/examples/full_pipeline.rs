//! The whole matrix from a configuration text: data, training, both
//! audits, records, tables and manifest.
//!
//! cargo run --example full_pipeline -- [out-dir]

use saliency_audit::pipeline::{run, ExperimentConfig, ReportFormat};

const CONFIG: &str = "
name = small-matrix
seed = 5
dataset.synthetic.num_windows = 120
model.hidden_size = 12
train.epochs = 8
attribution.fp_repetitions = 5
attribution.ig_steps = 20
eval.max_test_windows = 24
";

fn main() -> saliency_audit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/full_pipeline".into());
    let cfg = ExperimentConfig::parse(&format!("{CONFIG}output_dir = {out}\n"))?;
    println!("config hash {}", cfg.hash());
    let result = run(&cfg, ReportFormat::Md, &mut |m| println!("{m}"))?;
    println!("\n{} records in {}", result.records.len(), result.records_path.display());
    for t in &result.tables {
        println!("{}", t.display());
    }
    let table = std::fs::read_to_string(out + "/reports/consistency_table.md").map_err(|e| saliency_audit::Error::io("consistency_table.md", e))?;
    print!("\n{table}");
    Ok(())
}
