//! Full experiment on FI-2010-style matrix files: train on the clean
//! training file, evaluate under all four scenarios, print the report
//! table and write artifacts.
//!
//! Run with:
//!   cargo run --release --example fi2010_pipeline -- TRAIN_FILE TEST_FILE [OUT_DIR]
//!
//! The files must be the decimal-precision variant (dense numeric matrix,
//! rows = features, columns = time; first 40 rows the 10-level book, last
//! 5 rows the horizon labels).

use lobrep::eval::render_table;
use lobrep::experiment::{run_experiment, ExperimentConfig};

fn main() -> lobrep::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(train_path), Some(test_path)) = (args.first(), args.get(1)) else {
        eprintln!("usage: fi2010_pipeline TRAIN_FILE TEST_FILE [OUT_DIR]");
        eprintln!("no dataset files given; see the train_and_decay example for a dataset-free run");
        return Ok(());
    };
    let out_dir = args
        .get(2)
        .cloned()
        .unwrap_or_else(|| "runs/fi2010".to_string());

    let config = ExperimentConfig::from_toml_str(&format!(
        r#"
seed = 42
out_dir = "{out_dir}"
history = 10
depth = 10
horizon = 50
alpha = 0.002
models = ["lr", "mlp"]
train_subsample = 4
test_subsample = 2

[data]
kind = "fi2010"
train_path = "{train_path}"
test_path = "{test_path}"

[train.lr]
epochs = 20

[train.mlp]
epochs = 20
"#
    ))?;

    println!("running: ingest -> normalize -> train (clean) -> evaluate 4 scenarios");
    println!("subsampling: every 4th training window, every 2nd test window\n");
    let outcome = run_experiment(&config)?;
    print!("{}", render_table(&outcome.reports)?);
    println!("\nperturbation diagnostics and confusion matrices in {}", outcome.out_dir.display());
    Ok(())
}
