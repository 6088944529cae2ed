//! Run a configured experiment end to end and write its outputs to a
//! temporary directory, as `bxi run --config` would.

use bxi::experiment::{render_report, run, ExperimentConfig};

fn main() -> bxi::Result<()> {
    let out = std::env::temp_dir().join("bxi-example-run");
    let text = format!(
        r#"{{
            "experiment": "MASS_RECT",
            "r_values": [1, 2, 3],
            "lambda_values": [],
            "n_samples": 20000,
            "dt": 0.0001,
            "h": 0.05,
            "delta": 0.1,
            "seed": 8,
            "output_dir": {:?}
        }}"#,
        out.display().to_string()
    );
    let cfg = ExperimentConfig::from_json(&text)?;
    let outcome = run(&cfg)?;
    print!("{}", render_report(&outcome));
    println!("outputs in {}", out.display());
    Ok(())
}
