//! Runs a scenario from an inline TOML config and lists what it wrote.
//!
//! `cargo run --release --example run_scenario -- out_dir`

use std::path::PathBuf;

use nonbloch::config::validate_config_str;
use nonbloch::run_scenario;

const CONFIG: &str = r#"
scenario = "custom"
seed = 5

[model]
terms = [[1, 1.2, 0.0], [-1, 1.1, 0.0]]

[geometry]
size = 40

[numerics]
re_range = [-2.6, 2.6]
im_range = [-0.2, 0.2]
grid = [27, 13]
"#;

fn main() -> nonbloch::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenario_out".into()));
    let plan = validate_config_str(CONFIG, None)?;
    let manifest = run_scenario(&plan, &out)?;
    for entry in &manifest.outputs {
        println!("{:<24} {}", entry.file, entry.description);
    }
    println!("{}", serde_json::to_string_pretty(&manifest.summary)?);
    Ok(())
}
