//! Load an experiment config (or the defaults), apply an override, validate
//! and print the resolved TOML.
//!
//! ```text
//! cargo run --example experiment_config -- configs/ex2.toml
//! ```

use geosteer::harness::ExperimentConfig;

fn main() -> geosteer::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::default(),
    };
    print!("{}", config.to_toml());

    let mut bad = config.clone();
    bad.harness.seeds = vec![3, 3];
    if let Err(e) = bad.validate() {
        println!("\n# duplicate seeds rejected: {e}");
    }
    match ExperimentConfig::from_toml("[agent]\nkind = \"dsdp\"\n") {
        Ok(_) => println!("# unexpected"),
        Err(e) => println!("# dsdp on the layered env rejected: {e}"),
    }
    Ok(())
}
