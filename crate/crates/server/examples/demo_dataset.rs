//! Builds the demo dataset and prints the commands to explore it.
//!
//! cargo run -p chronomap-server --example demo_dataset -- demo

use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    let config = match chronomap_server::demo::build_demo(&dir) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    let c = config.display();
    println!("demo dataset written to {}", dir.display());
    println!("  chronomap --config {c} qa factual \"Were there lakes in Lyss in 1877?\"");
    println!("  chronomap --config {c} bench run --benchmark {}", dir.join("benchmark.json").display());
    println!("  chronomap --config {c} serve");
}
