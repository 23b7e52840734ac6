//! Recalibrates the bundled constants on the lab grid and prints the JSON.
//!
//! `cargo run --release --example calibrate_constants > constants/frozen.json`

use couette::lab::{lab_grid, FrozenConstants, Theorem2Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = lab_grid();
    let mut constants = FrozenConstants::bundled();
    let entry = FrozenConstants::calibrate(&grid, &Theorem2Config::new(grid))?;
    eprintln!("sobolev {:.6e}  theorem2 {:.6e}", entry.sobolev, entry.theorem2);
    for (r, worst) in &entry.theorem2_trend {
        eprintln!("  R {r:>6}  worst ratio {worst:.6e}");
    }
    constants.upsert(entry);
    println!("{}", constants.to_json()?);
    Ok(())
}
