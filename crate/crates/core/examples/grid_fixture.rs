//! Regenerates `tests/fixtures/instance_a_grid200.json`:
//!
//! ```text
//! cargo run -p agency-core --example grid_fixture > crates/core/tests/fixtures/instance_a_grid200.json
//! ```

use agency_core::oracle::grid_optimum;
use agency_core::Instance;

fn main() -> agency_core::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/instance_a.json");
    let inst = Instance::load(path)?;
    let best = grid_optimum(&inst.agent, &inst.outcomes, 200)?;
    println!("{}", serde_json::to_string_pretty(&best)?);
    Ok(())
}
