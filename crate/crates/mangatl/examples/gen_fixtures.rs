//! Regenerates `fixtures/synthetic` (run from the crate directory).

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic"));
    mangatl::synthetic::write_fixtures(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
