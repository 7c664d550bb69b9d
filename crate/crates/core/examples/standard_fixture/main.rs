//! Writes the standard fixture into a directory.
//!
//! ```text
//! cargo run -p tapestry-core --example standard_fixture -- fixtures/standard
//! ```

mod generate;

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/standard".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, contents) in generate::generate() {
        std::fs::write(dir.join(name), contents)?;
    }
    println!("wrote fixture to {}", dir.display());
    Ok(())
}
