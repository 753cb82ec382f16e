//! Writes the synthetic benchmark graphs as g2o files so they can be fed to
//! the `fgopt` binary or other tools.
//!
//!     cargo run --release --example generate_datasets -- [out_dir]
//!
//! Produces `grid3500.g2o` (2D, 3500 poses, 5453 edges) and `torus5000.g2o`
//! (3D, 5000 poses, 9048 edges). The default directory is `datasets`.

use std::path::PathBuf;

use fgopt::synthetic::{manhattan_2d, torus_3d, SyntheticConfig};

fn main() -> fgopt::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "datasets".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, bundle) in [
        ("grid3500.g2o", manhattan_2d(&SyntheticConfig::manhattan())?),
        ("torus5000.g2o", torus_3d(&SyntheticConfig::torus())?),
    ] {
        let path = dir.join(name);
        let file = std::fs::File::create(&path)?;
        bundle.save(std::io::BufWriter::new(file))?;
        println!("{}: {}", path.display(), bundle.summary());
    }
    Ok(())
}
