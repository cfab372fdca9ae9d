//! Writing and reading `ma-grid` files, with checksums as the CLI records them.

use ma_core::cli::sha256_hex;
use ma_core::lattice::grid_io::{self, GridData};
use ma_core::lattice::{BoxLattice, ScalarField, TorusLattice};
use ma_core::problems::separable;

fn main() -> ma_core::Result<()> {
    let dir = std::env::temp_dir().join("ma-grid-example");
    std::fs::create_dir_all(&dir)?;

    let f = separable(TorusLattice::unit(2, 8)?, 0.5)?;
    let torus = GridData::Torus(f);
    let path = dir.join("f.ma-grid");
    grid_io::write_file(&path, &torus)?;
    let text = std::fs::read_to_string(&path)?;
    println!("{}", text.lines().next().unwrap_or_default());
    println!("sha256 {}", sha256_hex(text.as_bytes()));
    assert_eq!(grid_io::read_file(&path)?, torus);

    let u = ScalarField::from_fn(BoxLattice::centered(2, 1.0, 0.25)?, |x| x[0] * x[0] + x[1] * x[1])?;
    let boxed = GridData::Box(u);
    grid_io::write_file(&dir.join("u.ma-grid"), &boxed)?;
    assert_eq!(grid_io::read_file(&dir.join("u.ma-grid"))?, boxed);
    println!("both grids read back bit-exactly from {}", dir.display());
    Ok(())
}
