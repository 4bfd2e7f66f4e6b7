//! Regenerates `src/calibration.json` for the shipped grids.

use caloric_mhd::calibration::fit;
use caloric_mhd::spectral::Grid;

fn main() {
    let tables: Vec<_> = [8, 16, 32]
        .iter()
        .map(|&n| fit(&Grid::new(n, 2.0 * std::f64::consts::PI).unwrap()).unwrap())
        .collect();
    println!("{}", serde_json::to_string_pretty(&tables).unwrap());
}
