//! Writes one simulated season from the built-in truth as the two CSV
//! tables read by `rdm-gmr`.
//!
//! cargo run -p gmr-core --example export_sample -- <dir> [seed]

use std::fs::File;
use std::path::PathBuf;

use gmr_core::simulation::{simulate_dataset, stream_rng, SeRule, SimulationTruth};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    std::fs::create_dir_all(&dir)?;
    let truth = SimulationTruth::taku_shaped();
    let season = simulate_dataset(&truth, SeRule::AtEstimate, &mut stream_rng(seed, 0))?;
    season.dataset.write_composition_csv(File::create(dir.join("composition.csv"))?)?;
    season.dataset.write_weights_csv(File::create(dir.join("weights.csv"))?)?;
    let config = season.dataset.config();
    std::fs::write(
        dir.join("season.toml"),
        format!("M = {}\nlake_stocks = {:?}\n", config.lake_count.round(), config.lake_stocks),
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}
