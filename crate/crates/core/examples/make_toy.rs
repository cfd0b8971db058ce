//! Regenerates the toy molecule dataset shipped under `data/toy`.
//!
//! ```text
//! cargo run -p pgc --example make_toy -- data/toy
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use pgc::evalmetrics::ValencyTable;
use pgc::graphdata::{write_graphs, DatasetMeta};
use pgc::synthetic;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/toy".into()));
    std::fs::create_dir_all(&dir)?;
    let vt = ValencyTable::qm9();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let graphs = synthetic::family(600, 2..=6, &mut rng, |n, r| synthetic::molecule(n, &vt, r))?;
    write_graphs(BufWriter::new(File::create(dir.join("train.jsonl"))?), &graphs)?;
    let mut meta = DatasetMeta::new(6, 4, 4)?;
    meta.atom_names = Some(["C", "N", "O", "F"].map(String::from).to_vec());
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    std::fs::write(dir.join("valency.json"), serde_json::to_string_pretty(&vt)? + "\n")?;
    Ok(())
}
