//! Writes the shipped demo fixtures: a planted-cluster dictionary, its
//! embeddings, a gold set with narrow/broad scopes and a probe table for
//! the free-text inputs.
//!
//! cargo run -p amq-cli --example gen_fixtures -- [OUT_DIR]

use std::path::PathBuf;
use std::{env, fs};

use amq_core::fixture::PlantedSpec;

fn main() -> std::io::Result<()> {
    let out = env::args_os()
        .nth(1)
        .map_or_else(|| PathBuf::from("fixtures"), PathBuf::from);
    fs::create_dir_all(&out)?;
    let f = PlantedSpec {
        queries: 12,
        narrow_per_query: 8,
        broad_per_query: 5,
        fillers: 240,
        dim: 64,
        seed: 2024,
        gold_drop: 2,
        gold_extra: 2,
        ..Default::default()
    }
    .build();
    f.dictionary.save(out.join("dictionary.tsv"))?;
    f.store.save(out.join("embeddings.amqe"))?;
    fs::write(out.join("gold.json"), f.gold_json() + "\n")?;
    fs::write(out.join("probes.tsv"), f.probes.to_tsv())?;
    println!(
        "wrote {} terms, {} queries (dim {}) to {}",
        f.dictionary.len(),
        f.gold.len(),
        f.store.dim(),
        out.display()
    );
    Ok(())
}
