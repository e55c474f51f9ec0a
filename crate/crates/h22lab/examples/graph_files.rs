//! Load graph and exhaustion files, then print the wired collapses.
//!
//! ```text
//! cargo run --example graph_files
//! ```

use h22lab::graph::{ExhaustionFile, GraphFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");

    let text = std::fs::read_to_string(format!("{dir}/path3.json"))?;
    let file: GraphFile = serde_json::from_str(&text)?;
    let graph = file.build()?;
    println!(
        "path3: {} interior vertices, pin id {}, edges:",
        graph.n_interior(),
        graph.pin_id()
    );
    for &(i, j, w) in graph.edges() {
        println!("  {} -- {}  weight {w}", graph.id_of(i), graph.id_of(j));
    }

    let text = std::fs::read_to_string(format!("{dir}/path_host.json"))?;
    let file: ExhaustionFile = serde_json::from_str(&text)?;
    let exhaustion = file.build()?;
    println!("\nhost on {} vertices, {} levels", exhaustion.host().len(), exhaustion.num_levels());
    for n in 1..=exhaustion.num_levels() {
        let collapsed = exhaustion.wired_collapse(n)?;
        println!(
            "level {n}: interior {:?}, boundary vertex {}",
            exhaustion.level(n)?,
            collapsed.pin_id()
        );
        for &(i, j, w) in collapsed.edges() {
            println!(
                "  {} -- {}  weight {w}",
                collapsed.id_of(i),
                collapsed.id_of(j)
            );
        }
    }
    Ok(())
}
