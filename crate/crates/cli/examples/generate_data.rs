//! Regenerates the bundled demo dataset: a four-community stochastic block
//! model with 500 nodes, plus one class label per node (its block).
//!
//! The draw is fully seeded, so running this again reproduces the committed
//! files byte for byte:
//!
//! ```text
//! cargo run -p lemane-cli --example generate_data [out_dir]
//! ```

use std::io::Write;
use std::path::Path;

use lemane_core::graph::write_edge_list;
use lemane_core::synth::stochastic_block_model;

const BLOCKS: [usize; 4] = [125, 125, 125, 125];
const P_IN: f64 = 0.05;
const P_OUT: f64 = 0.003;
const SEED: u64 = 7;

fn main() {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let out_dir = Path::new(&out_dir);
    std::fs::create_dir_all(out_dir).expect("create output directory");

    let (graph, labels) =
        stochastic_block_model(&BLOCKS, P_IN, P_OUT, SEED).expect("draw block model");

    let edges_path = out_dir.join("synth500.edges");
    write_edge_list(&graph, &edges_path).expect("write edge list");

    let labels_path = out_dir.join("synth500.labels");
    let mut f = std::fs::File::create(&labels_path).expect("create label file");
    writeln!(f, "# node class — block membership of the generating model").unwrap();
    for v in 0..graph.n() {
        for &c in labels.labels_of(v as u32) {
            writeln!(f, "{v} {c}").unwrap();
        }
    }

    println!(
        "wrote {} ({} nodes, {} undirected edges) and {}",
        edges_path.display(),
        graph.n(),
        graph.undirected_edge_count(),
        labels_path.display()
    );
}
