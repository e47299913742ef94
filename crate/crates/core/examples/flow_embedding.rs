//! Forward pass of the position-aware flow embedding with seeded weights.

use rigidflow::evalbench::{generate_scene, SyntheticSceneSpec};
use rigidflow::flowembed::{flow_embedding, format_weights, parse_weights, EmbeddingConfig, FlowEmbedder};
use rigidflow::knn_search;

fn main() {
    let scene = generate_scene(&SyntheticSceneSpec {
        body_count: 3,
        points_per_body: 200,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let mut a = scene.cloud_t.clone();
    let mut b = scene.cloud_t1.clone();
    a.set_features(a.coordinate_features()).unwrap();
    b.set_features(b.coordinate_features()).unwrap();

    let cfg = EmbeddingConfig {
        seed: 5,
        ..EmbeddingConfig::default()
    };
    let embedder = FlowEmbedder::seeded(&cfg).unwrap();
    let graph = knn_search(&b, &a, cfg.neighbor_k).unwrap();
    let emb = flow_embedding(&a, &b, &graph, &embedder).unwrap();
    println!("{} embeddings of width {}", emb.vectors.len(), embedder.cost_dim());
    println!("e_0[..6] = {:.4?}", &emb.vectors[0][..6]);

    // Weights survive a text round trip.
    let text = format_weights(&embedder.to_weights());
    let reloaded = FlowEmbedder::from_weights(cfg.neighbor_k, &parse_weights(&text).unwrap()).unwrap();
    let again = flow_embedding(&a, &b, &graph, &reloaded).unwrap();
    println!(
        "weight file: {} lines, reload reproduces embeddings: {}",
        text.lines().count(),
        again == emb
    );
}
