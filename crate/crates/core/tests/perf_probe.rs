//! Manual throughput probe: `cargo test -p puzzle-cm-core --test perf_probe -- --ignored --nocapture`

use std::time::Instant;

use puzzle_cm_core::net::{
    embed_backward, embed_forward, embed_forward_cached, EmbedCache, ModelConfig, ModelParams,
    Side, Workspace,
};

fn probe(name: &str, cfg: ModelConfig, reps: usize) {
    let params: ModelParams<f32> = ModelParams::init(cfg.clone(), 1).unwrap();
    let input: Vec<f32> =
        (0..cfg.channels_in * cfg.piece_size * cfg.piece_size)
            .map(|v| (v % 97) as f32 / 97.0)
            .collect();
    let mut ws = Workspace::new();
    let macs = cfg.macs_per_embedding();

    let t = Instant::now();
    let mut sink = 0.0f32;
    for _ in 0..reps {
        sink += embed_forward(&params, Side::Right, &input, &mut ws).unwrap()[0];
    }
    let dt = t.elapsed().as_secs_f64();
    let gmacs = macs as f64 * reps as f64 / dt / 1e9;
    println!("{name}: fwd {reps} reps in {dt:.3}s -> {gmacs:.2} GMAC/s (sink {sink})");

    let mut cache = EmbedCache::default();
    let mut grads = vec![0.0f32; params.layout().total];
    let dz = vec![1.0f32; cfg.embedding_dim];
    let t = Instant::now();
    for _ in 0..reps {
        let _ = embed_forward_cached(&params, Side::Right, &input, &mut cache).unwrap();
        embed_backward(&params, Side::Right, &cache, &dz, &mut grads).unwrap();
    }
    let dt = t.elapsed().as_secs_f64();
    let gmacs = 3.0 * macs as f64 * reps as f64 / dt / 1e9;
    println!("{name}: fwd+bwd {reps} reps in {dt:.3}s -> ~{gmacs:.2} GMAC/s equivalent");
}

#[test]
#[ignore]
fn throughput() {
    probe(
        "full d320 G16",
        ModelConfig {
            groups: 16,
            ..ModelConfig::default()
        },
        20,
    );
    probe(
        "desk [8,16,32,64] d160 G8",
        ModelConfig {
            conv_channels: [8, 16, 32, 64],
            embedding_dim: 160,
            groups: 8,
            ..ModelConfig::default()
        },
        300,
    );
    probe(
        "desk [4,8,16,32] d160 G8",
        ModelConfig {
            conv_channels: [4, 8, 16, 32],
            embedding_dim: 160,
            groups: 8,
            ..ModelConfig::default()
        },
        600,
    );
}
