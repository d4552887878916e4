use std::path::PathBuf;

use sssa_core::bench::{GridSpec, Method};

fn load(name: &str) -> GridSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    let spec: GridSpec = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    spec.validate().unwrap();
    spec
}

#[test]
fn desk_config_is_the_default() {
    assert_eq!(load("desk.json"), GridSpec::default());
}

#[test]
fn full_scale_config_is_valid() {
    let spec = load("full_scale.json");
    assert_eq!(spec.shape(), (10, 10));
    assert_eq!(spec.duration_pairs.last(), Some(&(1.0, 1.0)));
    let cfg = spec.cell_config(9, 9).unwrap();
    assert_eq!((cfg.channels, cfg.atoms, cfg.time_steps, cfg.signals, cfg.n_a), (20, 40, 300, 100, 110));
    assert_eq!(spec.grid_for(Method::Omp).hp1, vec![1.0, 2.0, 4.0, 8.0, 16.0, 40.0]);
}
