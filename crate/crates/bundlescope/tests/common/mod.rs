#![allow(dead_code)]

use std::path::PathBuf;

use bundlescope::mnist::MNIST_DIR_ENV;

/// MNIST from the environment, else the workspace `data/mnist` directory.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os(MNIST_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").is_file().then_some(dir)
}

pub fn schema_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas/summary.schema.json")
}

/// Parse JSON and drop every wall-clock field, the only run-to-run difference.
pub fn without_timings(text: &str) -> serde_json::Value {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("wall_clock_seconds");
                m.remove("seconds");
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    strip(&mut v);
    v
}
