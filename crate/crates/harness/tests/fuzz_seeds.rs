//! The fuzz targets' round-trip properties, run over the checked-in seeds
//! so they are exercised without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use hyperflow::io::{parse_metric, write_metric};
use hyperflow_harness::{ExperimentConfig, RunManifest};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn metric_seeds_round_trip() {
    for (p, text) in seeds("metric_text") {
        let m = parse_metric(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parse_metric(&write_metric(&m)).unwrap(), m);
    }
}

#[test]
fn config_seeds_round_trip() {
    for (p, text) in seeds("experiment_config") {
        let c = ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let out = c.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&out).unwrap().to_toml(), out);
    }
}

#[test]
fn manifest_seeds_round_trip() {
    for (p, text) in seeds("run_manifest") {
        let m = RunManifest::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    }
}
