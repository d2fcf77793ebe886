#![no_main]

use hyperflow_harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        let out = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&out).expect("serialized config parses");
        assert_eq!(back.to_toml(), out);
    }
});
