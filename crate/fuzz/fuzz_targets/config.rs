#![no_main]

use libfuzzer_sys::fuzz_target;
use mvlab_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::resolve(text, &[], None, None, None) else {
        return;
    };
    // Resolved configs must survive the sidecar round trip unchanged.
    let first = cfg.to_toml().expect("resolved config serializes");
    let again = ExperimentConfig::resolve(&first, &[], None, None, None).expect("sidecar parses");
    assert_eq!(again.to_toml().expect("serializes"), first);
});
