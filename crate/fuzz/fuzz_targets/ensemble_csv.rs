#![no_main]

use libfuzzer_sys::fuzz_target;
use mvlab::measures::ParticleEnsemble;

fuzz_target!(|data: &[u8]| {
    let Ok(ensemble) = ParticleEnsemble::read_csv(data) else {
        return;
    };
    let mut out = Vec::new();
    ensemble.write_csv(&mut out).expect("parsed ensemble serializes");
    let back = ParticleEnsemble::read_csv(out.as_slice()).expect("own output parses");
    assert_eq!(back.dim(), ensemble.dim());
    assert_eq!(back.states(), ensemble.states());
    for (a, b) in back.weights().iter().zip(ensemble.weights()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
    }
});
