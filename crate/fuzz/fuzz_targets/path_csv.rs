#![no_main]

use libfuzzer_sys::fuzz_target;
use mvlab::measures::dump::{read_paths_csv, write_paths_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(paths) = read_paths_csv(data) else {
        return;
    };
    let mut out = Vec::new();
    write_paths_csv(&paths, &mut out).expect("parsed paths serialize");
    let back = read_paths_csv(out.as_slice()).expect("own output parses");
    assert_eq!(back.len(), paths.len());
    for k in 0..paths.grid().len() {
        assert_eq!(back.frame(k), paths.frame(k));
    }
});
