#![no_main]

use libfuzzer_sys::fuzz_target;
use mvlab::measures::dump::{decode_paths_binary, write_paths_binary};

fuzz_target!(|data: &[u8]| {
    let Ok(paths) = decode_paths_binary(data) else {
        return;
    };
    let mut out = Vec::new();
    write_paths_binary(&paths, &mut out).expect("decoded paths encode");
    assert_eq!(out, data);
});
