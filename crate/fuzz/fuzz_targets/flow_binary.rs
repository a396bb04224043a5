#![no_main]

use libfuzzer_sys::fuzz_target;
use mvlab::measures::dump::{decode_flow_binary, write_flow_binary};

fuzz_target!(|data: &[u8]| {
    let Ok(flow) = decode_flow_binary(data) else {
        return;
    };
    let mut out = Vec::new();
    write_flow_binary(&flow, &mut out).expect("decoded flow encodes");
    assert_eq!(out, data);
});
