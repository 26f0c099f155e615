#![no_main]
//! DFF1 decoding. Anything accepted must re-encode to the same bytes.

use libfuzzer_sys::fuzz_target;
use qls::field::io::{decode, encode_space_time, encode_spatial, FieldFile};

fuzz_target!(|data: &[u8]| {
    let Ok(file) = decode(data) else { return };
    let bytes = match &file {
        FieldFile::Spatial(f) => encode_spatial(f),
        FieldFile::SpaceTime(f) => encode_space_time(f),
    }
    .expect("decoded header re-encodes");
    assert_eq!(bytes, data);
});
