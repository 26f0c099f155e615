#![no_main]
//! Expression lexer and parser on arbitrary text.

use libfuzzer_sys::fuzz_target;
use qls::expr::{parse, tokenize};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    // The lexer and the parser must agree on what is lexically valid.
    let lexed = tokenize(src);
    match parse(src) {
        Ok(e) => {
            assert!(lexed.is_ok());
            let _ = e.to_string();
        }
        Err(_) => {}
    }
});
