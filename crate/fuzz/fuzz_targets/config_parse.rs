#![no_main]
//! Run-config JSON, followed by the preset and grid resolution it feeds.

use libfuzzer_sys::fuzz_target;
use qls::cli::config::{parse_config, Loaded};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(config) = parse_config(src) else { return };
    let loaded = Loaded { config, base: Default::default() };
    if let Ok(grid) = loaded.grid() {
        let _ = loaded.metric(grid.d);
        let _ = loaded.nonlinearity(grid.components);
    }
});
