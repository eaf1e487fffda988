#![no_main]

use libfuzzer_sys::fuzz_target;
use mimolink_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Any config the reader accepts must survive a serialize/parse cycle
    // unchanged — the manifest embeds configs this way for reproduction.
    if let Ok(cfg) = parse_config(text) {
        let emitted = toml::to_string(&cfg).expect("accepted configs serialize");
        let back = parse_config(&emitted).expect("re-emitted config must parse");
        assert_eq!(back, cfg, "serialize/parse cycle changed the config");
    }
});
