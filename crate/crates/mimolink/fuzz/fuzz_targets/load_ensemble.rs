#![no_main]

use libfuzzer_sys::fuzz_target;
use mimolink::propagation::{parse_ensemble, write_ensemble};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // The dump format promises that write/parse/write is byte-identical.
    if let Ok((header, ensemble)) = parse_ensemble(text) {
        let emitted = write_ensemble(&ensemble, header.seed, header.scene_hash.as_deref());
        let (header_back, ensemble_back) =
            parse_ensemble(&emitted).expect("re-emitted dump must parse");
        assert_eq!(header_back, header, "write/parse cycle changed the header");
        let emitted_again =
            write_ensemble(&ensemble_back, header_back.seed, header_back.scene_hash.as_deref());
        assert_eq!(emitted_again, emitted, "second write is not byte-identical");
    }
});
