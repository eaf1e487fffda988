#![no_main]

use libfuzzer_sys::fuzz_target;
use mimolink::touchstone::{parse_touchstone, write_touchstone, NumberFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Whatever parses must survive a write/parse cycle losslessly: the
    // writer uses shortest-exact decimals, so RI re-emission is exact.
    if let Ok(net) = parse_touchstone(text, None) {
        let emitted = write_touchstone(&net, NumberFormat::RealImaginary);
        let back = parse_touchstone(&emitted, Some(net.n_ports()))
            .expect("re-emitted file must parse");
        assert_eq!(back, net, "write/parse cycle changed the network");
    }
});
