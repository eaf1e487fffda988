#![no_main]

use libfuzzer_sys::fuzz_target;
use mimolink::propagation::parse_scene;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // A scene that passes validation must hold its structural promises;
    // everything else must come back as a typed error, never a panic.
    if let Ok(desc) = parse_scene(text) {
        assert!(!desc.scene.facets().is_empty());
        assert!(desc.bs.n_elements() > 0);
        assert!(!desc.ue_template.is_empty());
        assert!(desc.carrier_hz.is_finite() && desc.carrier_hz > 0.0);
    }
});
