#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::metric::ActivationManifest;

fuzz_target!(|data: String| {
    if let Ok(m) = ActivationManifest::from_json(&data) {
        let again = serde_json::to_string(&m).unwrap();
        assert_eq!(ActivationManifest::from_json(&again).unwrap(), m);
    }
});
