#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::gap::GapModel;

fuzz_target!(|data: String| {
    if let Ok(model) = GapModel::from_json(&data) {
        let text = serde_json::to_string(&model).unwrap();
        assert_eq!(GapModel::from_json(&text).unwrap(), model);
        let _ = model.predict(0.5, 0.5);
    }
});
