#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::gap::{fit_gap_model, read_records, write_records, FeatureSet};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_records(data) else {
        return;
    };
    let mut out = Vec::new();
    write_records(&mut out, &records).unwrap();
    assert_eq!(read_records(out.as_slice()).unwrap(), records);
    for fs in FeatureSet::ALL {
        if let Ok(model) = fit_gap_model(&records, fs) {
            assert!(model.c1.is_finite() && model.c2.is_finite() && model.c3.is_finite());
        }
    }
});
