#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::metric::DistanceMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(dist) = DistanceMatrix::from_csv_reader(data) {
        for i in 0..dist.n() {
            assert_eq!(dist.get(i, i), 0.0);
            for j in 0..i {
                assert_eq!(dist.get(i, j), dist.get(j, i));
                assert!(dist.get(i, j) >= 0.0);
            }
        }
    }
});
