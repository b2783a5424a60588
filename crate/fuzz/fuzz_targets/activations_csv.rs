#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::metric::{correlation_matrix, to_distance, ActivationMatrix, DegeneratePolicy};

fuzz_target!(|data: &[u8]| {
    let Ok(act) = ActivationMatrix::from_csv_reader(data) else {
        return;
    };
    assert!(act.n_samples() >= 2);
    assert!(act.values().iter().all(|x| x.is_finite()));
    if act.n_nodes() > 64 {
        return;
    }
    if let Ok((corr, kept)) = correlation_matrix(&act, DegeneratePolicy::DropNode) {
        assert_eq!(corr.n_nodes(), kept.len());
        let dist = to_distance(&corr);
        for i in 0..dist.n() {
            assert_eq!(dist.get(i, i), 0.0);
            for j in 0..dist.n() {
                let d = dist.get(i, j);
                assert!((0.0..=1.0).contains(&d), "{d}");
                assert_eq!(d, dist.get(j, i));
            }
        }
    }
});
