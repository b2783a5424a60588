#![no_main]
#![allow(clippy::needless_range_loop)]
use libfuzzer_sys::fuzz_target;
use topogap::filtration::{filtration_grid, vietoris_rips};
use topogap::homology::{betti_curve, brute_force_betti, persistent_homology, BRUTE_FORCE_LIMIT};
use topogap::metric::DistanceMatrix;

// first byte picks the vertex count, the rest fill the upper triangle on a
// 16-level grid so ties are common
fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else {
        return;
    };
    let n = 1 + head as usize % BRUTE_FORCE_LIMIT;
    let mut rows = vec![vec![0.0; n]; n];
    let mut bytes = rest.iter().cycle();
    if rest.is_empty() && n > 1 {
        return;
    }
    for u in 0..n {
        for v in (u + 1)..n {
            let d = (*bytes.next().unwrap() % 16) as f64 / 15.0;
            rows[u][v] = d;
            rows[v][u] = d;
        }
    }
    let dist = DistanceMatrix::from_rows(rows).unwrap();
    let complex = vietoris_rips(&dist, 1.0, 2).unwrap();
    let (h0, h1) = persistent_homology(&complex);
    assert_eq!(h0.bars.len(), n);
    assert_eq!(h0.essential_count(), 1);
    for bar in h0.bars.iter().chain(&h1.bars) {
        assert!(bar.death >= bar.birth);
    }
    let grid = filtration_grid(&complex, usize::MAX);
    let b0 = betti_curve(&h0, &grid);
    let b1 = betti_curve(&h1, &grid);
    assert!(b0.counts.windows(2).all(|w| w[1] <= w[0]));
    for (k, &eps) in grid.iter().enumerate() {
        assert_eq!((b0.counts[k], b1.counts[k]), brute_force_betti(&dist, eps).unwrap());
    }
});
