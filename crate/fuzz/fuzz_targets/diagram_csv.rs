#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::homology::DiagramSet;

fuzz_target!(|data: &[u8]| {
    let Ok(set) = DiagramSet::from_csv_reader(data) else {
        return;
    };
    for diag in &set.diagrams {
        for bar in &diag.bars {
            assert!(bar.death >= bar.birth);
        }
    }
    let mut out = Vec::new();
    set.write_csv(&mut out, &[]).unwrap();
    let back = DiagramSet::from_csv_reader(out.as_slice()).unwrap();
    assert_eq!(back.eps_max.to_bits(), set.eps_max.to_bits());
    for (a, b) in set.diagrams.iter().zip(&back.diagrams) {
        assert_eq!(a.bars, b.bars);
    }
});
