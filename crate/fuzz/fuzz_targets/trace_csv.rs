#![no_main]
use libfuzzer_sys::fuzz_target;
use topogap::earlystop::{read_trace, write_trace_row, PeakTrace};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_trace(data) else {
        return;
    };
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        write_trace_row(&mut out, row, i == 0).unwrap();
    }
    if !rows.is_empty() {
        assert_eq!(read_trace(out.as_slice()).unwrap(), rows);
    }
    let _ = PeakTrace::from_rows(1, &rows).decision();
});
