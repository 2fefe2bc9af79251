#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tierlens::trace::{Timestamp, TraceEvent};

pub const FILES: [&str; 5] = ["/a/x", "/a/y", "/b/z", "/c/w.h5", "/d/v"];
const FUNCS: [&str; 14] = [
    "open",
    "close",
    "pread",
    "pwrite",
    "read",
    "write",
    "lseek",
    "fsync",
    "stat",
    "mkdir",
    "MPI_File_write_at_all",
    "MPI_File_read_at",
    "H5Dwrite",
    "ftruncate",
];

/// Random events over 4 ranks and 5 files; some metadata calls carry no file.
/// Data events always have bytes and offsets.
pub fn random_events(n: usize, seed: u64) -> Vec<TraceEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let rank = rng.random_range(0..4);
            let func = FUNCS[rng.random_range(0..FUNCS.len())];
            let start = rng.random_range(0..1_000_000_000u64);
            let dur = rng.random_range(0..5_000_000u64);
            let file = if rng.random_bool(0.05) && (func == "stat" || func == "mkdir") {
                None
            } else {
                Some(FILES[rng.random_range(0..FILES.len())])
            };
            let e = TraceEvent::new(
                i as u64 * 3 + 1,
                rank,
                func,
                file,
                Timestamp::from_nanos(start),
                Timestamp::from_nanos(start + dur),
            )
            .with_node(rank / 2);
            if e.category.is_data() {
                e.with_io(rng.random_range(0..1 << 20), rng.random_range(0..1 << 16))
            } else {
                e
            }
        })
        .collect()
}
