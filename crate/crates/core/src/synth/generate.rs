use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rank_timing, FileLayout, Pass, StorageParams, WorkloadConfig};
use crate::dataset::Tier;
use crate::features::classify_stream;
use crate::trace::{Interface, Timestamp, TraceEvent};

struct Names {
    open: &'static str,
    create: &'static str,
    read: &'static str,
    write: &'static str,
    close: &'static str,
}

fn names(config: &WorkloadConfig) -> Names {
    match (config.interface, config.collective) {
        (Interface::MpiIo, true) => Names {
            open: "MPI_File_open",
            create: "MPI_File_open",
            read: "MPI_File_read_at_all",
            write: "MPI_File_write_at_all",
            close: "MPI_File_close",
        },
        (Interface::MpiIo, false) => Names {
            open: "MPI_File_open",
            create: "MPI_File_open",
            read: "MPI_File_read_at",
            write: "MPI_File_write_at",
            close: "MPI_File_close",
        },
        (Interface::Hdf5, _) => Names {
            open: "H5Fopen",
            create: "H5Fcreate",
            read: "H5Dread",
            write: "H5Dwrite",
            close: "H5Fclose",
        },
        _ => Names {
            open: "open",
            create: "open",
            read: "pread",
            write: "pwrite",
            close: "close",
        },
    }
}

fn path_of(config: &WorkloadConfig, rank: u32) -> String {
    match (config.files, config.unique_dir) {
        (FileLayout::SharedFile, _) => "/ior/testfile".to_owned(),
        (FileLayout::FilePerProcess, true) => format!("/ior/rank{rank:05}/testfile"),
        (FileLayout::FilePerProcess, false) => format!("/ior/testfile.{rank:05}"),
    }
}

/// Slot order per pass. Random orders are reshuffled until more than half of
/// the rank's transitions move backward.
fn slot_orders(config: &WorkloadConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    let ops = config.ops_per_open as u64;
    let sequential: Vec<u64> = (0..ops).collect();
    let passes = config.passes().len();
    if !config.random_access || ops < 2 {
        return vec![sequential; passes];
    }
    loop {
        let orders: Vec<Vec<u64>> = (0..passes)
            .map(|_| {
                let mut o = sequential.clone();
                o.shuffle(rng);
                o
            })
            .collect();
        let counts = classify_stream(orders.iter().flatten().map(|&s| (s, 1)));
        if counts.random_fraction() > 0.5 {
            return orders;
        }
    }
}

/// [`generate_trace_on`] for the PFS tier under default parameters.
pub fn generate_trace(config: &WorkloadConfig, seed: u64) -> Vec<TraceEvent> {
    generate_trace_on(config, Tier::PFS, &StorageParams::default(), seed)
}

/// Events of every rank running `config` on `tier`. Open and data durations
/// come from the storage model; other calls take no time. Ranks start
/// together at time zero.
pub fn generate_trace_on(config: &WorkloadConfig, tier: Tier, params: &StorageParams, seed: u64) -> Vec<TraceEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = names(config);
    let ts = config.transfer_size;
    let ops = config.ops_per_open as u64;
    let mut events = Vec::new();
    for rank in 0..config.ranks {
        let node = config.node_of(rank);
        let path = path_of(config, rank);
        let base = match config.files {
            FileLayout::SharedFile => rank as u64 * ops * ts,
            FileLayout::FilePerProcess => 0,
        };
        let timing = rank_timing(config, tier, params, rank);
        let orders = slot_orders(config, &mut rng);
        let mut clock = 0u64;
        let mut emit = |function: &str, secs: f64, io: Option<u64>| {
            let dur = (secs * 1e9).round() as u64;
            let mut e = TraceEvent::new(
                events.len() as u64,
                rank,
                function,
                Some(&path),
                Timestamp::from_nanos(clock),
                Timestamp::from_nanos(clock + dur),
            )
            .with_node(node);
            if let Some(offset) = io {
                e = e.with_io(offset, ts);
            }
            clock += dur;
            events.push(e);
        };
        let mut created = false;
        for (i, &pass) in config.passes().iter().enumerate() {
            let (open_cost, op_times) = &timing.passes[i];
            let open = if !created && pass == Pass::Write {
                n.create
            } else {
                n.open
            };
            created = true;
            emit(open, *open_cost, None);
            if config.collective && config.interface == Interface::Hdf5 {
                emit("H5Pset_dxpl_mpio", 0.0, None);
            }
            if config.use_file_view {
                emit("MPI_File_set_view", 0.0, None);
            }
            if config.preallocate && i == 0 {
                emit("MPI_File_preallocate", 0.0, None);
            }
            for (slot, &t) in orders[i].iter().zip(op_times) {
                let func = if pass == Pass::Write { n.write } else { n.read };
                emit(func, t, Some(base + slot * ts));
                if pass == Pass::Write && config.fsync_per_write {
                    emit("fsync", 0.0, None);
                }
            }
            if config.fsync && !config.fsync_per_write {
                emit("fsync", 0.0, None);
            }
            emit(n.close, 0.0, None);
        }
    }
    events
}
