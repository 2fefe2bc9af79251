//! IOR-style synthetic workloads and a two-tier storage model.

mod generate;
mod grid;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use generate::{generate_trace, generate_trace_on};
pub use grid::{Grid, GridError};

use crate::dataset::{build_dataset, Dataset, DatasetError, PairedRun, Tier};
use crate::features::{extract_all, FeatureError, FeatureOptions, FeatureSchema, IoType};
use crate::trace::{IOFrame, Interface, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileLayout {
    FilePerProcess,
    SharedFile,
}

impl FileLayout {
    pub fn as_str(self) -> &'static str {
        match self {
            FileLayout::FilePerProcess => "file_per_process",
            FileLayout::SharedFile => "shared_file",
        }
    }
}

/// One IOR-like run. Field names follow the training-data columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub interface: Interface,
    pub collective: bool,
    pub fsync: bool,
    pub fsync_per_write: bool,
    pub preallocate: bool,
    pub use_file_view: bool,
    pub unique_dir: bool,
    pub transfer_size: u64,
    pub ops_per_open: u32,
    pub io_type: IoType,
    pub random_access: bool,
    pub ranks: u32,
    pub ranks_per_node: u32,
    pub files: FileLayout,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            interface: Interface::Posix,
            collective: false,
            fsync: false,
            fsync_per_write: false,
            preallocate: false,
            use_file_view: false,
            unique_dir: false,
            transfer_size: 1 << 20,
            ops_per_open: 4,
            io_type: IoType::WO,
            random_access: false,
            ranks: 4,
            ranks_per_node: 2,
            files: FileLayout::FilePerProcess,
        }
    }
}

/// Direction of one open-close pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Read,
    Write,
}

impl WorkloadConfig {
    /// Structural validity: positive sizes and a concrete interface and IO
    /// type.
    pub fn validate(&self) -> Result<(), String> {
        if self.transfer_size == 0 {
            return Err("transfer_size must be positive".into());
        }
        if self.ranks == 0 || self.ranks_per_node == 0 || self.ops_per_open == 0 {
            return Err("ranks, ranks_per_node and ops_per_open must be positive".into());
        }
        if self.interface == Interface::Other {
            return Err("interface must be POSIX, MPIIO or HDF5".into());
        }
        if self.io_type == IoType::MIXED {
            return Err("io_type must be one of RO, WO, RAR, RAW, WAR, WAW".into());
        }
        Ok(())
    }

    /// Open-close passes each rank performs, in order. Reuse types revisit
    /// the same region so the dominant reuse class is the requested one.
    pub fn passes(&self) -> &'static [Pass] {
        use Pass::{Read as R, Write as W};
        match self.io_type {
            IoType::RO => &[R],
            IoType::WO => &[W],
            IoType::RAW => &[W, R],
            IoType::RAR => &[W, R, R, R],
            IoType::WAR => &[R, W],
            IoType::WAW => &[W, W, W, R],
            IoType::MIXED => &[],
        }
    }

    pub fn has_writes(&self) -> bool {
        self.passes().contains(&Pass::Write)
    }

    /// Node index of `rank` under block placement of `ranks_per_node`.
    pub fn node_of(&self, rank: u32) -> u32 {
        rank / self.ranks_per_node
    }

    fn ranks_on_node(&self, node: u32) -> u32 {
        let first = node * self.ranks_per_node;
        self.ranks.saturating_sub(first).min(self.ranks_per_node)
    }

    /// Whether the trace realizes every categorical field, so features
    /// extracted from it read back the config. Returns the first violated
    /// rule.
    pub fn feasibility(&self) -> Result<(), String> {
        self.validate()?;
        let mpi = self.interface == Interface::MpiIo;
        if self.collective && self.interface == Interface::Posix {
            return Err("collective needs MPIIO or HDF5".into());
        }
        if self.use_file_view && !mpi {
            return Err("use_file_view needs MPIIO".into());
        }
        if self.preallocate && !(mpi && self.has_writes()) {
            return Err("preallocate needs MPIIO writes".into());
        }
        if self.fsync && self.interface != Interface::Posix {
            return Err("fsync needs POSIX".into());
        }
        if self.fsync_per_write && !(self.fsync && self.has_writes()) {
            return Err("fsync_per_write needs fsync and writes".into());
        }
        if self.unique_dir && self.files != FileLayout::FilePerProcess {
            return Err("unique_dir needs file_per_process".into());
        }
        if !self.unique_dir && self.ranks < 2 {
            return Err("a shared directory needs at least 2 ranks to be observable".into());
        }
        // per-rank stream: (ops - 1) transitions per pass plus one backward
        // jump between passes
        let p = self.passes().len() as u64;
        let o = self.ops_per_open as u64;
        let transitions = p * o - 1;
        if self.random_access {
            if o < 2 {
                return Err("random access needs at least 2 ops per open".into());
            }
        } else if transitions > 0 && 2 * (p - 1) > transitions {
            return Err("too few ops per open for a sequential stream".into());
        }
        Ok(())
    }

    /// Stable identifier used as the dataset `source`.
    pub fn id(&self) -> String {
        let b = |v: bool| if v { 1 } else { 0 };
        format!(
            "{};{};ts={};ops={};coll={};fsync={};fpw={};prealloc={};view={};udir={};rand={};ranks={};rpn={};{}",
            self.interface,
            self.io_type,
            self.transfer_size,
            self.ops_per_open,
            b(self.collective),
            b(self.fsync),
            b(self.fsync_per_write),
            b(self.preallocate),
            b(self.use_file_view),
            b(self.unique_dir),
            b(self.random_access),
            self.ranks,
            self.ranks_per_node,
            self.files.as_str(),
        )
    }
}

impl fmt::Display for WorkloadConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfsParams {
    /// Bytes per second at saturation.
    pub peak_bw: f64,
    /// Transfer size reaching half of `peak_bw`.
    pub latency_knee: f64,
    pub read_multiplier: f64,
    /// Seconds per open on a metadata-leader node.
    pub open_cost_fast: f64,
    /// Seconds per open elsewhere, when the directory is contended.
    pub open_cost_slow: f64,
    pub metadata_leader_nodes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BbParams {
    pub peak_bw: f64,
    pub latency_knee: f64,
    pub read_multiplier: f64,
    /// Seconds per open; node-local storage has no leader imbalance.
    pub open_cost: f64,
    /// Cached bytes per node; each rank gets an equal share of its node's.
    pub cache_capacity: f64,
    /// Ceiling on bandwidth for bytes beyond the cache or bypassing it.
    pub post_cache_bw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageParams {
    pub pfs: PfsParams,
    pub bb: BbParams,
}

const KIB: f64 = 1024.0;
const MIB: f64 = 1024.0 * KIB;
const GIB: f64 = 1024.0 * MIB;

impl Default for StorageParams {
    fn default() -> Self {
        StorageParams {
            pfs: PfsParams {
                peak_bw: 2.0 * GIB,
                latency_knee: 4.0 * MIB,
                read_multiplier: 1.2,
                open_cost_fast: 0.5e-3,
                open_cost_slow: 20e-3,
                metadata_leader_nodes: 1,
            },
            bb: BbParams {
                peak_bw: 1.0 * GIB,
                latency_knee: 64.0 * KIB,
                read_multiplier: 1.8,
                open_cost: 0.2e-3,
                cache_capacity: 2.0 * GIB,
                post_cache_bw: 200.0 * MIB,
            },
        }
    }
}

impl StorageParams {
    pub fn validate(&self) -> Result<(), String> {
        let p = &self.pfs;
        let b = &self.bb;
        let positive = [
            ("pfs.peak_bw", p.peak_bw),
            ("pfs.latency_knee", p.latency_knee),
            ("pfs.open_cost_fast", p.open_cost_fast),
            ("pfs.open_cost_slow", p.open_cost_slow),
            ("bb.peak_bw", b.peak_bw),
            ("bb.latency_knee", b.latency_knee),
            ("bb.open_cost", b.open_cost),
            ("bb.cache_capacity", b.cache_capacity),
            ("bb.post_cache_bw", b.post_cache_bw),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("pfs.read_multiplier", p.read_multiplier),
            ("bb.read_multiplier", b.read_multiplier),
        ] {
            if !v.is_finite() || v < 1.0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    /// Every rate times `c` and every fixed cost divided by `c`: the same
    /// hardware running `c` times faster.
    pub fn speed_scaled(&self, c: f64) -> StorageParams {
        let mut s = *self;
        s.pfs.peak_bw *= c;
        s.pfs.open_cost_fast /= c;
        s.pfs.open_cost_slow /= c;
        s.bb.peak_bw *= c;
        s.bb.post_cache_bw *= c;
        s.bb.open_cost /= c;
        s
    }
}

/// Simulated timing of one rank: per pass, the open cost and each op's time.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RankTiming {
    pub passes: Vec<(f64, Vec<f64>)>,
}

fn saturation(peak: f64, ts: f64, knee: f64) -> f64 {
    peak * ts / (ts + knee)
}

pub(crate) fn rank_timing(config: &WorkloadConfig, tier: Tier, params: &StorageParams, rank: u32) -> RankTiming {
    let ts = config.transfer_size as f64;
    let node = config.node_of(rank);
    let mut passes = Vec::new();
    match tier {
        Tier::PFS => {
            let p = &params.pfs;
            let contended = config.unique_dir || (config.files == FileLayout::FilePerProcess && config.ranks > 1);
            let open = if contended && node >= p.metadata_leader_nodes {
                p.open_cost_slow
            } else {
                p.open_cost_fast
            };
            for &pass in config.passes() {
                let mult = if pass == Pass::Read { p.read_multiplier } else { 1.0 };
                let t = ts / (saturation(p.peak_bw, ts, p.latency_knee) * mult);
                passes.push((open, vec![t; config.ops_per_open as usize]));
            }
        }
        Tier::BB => {
            let b = &params.bb;
            let share = b.cache_capacity / config.ranks_on_node(node) as f64;
            let mut used = 0.0;
            for &pass in config.passes() {
                let mult = if pass == Pass::Read { b.read_multiplier } else { 1.0 };
                let eff = saturation(b.peak_bw, ts, b.latency_knee) * mult;
                let slow = eff.min(b.post_cache_bw);
                let bypass = pass == Pass::Write && config.fsync_per_write;
                let ops = (0..config.ops_per_open)
                    .map(|_| {
                        if bypass {
                            return ts / slow;
                        }
                        let cached = (share - used).clamp(0.0, ts);
                        used += ts;
                        cached / eff + (ts - cached) / slow
                    })
                    .collect();
                passes.push((b.open_cost, ops));
            }
        }
    }
    RankTiming { passes }
}

/// Aggregate bandwidth: all data bytes over the summed per-rank time of
/// opens and transfers.
pub fn simulate_bandwidth(config: &WorkloadConfig, tier: Tier, params: &StorageParams) -> f64 {
    let per_rank_bytes = config.transfer_size as f64 * config.ops_per_open as f64 * config.passes().len() as f64;
    let mut time = 0.0;
    for rank in 0..config.ranks {
        for (open, ops) in rank_timing(config, tier, params, rank).passes {
            time += open + ops.iter().sum::<f64>();
        }
    }
    per_rank_bytes * config.ranks as f64 / time
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("empty grid")]
    EmptyGrid,
    #[error("config {index} ({config}): {reason}")]
    Config {
        index: usize,
        config: String,
        reason: String,
    },
    #[error("invalid storage params: {0}")]
    Params(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Runs each config on both tiers and extracts its features from a generated
/// trace with seed `seed + index`.
pub fn sweep_runs(grid: &[WorkloadConfig], params: &StorageParams, seed: u64) -> Result<Vec<PairedRun>, SynthError> {
    if grid.is_empty() {
        return Err(SynthError::EmptyGrid);
    }
    params.validate().map_err(SynthError::Params)?;
    grid.iter()
        .enumerate()
        .map(|(index, config)| {
            let bad = |reason: String| SynthError::Config {
                index,
                config: config.id(),
                reason,
            };
            config.validate().map_err(bad)?;
            let events = generate_trace_on(config, Tier::PFS, params, seed.wrapping_add(index as u64));
            let frame = IOFrame::build(events)?;
            let features = extract_all(&frame, FeatureOptions::default())?
                .into_iter()
                .next()
                .ok_or_else(|| bad("trace has no data events".into()))?;
            Ok(PairedRun {
                features,
                bw_pfs: simulate_bandwidth(config, Tier::PFS, params),
                bw_bb: simulate_bandwidth(config, Tier::BB, params),
                source: config.id(),
            })
        })
        .collect()
}

pub fn sweep(grid: &[WorkloadConfig], params: &StorageParams, schema: &FeatureSchema) -> Result<Dataset, SynthError> {
    sweep_seeded(grid, params, schema, 0)
}

pub fn sweep_seeded(
    grid: &[WorkloadConfig],
    params: &StorageParams,
    schema: &FeatureSchema,
    seed: u64,
) -> Result<Dataset, SynthError> {
    Ok(build_dataset(schema, &sweep_runs(grid, params, seed)?)?)
}
