use serde::{Deserialize, Serialize};

use super::{FileLayout, WorkloadConfig};
use crate::features::IoType;
use crate::trace::Interface;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("grid file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("grid field `{0}` has an empty value list")]
    EmptyField(&'static str),
}

/// Value lists per workload dimension; the sweep is their cartesian product
/// minus infeasible points. Missing fields take the single value of
/// [`WorkloadConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub interface: Vec<Interface>,
    pub io_type: Vec<IoType>,
    pub transfer_size: Vec<u64>,
    pub ops_per_open: Vec<u32>,
    pub collective: Vec<bool>,
    pub fsync: Vec<bool>,
    pub fsync_per_write: Vec<bool>,
    pub preallocate: Vec<bool>,
    pub use_file_view: Vec<bool>,
    pub unique_dir: Vec<bool>,
    pub random_access: Vec<bool>,
    pub ranks: Vec<u32>,
    pub ranks_per_node: Vec<u32>,
    pub files: Vec<FileLayout>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid::single(&WorkloadConfig::default())
    }
}

const BOTH: [bool; 2] = [false, true];

impl Grid {
    pub fn single(c: &WorkloadConfig) -> Self {
        Grid {
            interface: vec![c.interface],
            io_type: vec![c.io_type],
            transfer_size: vec![c.transfer_size],
            ops_per_open: vec![c.ops_per_open],
            collective: vec![c.collective],
            fsync: vec![c.fsync],
            fsync_per_write: vec![c.fsync_per_write],
            preallocate: vec![c.preallocate],
            use_file_view: vec![c.use_file_view],
            unique_dir: vec![c.unique_dir],
            random_access: vec![c.random_access],
            ranks: vec![c.ranks],
            ranks_per_node: vec![c.ranks_per_node],
            files: vec![c.files],
        }
    }

    /// The standard sweep: every interface, flag and IO type, five transfer
    /// sizes from 4 KiB to 64 MiB, two op counts, 4 ranks on 2 nodes writing
    /// one file each.
    pub fn default_sweep() -> Self {
        Grid {
            interface: vec![Interface::Posix, Interface::MpiIo, Interface::Hdf5],
            io_type: vec![
                IoType::RO,
                IoType::WO,
                IoType::RAR,
                IoType::RAW,
                IoType::WAR,
                IoType::WAW,
            ],
            transfer_size: vec![4 << 10, 64 << 10, 1 << 20, 8 << 20, 64 << 20],
            ops_per_open: vec![4, 16],
            collective: BOTH.to_vec(),
            fsync: BOTH.to_vec(),
            fsync_per_write: BOTH.to_vec(),
            preallocate: BOTH.to_vec(),
            use_file_view: BOTH.to_vec(),
            unique_dir: BOTH.to_vec(),
            random_access: BOTH.to_vec(),
            ranks: vec![4],
            ranks_per_node: vec![2],
            files: vec![FileLayout::FilePerProcess],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, GridError> {
        let g: Grid = toml::from_str(text)?;
        g.check()?;
        Ok(g)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid serializes")
    }

    fn check(&self) -> Result<(), GridError> {
        let lens = [
            ("interface", self.interface.len()),
            ("io_type", self.io_type.len()),
            ("transfer_size", self.transfer_size.len()),
            ("ops_per_open", self.ops_per_open.len()),
            ("collective", self.collective.len()),
            ("fsync", self.fsync.len()),
            ("fsync_per_write", self.fsync_per_write.len()),
            ("preallocate", self.preallocate.len()),
            ("use_file_view", self.use_file_view.len()),
            ("unique_dir", self.unique_dir.len()),
            ("random_access", self.random_access.len()),
            ("ranks", self.ranks.len()),
            ("ranks_per_node", self.ranks_per_node.len()),
            ("files", self.files.len()),
        ];
        match lens.iter().find(|(_, n)| *n == 0) {
            Some((name, _)) => Err(GridError::EmptyField(name)),
            None => Ok(()),
        }
    }

    /// Number of points before the feasibility filter.
    pub fn product_len(&self) -> usize {
        [
            self.interface.len(),
            self.io_type.len(),
            self.transfer_size.len(),
            self.ops_per_open.len(),
            self.collective.len(),
            self.fsync.len(),
            self.fsync_per_write.len(),
            self.preallocate.len(),
            self.use_file_view.len(),
            self.unique_dir.len(),
            self.random_access.len(),
            self.ranks.len(),
            self.ranks_per_node.len(),
            self.files.len(),
        ]
        .iter()
        .product()
    }

    /// Every point of the product, first field varying slowest.
    pub fn product(&self) -> Vec<WorkloadConfig> {
        let mut out = vec![WorkloadConfig::default()];
        axis(&mut out, &self.interface, |c, v| c.interface = v);
        axis(&mut out, &self.io_type, |c, v| c.io_type = v);
        axis(&mut out, &self.transfer_size, |c, v| c.transfer_size = v);
        axis(&mut out, &self.ops_per_open, |c, v| c.ops_per_open = v);
        axis(&mut out, &self.collective, |c, v| c.collective = v);
        axis(&mut out, &self.fsync, |c, v| c.fsync = v);
        axis(&mut out, &self.fsync_per_write, |c, v| c.fsync_per_write = v);
        axis(&mut out, &self.preallocate, |c, v| c.preallocate = v);
        axis(&mut out, &self.use_file_view, |c, v| c.use_file_view = v);
        axis(&mut out, &self.unique_dir, |c, v| c.unique_dir = v);
        axis(&mut out, &self.random_access, |c, v| c.random_access = v);
        axis(&mut out, &self.ranks, |c, v| c.ranks = v);
        axis(&mut out, &self.ranks_per_node, |c, v| c.ranks_per_node = v);
        axis(&mut out, &self.files, |c, v| c.files = v);
        out
    }

    /// The feasible points of [`Self::product`], in product order.
    pub fn expand(&self) -> Vec<WorkloadConfig> {
        self.product().into_iter().filter(|c| c.feasibility().is_ok()).collect()
    }
}

fn axis<T: Copy>(configs: &mut Vec<WorkloadConfig>, values: &[T], set: impl Fn(&mut WorkloadConfig, T)) {
    *configs = configs
        .iter()
        .flat_map(|c| {
            values.iter().map(|&v| {
                let mut c = c.clone();
                set(&mut c, v);
                c
            })
        })
        .collect();
}
