//! Function-name classification.
//!
//! Lookup order for a function name:
//!
//! 1. An exact match in [`FUNCTION_TABLE`].
//! 2. Prefix rules: `MPI_File_*` is MPIIO and `H5*` is HDF5. The category comes
//!    from the verb in the remainder of the name (see [`verb_family`]).
//! 3. Anything else is `(other, OTHER)`.
//!
//! The metadata category is exactly the open, close, sync, stat, seek and
//! truncate families. Directory operations (`mkdir`, `unlink`, ...) are kept as
//! `other` so they never enter bandwidth or metadata-time sums.

use super::{Category, Interface};

/// Finer-grained role of a function than its [`Category`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Open,
    Close,
    Sync,
    Stat,
    Seek,
    /// Truncate and preallocate calls.
    Truncate,
    Read,
    Write,
    /// `MPI_File_set_view`.
    SetView,
    /// Collective-transfer property setters (`H5Pset_dxpl_mpio`).
    CollectiveHint,
    Other,
}

impl Family {
    pub fn category(self) -> Category {
        match self {
            Family::Open | Family::Close | Family::Sync | Family::Stat | Family::Seek | Family::Truncate => {
                Category::Metadata
            }
            Family::Read => Category::Read,
            Family::Write => Category::Write,
            Family::SetView | Family::CollectiveHint | Family::Other => Category::Other,
        }
    }
}

/// Exact-name entries. Everything not listed here falls through to the
/// prefix rules.
pub const FUNCTION_TABLE: &[(&str, Family, Interface)] = &[
    // POSIX / libc
    ("open", Family::Open, Interface::Posix),
    ("open64", Family::Open, Interface::Posix),
    ("openat", Family::Open, Interface::Posix),
    ("creat", Family::Open, Interface::Posix),
    ("creat64", Family::Open, Interface::Posix),
    ("fopen", Family::Open, Interface::Posix),
    ("fopen64", Family::Open, Interface::Posix),
    ("fdopen", Family::Open, Interface::Posix),
    ("close", Family::Close, Interface::Posix),
    ("fclose", Family::Close, Interface::Posix),
    ("read", Family::Read, Interface::Posix),
    ("pread", Family::Read, Interface::Posix),
    ("pread64", Family::Read, Interface::Posix),
    ("readv", Family::Read, Interface::Posix),
    ("preadv", Family::Read, Interface::Posix),
    ("preadv2", Family::Read, Interface::Posix),
    ("fread", Family::Read, Interface::Posix),
    ("write", Family::Write, Interface::Posix),
    ("pwrite", Family::Write, Interface::Posix),
    ("pwrite64", Family::Write, Interface::Posix),
    ("writev", Family::Write, Interface::Posix),
    ("pwritev", Family::Write, Interface::Posix),
    ("pwritev2", Family::Write, Interface::Posix),
    ("fwrite", Family::Write, Interface::Posix),
    ("fsync", Family::Sync, Interface::Posix),
    ("fdatasync", Family::Sync, Interface::Posix),
    ("fflush", Family::Sync, Interface::Posix),
    ("sync", Family::Sync, Interface::Posix),
    ("syncfs", Family::Sync, Interface::Posix),
    ("msync", Family::Sync, Interface::Posix),
    ("stat", Family::Stat, Interface::Posix),
    ("stat64", Family::Stat, Interface::Posix),
    ("lstat", Family::Stat, Interface::Posix),
    ("lstat64", Family::Stat, Interface::Posix),
    ("fstat", Family::Stat, Interface::Posix),
    ("fstat64", Family::Stat, Interface::Posix),
    ("fstatat", Family::Stat, Interface::Posix),
    ("statx", Family::Stat, Interface::Posix),
    ("__xstat", Family::Stat, Interface::Posix),
    ("__lxstat", Family::Stat, Interface::Posix),
    ("__fxstat", Family::Stat, Interface::Posix),
    ("lseek", Family::Seek, Interface::Posix),
    ("lseek64", Family::Seek, Interface::Posix),
    ("fseek", Family::Seek, Interface::Posix),
    ("fseeko", Family::Seek, Interface::Posix),
    ("ftell", Family::Seek, Interface::Posix),
    ("rewind", Family::Seek, Interface::Posix),
    ("truncate", Family::Truncate, Interface::Posix),
    ("truncate64", Family::Truncate, Interface::Posix),
    ("ftruncate", Family::Truncate, Interface::Posix),
    ("ftruncate64", Family::Truncate, Interface::Posix),
    ("fallocate", Family::Truncate, Interface::Posix),
    ("posix_fallocate", Family::Truncate, Interface::Posix),
    ("mkdir", Family::Other, Interface::Posix),
    ("rmdir", Family::Other, Interface::Posix),
    ("unlink", Family::Other, Interface::Posix),
    ("rename", Family::Other, Interface::Posix),
    ("access", Family::Other, Interface::Posix),
    ("opendir", Family::Other, Interface::Posix),
    ("closedir", Family::Other, Interface::Posix),
    ("mmap", Family::Other, Interface::Posix),
    ("munmap", Family::Other, Interface::Posix),
    ("dup", Family::Other, Interface::Posix),
    ("dup2", Family::Other, Interface::Posix),
    ("fcntl", Family::Other, Interface::Posix),
    // MPI-IO entries that the verb rules would get wrong
    ("MPI_File_set_view", Family::SetView, Interface::MpiIo),
    ("MPI_File_get_view", Family::Other, Interface::MpiIo),
    ("MPI_File_preallocate", Family::Truncate, Interface::MpiIo),
    ("MPI_File_set_size", Family::Truncate, Interface::MpiIo),
    ("MPI_File_get_size", Family::Stat, Interface::MpiIo),
    ("MPI_File_get_position", Family::Seek, Interface::MpiIo),
    ("MPI_File_delete", Family::Other, Interface::MpiIo),
    // HDF5
    ("H5Fcreate", Family::Open, Interface::Hdf5),
    ("H5Fopen", Family::Open, Interface::Hdf5),
    ("H5Fclose", Family::Close, Interface::Hdf5),
    ("H5Fflush", Family::Sync, Interface::Hdf5),
    ("H5Dread", Family::Read, Interface::Hdf5),
    ("H5Dwrite", Family::Write, Interface::Hdf5),
    ("H5Dset_extent", Family::Truncate, Interface::Hdf5),
    ("H5Pset_dxpl_mpio", Family::CollectiveHint, Interface::Hdf5),
];

/// Category of a verb found in the tail of an `MPI_File_*` or `H5*` name.
/// Read/write verbs are checked before the metadata verbs.
fn verb_family(tail: &str) -> Family {
    let tail = tail.to_ascii_lowercase();
    if tail.contains("read") {
        Family::Read
    } else if tail.contains("write") {
        Family::Write
    } else if tail.contains("open") || tail.contains("create") {
        Family::Open
    } else if tail.contains("close") {
        Family::Close
    } else if tail.contains("sync") || tail.contains("flush") {
        Family::Sync
    } else if tail.contains("seek") {
        Family::Seek
    } else if tail.contains("stat") {
        Family::Stat
    } else if tail.contains("truncate") || tail.contains("prealloc") {
        Family::Truncate
    } else {
        Family::Other
    }
}

/// Family and interface for a function name.
pub fn function_info(function: &str) -> (Family, Interface) {
    if let Some((_, family, interface)) = FUNCTION_TABLE.iter().find(|(n, _, _)| *n == function) {
        return (*family, *interface);
    }
    if let Some(tail) = function.strip_prefix("MPI_File_") {
        return (verb_family(tail), Interface::MpiIo);
    }
    if let Some(tail) = function.strip_prefix("H5") {
        if !tail.is_empty() {
            return (verb_family(tail), Interface::Hdf5);
        }
    }
    (Family::Other, Interface::Other)
}

/// Maps a function name to its `(category, interface)` pair. Unknown names map
/// to `(other, OTHER)`.
pub fn classify_function(function: &str) -> (Category, Interface) {
    let (family, interface) = function_info(function);
    (family.category(), interface)
}

/// True for MPI-IO collective data calls (`*_all`, `*_all_begin`,
/// `*_all_end`, `*_ordered*`) and for HDF5 collective-transfer setters.
pub fn is_collective(function: &str) -> bool {
    if let Some(tail) = function.strip_prefix("MPI_File_") {
        let data_call = tail.contains("read") || tail.contains("write");
        return data_call
            && (tail.ends_with("_all")
                || tail.ends_with("_all_begin")
                || tail.ends_with("_all_end")
                || tail.contains("_ordered"));
    }
    matches!(function_info(function).0, Family::CollectiveHint)
}
