//! CSV and terminal renderings of the analysis tables. Absent values are `-`.

use std::fmt::Write as _;
use std::io::Write;

use super::{BandwidthTable, SharingReport, TimeTable};

fn opt_rank(rank: Option<u32>) -> String {
    rank.map_or_else(|| "-".to_owned(), |r| r.to_string())
}

/// Columns: `file,rank,bytes,io_time,bandwidth,display`.
pub fn write_csv_bandwidth<W: Write>(out: W, table: &BandwidthTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["file", "rank", "bytes", "io_time", "bandwidth", "display"])?;
    for r in &table.rows {
        w.write_record([
            r.file.clone(),
            opt_rank(r.rank),
            r.bytes.to_string(),
            r.io_time.to_string(),
            r.bandwidth.map_or_else(|| "-".to_owned(), |b| b.to_string()),
            r.display.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `file,rank,read_time,write_time,metadata_time,total_io_time,metadata_fraction`.
pub fn write_csv_time<W: Write>(out: W, table: &TimeTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "file",
        "rank",
        "read_time",
        "write_time",
        "metadata_time",
        "total_io_time",
        "metadata_fraction",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.file.clone(),
            r.rank.to_string(),
            r.read_time.to_string(),
            r.write_time.to_string(),
            r.metadata_time.to_string(),
            r.total_io_time.to_string(),
            r.metadata_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `file,num_ranks,ranks` with ranks joined by `;`.
pub fn write_csv_sharing<W: Write>(out: W, report: &SharingReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["file", "num_ranks", "ranks"])?;
    for r in &report.rows {
        let ranks: Vec<String> = r.ranks.iter().map(u32::to_string).collect();
        w.write_record([r.file.clone(), r.num_ranks.to_string(), ranks.join(";")])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table for terminals.
pub trait Pretty {
    fn pretty(&self) -> String;
}

impl Pretty for BandwidthTable {
    fn pretty(&self) -> String {
        let mut s = String::new();
        let mut last_file: Option<&str> = None;
        for r in &self.rows {
            match r.rank {
                Some(rank) => {
                    if last_file != Some(r.file.as_str()) {
                        let _ = writeln!(s, "{}", r.file);
                        last_file = Some(&r.file);
                    }
                    let _ = writeln!(s, "  rank {rank:>6}  {:>14} B  {:>14}", r.bytes, r.display);
                }
                None => {
                    let _ = writeln!(s, "{}  {:>14} B  {:>14}", r.file, r.bytes, r.display);
                }
            }
        }
        s
    }
}

impl Pretty for TimeTable {
    fn pretty(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<40} {:>6} {:>12} {:>12} {:>12} {:>8}",
            "file", "rank", "read s", "write s", "meta s", "meta %"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<40} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>7.1}%",
                r.file,
                r.rank,
                r.read_time,
                r.write_time,
                r.metadata_time,
                r.metadata_fraction * 100.0
            );
        }
        s
    }
}

impl Pretty for SharingReport {
    fn pretty(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "{:<40} {:>6} ranks", r.file, r.num_ranks);
        }
        s
    }
}
