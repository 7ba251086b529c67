//! File-backed curve tables.
//!
//! Format: CSV with header `config_id,seed,epoch,valid,test`, UTF-8, `.`
//! decimal separator, epochs contiguous from 1 for every (config, seed)
//! pair, seeds contiguous from 0 with the same count for every config.
//! Values round-trip bit-exactly (shortest-representation float printing).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Benchmark, HpConfig, HpDimension, HpSpace};
use crate::{Error, Result};

pub const TABLE_HEADER: &str = "config_id,seed,epoch,valid,test";

/// In-memory curve table: `config_id -> [seed][epoch-1] -> (valid, test)`.
#[derive(Debug, Clone)]
pub struct CurveTable {
    z_max: usize,
    n_seeds: u64,
    curves: BTreeMap<String, Vec<Vec<(f64, f64)>>>,
}

impl CurveTable {
    pub fn z_max(&self) -> usize {
        self.z_max
    }

    pub fn n_seeds(&self) -> u64 {
        self.n_seeds
    }

    pub fn config_ids(&self) -> impl Iterator<Item = &str> {
        self.curves.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Stored values for one (config, seed, epoch), bit-exact.
    pub fn get(&self, config_id: &str, seed: u64, epoch: usize) -> Result<(f64, f64)> {
        let missing = || Error::MissingCurve {
            config_id: config_id.to_string(),
            seed,
            epoch,
        };
        let seeds = self.curves.get(config_id).ok_or_else(missing)?;
        let curve = seeds.get(seed as usize).ok_or_else(missing)?;
        if epoch < 1 {
            return Err(missing());
        }
        curve.get(epoch - 1).copied().ok_or_else(missing)
    }
}

fn parse_row(line: &str, row: usize) -> Result<(String, u64, usize, f64, f64)> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 5 {
        return Err(Error::TableFormat {
            row,
            message: format!("expected 5 fields, got {}", fields.len()),
        });
    }
    let config_id = fields[0].to_string();
    if config_id.is_empty() {
        return Err(Error::TableFormat {
            row,
            message: "empty config_id".into(),
        });
    }
    let seed: u64 = fields[1].parse().map_err(|_| Error::TableFormat {
        row,
        message: format!("bad seed {:?}", fields[1]),
    })?;
    let epoch: usize = fields[2].parse().map_err(|_| Error::TableFormat {
        row,
        message: format!("bad epoch {:?}", fields[2]),
    })?;
    if epoch < 1 {
        return Err(Error::TableFormat {
            row,
            message: "epoch must be >= 1".into(),
        });
    }
    let valid: f64 = fields[3].parse().map_err(|_| Error::TableFormat {
        row,
        message: format!("bad valid value {:?}", fields[3]),
    })?;
    let test: f64 = fields[4].parse().map_err(|_| Error::TableFormat {
        row,
        message: format!("bad test value {:?}", fields[4]),
    })?;
    if !valid.is_finite() || !test.is_finite() {
        return Err(Error::TableFormat {
            row,
            message: "non-finite value".into(),
        });
    }
    Ok((config_id, seed, epoch, valid, test))
}

/// Parses a curve table, validating the format contract. Row numbers in
/// errors are 1-based file lines (the header is line 1).
pub fn read_curve_table(reader: impl BufRead) -> Result<CurveTable> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::TableStructure("empty file".into()))?;
    if header.trim_end() != TABLE_HEADER {
        return Err(Error::TableFormat {
            row: 1,
            message: format!("bad header {:?}, expected {:?}", header, TABLE_HEADER),
        });
    }

    // (config, seed) -> epoch -> (valid, test)
    let mut groups: BTreeMap<(String, u64), BTreeMap<usize, (f64, f64)>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (config_id, seed, epoch, valid, test) = parse_row(&line, row)?;
        let group = groups.entry((config_id.clone(), seed)).or_default();
        if group.insert(epoch, (valid, test)).is_some() {
            return Err(Error::TableFormat {
                row,
                message: format!(
                    "duplicate (config_id, seed, epoch) = ({config_id:?}, {seed}, {epoch})"
                ),
            });
        }
    }
    if groups.is_empty() {
        return Err(Error::TableStructure("no data rows".into()));
    }

    // Contiguity and shared z_max / seed count.
    let mut z_max: Option<usize> = None;
    for ((config_id, seed), epochs) in &groups {
        let (&first, _) = epochs.iter().next().expect("non-empty group");
        let (&last, _) = epochs.iter().next_back().expect("non-empty group");
        if first != 1 || last != epochs.len() {
            return Err(Error::TableStructure(format!(
                "config {config_id:?} seed {seed}: epochs not contiguous from 1 \
                 (found {} rows spanning {first}..={last})",
                epochs.len()
            )));
        }
        match z_max {
            None => z_max = Some(epochs.len()),
            Some(z) if z != epochs.len() => {
                return Err(Error::TableStructure(format!(
                    "inconsistent z_max: config {config_id:?} seed {seed} has {} epochs, \
                     expected {z}",
                    epochs.len()
                )));
            }
            _ => {}
        }
    }
    let z_max = z_max.expect("at least one group");

    let mut curves: BTreeMap<String, Vec<Vec<(f64, f64)>>> = BTreeMap::new();
    for ((config_id, seed), epochs) in groups {
        let seeds = curves.entry(config_id.clone()).or_default();
        if seed != seeds.len() as u64 {
            return Err(Error::TableStructure(format!(
                "config {config_id:?}: seeds not contiguous from 0 (gap before seed {seed})"
            )));
        }
        seeds.push(epochs.into_values().collect());
    }
    let n_seeds = curves.values().next().expect("non-empty").len() as u64;
    for (config_id, seeds) in &curves {
        if seeds.len() as u64 != n_seeds {
            return Err(Error::TableStructure(format!(
                "config {config_id:?} has {} seeds, expected {n_seeds}",
                seeds.len()
            )));
        }
    }

    Ok(CurveTable {
        z_max,
        n_seeds,
        curves,
    })
}

/// Loads a curve table from a file.
pub fn load_curve_table(path: impl AsRef<Path>) -> Result<CurveTable> {
    read_curve_table(BufReader::new(File::open(path)?))
}

/// Writes the full curves of `configs` (all seeds, all epochs) in the table
/// format. Rows are sorted by (config_id, seed, epoch), so identical inputs
/// produce byte-identical files.
pub fn write_curve_table(
    bench: &dyn Benchmark,
    configs: &[HpConfig],
    mut writer: impl Write,
) -> Result<()> {
    writeln!(writer, "{TABLE_HEADER}")?;
    let mut ids: Vec<(String, &HpConfig)> = configs.iter().map(|c| (c.id(), c)).collect();
    ids.sort_by(|a, b| a.0.cmp(&b.0));
    ids.dedup_by(|a, b| a.0 == b.0);
    for (id, config) in ids {
        for seed in 0..bench.n_seeds() {
            for epoch in 1..=bench.z_max() {
                let (valid, test) = bench.query(config, epoch, seed)?;
                writeln!(writer, "{id},{seed},{epoch},{valid},{test}")?;
            }
        }
    }
    Ok(())
}

/// A benchmark backed by a stored table. The search space is a single
/// `config` dimension whose choices are the stored config ids.
pub struct FileBenchmark {
    table: CurveTable,
    space: HpSpace,
}

impl FileBenchmark {
    pub fn new(table: CurveTable) -> Result<Self> {
        let choices: Vec<String> = table.config_ids().map(str::to_string).collect();
        let space = HpSpace::new(vec![HpDimension {
            name: "config".into(),
            choices,
        }])?;
        Ok(Self { table, space })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_curve_table(path)?)
    }

    pub fn table(&self) -> &CurveTable {
        &self.table
    }

    fn config_id_of(&self, config: &HpConfig) -> Result<&str> {
        self.space.check_config(config)?;
        Ok(&self.space.dimensions()[0].choices[config.values()[0]])
    }
}

impl Benchmark for FileBenchmark {
    fn space(&self) -> &HpSpace {
        &self.space
    }

    fn z_max(&self) -> usize {
        self.table.z_max()
    }

    fn n_seeds(&self) -> u64 {
        self.table.n_seeds()
    }

    fn query(&self, config: &HpConfig, epoch: usize, seed: u64) -> Result<(f64, f64)> {
        if epoch < 1 || epoch > self.table.z_max() {
            return Err(Error::EpochOutOfRange {
                epoch,
                z_max: self.table.z_max(),
            });
        }
        if seed >= self.table.n_seeds() {
            return Err(Error::SeedOutOfRange {
                seed,
                n_seeds: self.table.n_seeds(),
            });
        }
        let id = self.config_id_of(config)?;
        self.table.get(id, seed, epoch)
    }
}

/// Convenience for CLI export: writes to a file path.
pub fn export_curve_table(
    bench: &dyn Benchmark,
    configs: &[HpConfig],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_curve_table(bench, configs, &mut w)?;
    w.flush()?;
    Ok(())
}
