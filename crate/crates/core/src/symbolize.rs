//! Grid symbolisation of representative points and per-weekday symbol
//! sequences.
//!
//! Cells are numbered row-major with row 0 at the northern edge and
//! column 0 at the western edge. Slots without representatives map to
//! [`CellId::MISSING`], which the entropy stage treats as an ordinary symbol.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clustering::RepresentativeSet;
use crate::geo::{GeoPoint, Region};
use crate::ingest::{csv_err, weekday_index, IngestError, Period};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub region: Region,
    /// Cells per side.
    pub cells_per_side: u32,
}

impl GridSpec {
    pub fn new(region: Region, cells_per_side: u32) -> Result<Self, String> {
        if cells_per_side < 2 {
            return Err(format!(
                "grid needs at least 2 cells per side, got {cells_per_side}"
            ));
        }
        region.validate().map_err(|e| e.to_string())?;
        Ok(GridSpec {
            region,
            cells_per_side,
        })
    }

    pub fn cell_size_m(&self) -> f64 {
        self.region.side_m / f64::from(self.cells_per_side)
    }

    /// Number of cells, not counting the missing symbol.
    pub fn n_cells(&self) -> u32 {
        self.cells_per_side * self.cells_per_side
    }

    /// Alphabet size seen by the entropy stage (cells + missing).
    pub fn alphabet_size(&self) -> u32 {
        self.n_cells() + 1
    }

    /// Centre of a cell, for tests and plotting.
    pub fn cell_center(&self, cell: CellId) -> Option<GeoPoint> {
        if cell.is_missing() || cell.0 >= self.n_cells() {
            return None;
        }
        let l = self.cells_per_side;
        let (row, col) = (cell.0 / l, cell.0 % l);
        let size = self.cell_size_m();
        let half = self.region.side_m / 2.0;
        let east = -half + (f64::from(col) + 0.5) * size;
        let north = half - (f64::from(row) + 0.5) * size;
        Some(self.region.from_local(east, north))
    }
}

/// Grid cell symbol: `row * L + col`, or [`CellId::MISSING`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub u32);

impl CellId {
    pub const MISSING: CellId = CellId(u32::MAX);

    pub fn is_missing(self) -> bool {
        self == CellId::MISSING
    }

    /// CSV form: the cell number, or -1 for missing.
    pub fn to_i64(self) -> i64 {
        if self.is_missing() {
            -1
        } else {
            i64::from(self.0)
        }
    }

    pub fn from_i64(v: i64) -> Option<CellId> {
        match v {
            -1 => Some(CellId::MISSING),
            0..=0xFFFF_FFFE => Some(CellId(v as u32)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub cell: CellId,
    pub clamped: bool,
}

/// Maps a point to its enclosing cell. Points outside the square are
/// clamped to the nearest edge cell and flagged.
pub fn to_cell(p: GeoPoint, grid: &GridSpec) -> Placement {
    let (east, north) = grid.region.to_local(p);
    let half = grid.region.side_m / 2.0;
    let clamped = east.abs() > half || north.abs() > half;
    let l = i64::from(grid.cells_per_side);
    let size = grid.cell_size_m();
    let col = (((east + half) / size).floor() as i64).clamp(0, l - 1);
    let row = (((half - north) / size).floor() as i64).clamp(0, l - 1);
    Placement {
        cell: CellId((row * l + col) as u32),
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolMode {
    /// One stream per representative index.
    #[default]
    PerRepresentative,
    /// One stream whose symbol encodes all k cells at once.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub date: NaiveDate,
    pub slot_index: u32,
    pub cell: CellId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub weekday: u8,
    pub rep_index: u32,
    pub entries: Vec<SymbolEntry>,
}

impl SymbolSequence {
    pub fn symbols(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.cell.0).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Symbolized {
    pub sequences: Vec<SymbolSequence>,
    pub clamped: usize,
}

/// Per-slot outcome of representative selection; `None` marks a slot
/// without usable representatives.
pub type SlotReps = BTreeMap<(NaiveDate, u32), Option<RepresentativeSet>>;

/// Builds the symbol streams: for every weekday in the period, `k`
/// sequences (or one joint sequence) covering every slot of every date.
pub fn build_sequences(
    reps: &SlotReps,
    period: &Period,
    slots_per_day: u32,
    k: usize,
    grid: &GridSpec,
    mode: SymbolMode,
) -> Symbolized {
    let streams = match mode {
        SymbolMode::PerRepresentative => k,
        SymbolMode::Joint => 1,
    };
    let mut by_weekday: BTreeMap<u8, Vec<SymbolSequence>> = BTreeMap::new();
    let mut clamped = 0;
    let joint_base = u64::from(grid.alphabet_size());
    for date in period.days() {
        let wd = weekday_index(date);
        let seqs = by_weekday.entry(wd).or_insert_with(|| {
            (0..streams as u32)
                .map(|r| SymbolSequence {
                    weekday: wd,
                    rep_index: r,
                    entries: Vec::new(),
                })
                .collect()
        });
        for slot in 0..slots_per_day {
            let set = reps.get(&(date, slot)).and_then(Option::as_ref);
            let cells: Vec<CellId> = (0..k)
                .map(|r| match set.and_then(|s| s.reps.get(r)) {
                    Some(p) => {
                        let placed = to_cell(*p, grid);
                        clamped += usize::from(placed.clamped);
                        placed.cell
                    }
                    None => CellId::MISSING,
                })
                .collect();
            match mode {
                SymbolMode::PerRepresentative => {
                    for (r, cell) in cells.into_iter().enumerate() {
                        seqs[r].entries.push(SymbolEntry {
                            date,
                            slot_index: slot,
                            cell,
                        });
                    }
                }
                SymbolMode::Joint => {
                    // Mixed-radix code with the missing symbol as digit L^2.
                    let code = cells.iter().rev().fold(0u64, |acc, c| {
                        let digit = if c.is_missing() {
                            u64::from(grid.n_cells())
                        } else {
                            u64::from(c.0)
                        };
                        acc * joint_base + digit
                    });
                    seqs[0].entries.push(SymbolEntry {
                        date,
                        slot_index: slot,
                        cell: CellId(code as u32),
                    });
                }
            }
        }
    }
    Symbolized {
        sequences: by_weekday.into_values().flatten().collect(),
        clamped,
    }
}

/// Writes `date,slot_index,rep_index,symbol` rows, ordered by date, slot
/// and representative.
pub fn write_sequences_csv<W: Write>(
    writer: W,
    seqs: &[SymbolSequence],
) -> Result<(), IngestError> {
    let mut rows: Vec<(NaiveDate, u32, u32, i64)> = seqs
        .iter()
        .flat_map(|s| {
            s.entries
                .iter()
                .map(move |e| (e.date, e.slot_index, s.rep_index, e.cell.to_i64()))
        })
        .collect();
    rows.sort();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "slot_index", "rep_index", "symbol"])
        .map_err(csv_err)?;
    for (d, s, r, sym) in rows {
        w.write_record([d.to_string(), s.to_string(), r.to_string(), sym.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SequenceRow {
    date: NaiveDate,
    slot_index: u32,
    rep_index: u32,
    symbol: i64,
}

pub fn read_sequences_csv<R: Read>(reader: R) -> Result<Vec<SymbolSequence>, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut streams: BTreeMap<(u8, u32), Vec<SymbolEntry>> = BTreeMap::new();
    for row in rdr.deserialize::<SequenceRow>() {
        let row = row.map_err(csv_err)?;
        let cell = CellId::from_i64(row.symbol)
            .ok_or_else(|| IngestError::Format(format!("bad symbol {}", row.symbol)))?;
        streams
            .entry((weekday_index(row.date), row.rep_index))
            .or_default()
            .push(SymbolEntry {
                date: row.date,
                slot_index: row.slot_index,
                cell,
            });
    }
    let mut out = Vec::new();
    for ((weekday, rep_index), mut entries) in streams {
        entries.sort_by_key(|e| (e.date, e.slot_index));
        if entries
            .windows(2)
            .any(|w| (w[0].date, w[0].slot_index) == (w[1].date, w[1].slot_index))
        {
            return Err(IngestError::Format(format!(
                "duplicate slot in stream weekday={weekday} rep={rep_index}"
            )));
        }
        out.push(SymbolSequence {
            weekday,
            rep_index,
            entries,
        });
    }
    Ok(out)
}
