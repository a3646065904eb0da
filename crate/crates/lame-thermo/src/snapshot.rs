//! Binary field snapshot format shared repo-wide ("LTHS").
//!
//! Layout: magic bytes `LTHS`, format version as 4-byte little-endian
//! unsigned integer, an 8-byte little-endian length-prefixed UTF-8 JSON
//! header carrying `{dim, lengths, interior_counts, field_names, time}`,
//! then raw little-endian 8-byte floats per field in declaration order,
//! row-major.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec, ScalarField, State, VectorField};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"LTHS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub interior_counts: Vec<usize>,
    pub field_names: Vec<String>,
    pub time: f64,
}

/// Write named fields sharing one grid.
pub fn write_fields(
    mut out: impl Write,
    grid: &GridSpec,
    time: f64,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let header = SnapshotHeader {
        dim: grid.dim(),
        lengths: grid.lengths().to_vec(),
        interior_counts: grid.interior_counts().to_vec(),
        field_names: fields.iter().map(|(n, _)| n.to_string()).collect(),
        time,
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| Error::Snapshot(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header_json.len() as u64).to_le_bytes())?;
    out.write_all(&header_json)?;
    let expected = grid.node_count();
    for (name, values) in fields {
        if values.len() != expected {
            return Err(Error::Snapshot(format!(
                "field {name}: {} values, grid has {expected} nodes",
                values.len()
            )));
        }
        for v in *values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write a full state as fields `u0..u{d-1}, v0..v{d-1}, theta`.
pub fn write_state(out: impl Write, state: &State) -> Result<()> {
    let grid = state.grid().clone();
    let d = grid.dim();
    let mut named: Vec<(String, &[f64])> = Vec::with_capacity(2 * d + 1);
    for a in 0..d {
        named.push((format!("u{a}"), state.u.component(a).values()));
    }
    for a in 0..d {
        named.push((format!("v{a}"), state.v.component(a).values()));
    }
    named.push(("theta".to_string(), state.theta.values()));
    let borrowed: Vec<(&str, &[f64])> = named.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    write_fields(out, &grid, state.t, &borrowed)
}

pub struct Snapshot {
    pub header: SnapshotHeader,
    pub grid: Grid,
    pub fields: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.header
            .field_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.fields[i].as_slice())
    }

    /// Reassemble a state when the snapshot carries the canonical field set.
    pub fn into_state(self) -> Result<State> {
        let d = self.grid.dim();
        let grab = |name: &str| -> Result<ScalarField> {
            let vals = self
                .field(name)
                .ok_or_else(|| Error::Snapshot(format!("missing field {name}")))?;
            ScalarField::from_values(&self.grid, vals.to_vec())
        };
        let u = VectorField::from_components(
            (0..d).map(|a| grab(&format!("u{a}"))).collect::<Result<Vec<_>>>()?,
        )?;
        let v = VectorField::from_components(
            (0..d).map(|a| grab(&format!("v{a}"))).collect::<Result<Vec<_>>>()?,
        )?;
        let theta = grab("theta")?;
        State::new(self.header.time, u, v, theta)
    }
}

pub fn read_snapshot(mut input: impl Read) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let mut len_word = [0u8; 8];
    input.read_exact(&mut len_word)?;
    let header_len = u64::from_le_bytes(len_word) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input.read_exact(&mut header_bytes)?;
    let header: SnapshotHeader =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::Snapshot(e.to_string()))?;
    let grid = GridSpec::new(&header.lengths, &header.interior_counts)?;
    if header.dim != grid.dim() {
        return Err(Error::Snapshot("header dim mismatch".into()));
    }
    let node_count = grid.node_count();
    let mut fields = Vec::with_capacity(header.field_names.len());
    let mut buf = vec![0u8; node_count * 8];
    for _ in &header.field_names {
        input.read_exact(&mut buf)?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        fields.push(vals);
    }
    Ok(Snapshot { header, grid, fields })
}

pub fn write_state_to_path(path: &std::path::Path, state: &State) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_state(std::io::BufWriter::new(file), state)
}

pub fn read_snapshot_from_path(path: &std::path::Path) -> Result<Snapshot> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::random;

    #[test]
    fn round_trip_state() {
        let g = GridSpec::new(&[1.0, 2.0], &[5, 7]).unwrap();
        let mut s = State::zeros(&g, 1.25);
        s.u = random::smooth_vector(&g, 1, 0.5);
        s.v = random::smooth_vector(&g, 2, 0.5);
        s.theta = random::smooth_scalar(&g, 3, 0.5);

        let mut buf = Vec::new();
        write_state(&mut buf, &s).unwrap();
        assert_eq!(&buf[0..4], b"LTHS");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);

        let snap = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(snap.header.field_names, vec!["u0", "u1", "v0", "v1", "theta"]);
        let back = snap.into_state().unwrap();
        assert_eq!(back.t, 1.25);
        for a in 0..2 {
            assert_eq!(back.u.component(a).values(), s.u.component(a).values());
            assert_eq!(back.v.component(a).values(), s.v.component(a).values());
        }
        assert_eq!(back.theta.values(), s.theta.values());
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_snapshot(&b"NOPE"[..]).is_err());
        let mut buf = Vec::new();
        let g = GridSpec::unit_box(1, 3).unwrap();
        let s = State::zeros(&g, 0.0);
        write_state(&mut buf, &s).unwrap();
        buf[5] = 99; // version corruption
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
