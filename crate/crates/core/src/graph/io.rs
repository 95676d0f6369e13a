//! Graph file formats.
//!
//! Edge list: UTF-8 text, one `src<TAB>dst` pair of external ids per line.
//! Lines starting with `#` and blank lines are ignored. A line whose two ids
//! are equal declares a node without adding an edge; the writer uses this for
//! isolated nodes.
//!
//! Binary snapshot (all integers little-endian):
//!
//! ```text
//! offset  size            field
//! 0       8               magic  b"CDRGRAPH"
//! 8       4   u32         format version (1)
//! 12      4   u32         flags; bit 0 set => explicit edge weights present
//! 16      8   u64         node count n
//! 24      8   u64         adjacency entry count m (twice the edge count)
//! 32      8*(n+1) u64     CSR offsets
//! ...     4*m u32         neighbor ids, ascending within each node
//! ...     8*m f64         edge weights (only if flag bit 0)
//! ...     n records       external ids: u32 byte length, then UTF-8 bytes
//! ```

use std::io::{BufRead, Read, Write};

use super::{GraphBuilder, NodeId, SocialGraph};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"CDRGRAPH";
pub const SNAPSHOT_VERSION: u32 = 1;
const FLAG_WEIGHTS: u32 = 1;

pub fn read_edge_list<R: BufRead>(reader: R) -> Result<SocialGraph> {
    let mut builder = GraphBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (src, dst) = match (parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(d), None) => (s, d),
            _ => return Err(Error::row(line_no, "expected `src<TAB>dst`")),
        };
        if src.is_empty() || dst.is_empty() {
            return Err(Error::row(line_no, "empty node id"));
        }
        builder.add_contact(src, dst);
    }
    Ok(builder.build())
}

pub fn write_edge_list<W: Write>(g: &SocialGraph, mut out: W) -> Result<()> {
    for x in g.nodes() {
        let name = g.external_id(x);
        if g.degree(x) == 0 {
            writeln!(out, "{name}\t{name}")?;
        }
        for &y in g.neighbors(x) {
            if y > x {
                writeln!(out, "{name}\t{}", g.external_id(y))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_snapshot<W: Write>(g: &SocialGraph, mut out: W) -> Result<()> {
    let flags = if g.has_unit_weights() { 0 } else { FLAG_WEIGHTS };
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&flags.to_le_bytes())?;
    out.write_all(&(g.node_count() as u64).to_le_bytes())?;
    out.write_all(&(g.raw_neighbors().len() as u64).to_le_bytes())?;
    for &o in g.offsets() {
        out.write_all(&(o as u64).to_le_bytes())?;
    }
    for y in g.raw_neighbors() {
        out.write_all(&y.0.to_le_bytes())?;
    }
    if let Some(w) = g.raw_weights() {
        for v in w {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for id in g.external_ids() {
        out.write_all(&(id.len() as u32).to_le_bytes())?;
        out.write_all(id.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated input: {e}")))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SocialGraph> {
    let magic: [u8; 8] = read_array(&mut r)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let flags = read_u32(&mut r)?;
    if flags & !FLAG_WEIGHTS != 0 {
        return Err(Error::Snapshot(format!("unknown flags {flags:#x}")));
    }
    let n = usize::try_from(read_u64(&mut r)?).map_err(|_| Error::Snapshot("node count overflow".into()))?;
    let m = usize::try_from(read_u64(&mut r)?).map_err(|_| Error::Snapshot("entry count overflow".into()))?;
    if n > u32::MAX as usize {
        return Err(Error::Snapshot("node count exceeds u32".into()));
    }

    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)? as usize);
    }
    let mut neighbors = Vec::with_capacity(m);
    for _ in 0..m {
        neighbors.push(NodeId(read_u32(&mut r)?));
    }
    let weights = if flags & FLAG_WEIGHTS != 0 {
        let mut w = Vec::with_capacity(m);
        for _ in 0..m {
            w.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        Some(w)
    } else {
        None
    };
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(&mut r)? as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Snapshot(format!("truncated id: {e}")))?;
        ids.push(String::from_utf8(bytes).map_err(|_| Error::Snapshot("id is not UTF-8".into()))?);
    }
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Snapshot("external ids not in ascending order".into()));
    }
    SocialGraph::from_raw_parts(offsets, neighbors, weights, ids)
}
