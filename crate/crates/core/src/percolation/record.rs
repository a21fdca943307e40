//! Line-delimited JSON cluster records.
//!
//! One object per line:
//! `{"seed": u64, "size": usize, "truncated": bool, "sites": [[i32; d], ...]}`
//! where `sites` is omitted unless requested.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::Site;
use crate::percolation::cluster::Cluster;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub seed: u64,
    pub size: usize,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Site>>,
}

impl ClusterRecord {
    pub fn from_cluster(seed: u64, c: &Cluster, with_sites: bool) -> Self {
        Self {
            seed,
            size: c.size(),
            truncated: c.truncated(),
            sites: with_sites.then(|| (0..c.size()).map(|i| c.site(i)).collect()),
        }
    }
}

pub fn write_records<W: Write>(mut w: W, records: &[ClusterRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<ClusterRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| invalid(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::grow_cluster;

    #[test]
    fn round_trip() {
        let c = grow_cluster(0.3, 2, 4, 100).unwrap();
        let recs = vec![
            ClusterRecord::from_cluster(4, &c, true),
            ClusterRecord::from_cluster(4, &c, false),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.lines().nth(1).unwrap().contains("sites"));
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = read_records(&b"{\"seed\":1,\"size\":1,\"truncated\":false}\nnot json\n"[..])
            .unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
