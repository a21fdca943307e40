//! Bernoulli bond percolation: lazy cluster growth and the connectivity
//! structure of a cluster (double connections, pivots, backbone, green sites).

pub mod cluster;
pub mod graph;
pub mod record;
pub mod structure;

pub use cluster::{connected, grow_cluster, Cluster, Grower, GrowthOptions, GrowthSummary, DEFAULT_CAP};
pub use record::{read_records, write_records, ClusterRecord};
pub use structure::{backbone, doubly_connected, pivotal_bonds, PivotalDecomposition};

use crate::error::{invalid, Result};
use crate::lattice::Site;
use crate::rng::CounterRng;

/// Green sites of a cluster; each site is green independently with
/// probability `1 - z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenAssignment {
    pub z: f64,
    pub green: Vec<Site>,
}

impl GreenAssignment {
    pub fn is_empty(&self) -> bool {
        self.green.is_empty()
    }
}

/// Marks green sites with keyed uniforms, so the marks for `(seed, site)` are
/// coupled across `z`: the green set shrinks as `z` grows.
pub fn assign_green(c: &Cluster, z: f64, seed: u64) -> Result<GreenAssignment> {
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid(format!("z = {z} outside [0,1]")));
    }
    let rng = CounterRng::new(seed);
    let green = (0..c.size())
        .filter(|&i| rng.site_uniform(crate::lattice::site_hash(c.coords(i))) < 1.0 - z)
        .map(|i| c.site(i))
        .collect();
    Ok(GreenAssignment { z, green })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_extremes() {
        let c = grow_cluster(1.0, 2, 0, 20).unwrap();
        assert!(assign_green(&c, 1.0, 3).unwrap().is_empty());
        assert_eq!(assign_green(&c, 0.0, 3).unwrap().green.len(), 20);
        assert!(assign_green(&c, 1.1, 3).is_err());
        assert!(assign_green(&c, -0.1, 3).is_err());
    }

    #[test]
    fn green_mean_is_binomial() {
        let c = grow_cluster(1.0, 2, 0, 20).unwrap();
        let trials = 100_000u64;
        let total: usize = (0..trials).map(|s| assign_green(&c, 0.5, s).unwrap().green.len()).sum();
        let mean = total as f64 / trials as f64;
        // sd of the mean: sqrt(20 * 0.25 / 1e5) ~ 0.00707
        assert!((mean - 10.0).abs() < 3.0 * 0.00708, "mean {mean}");
    }

    #[test]
    fn green_sets_nested_in_z() {
        let c = grow_cluster(1.0, 3, 0, 200).unwrap();
        let a = assign_green(&c, 0.3, 9).unwrap();
        let b = assign_green(&c, 0.7, 9).unwrap();
        assert!(b.green.iter().all(|s| a.green.contains(s)));
    }
}
