//! Lazy breadth-first growth of the cluster of the origin.

use hashbrown::HashTable;

use crate::error::{invalid, Result};
use crate::lattice::{shifted_hash, site_hash, Bond, Site};
use crate::rng::CounterRng;

/// Default site cap for cluster growth.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Options for [`Grower::grow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthOptions {
    /// Growth stops (truncated) when the site count would exceed this.
    pub cap: usize,
    /// Whether occupied bonds inside the cluster are recorded.
    pub record_bonds: bool,
    /// Sites at this chemical distance from the origin are not expanded.
    pub max_depth: Option<u32>,
}

impl GrowthOptions {
    pub fn sites_only(cap: usize) -> Self {
        Self { cap, record_bonds: false, max_depth: None }
    }

    pub fn full(cap: usize) -> Self {
        Self { cap, record_bonds: true, max_depth: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthSummary {
    pub size: usize,
    pub truncated: bool,
}

/// The explored cluster of the origin.
///
/// Sites are stored in discovery (BFS) order with the origin at index 0.
/// Bonds are index pairs into that order. The graph formed by the sites and
/// the recorded bonds is connected; for a truncated cluster it is the portion
/// revealed before the cap was hit.
#[derive(Debug, Clone)]
pub struct Cluster {
    dim: usize,
    coords: Vec<i32>,
    hashes: Vec<u64>,
    layers: Vec<u32>,
    table: HashTable<u32>,
    bonds: Vec<(u32, u32)>,
    truncated: bool,
}

impl Cluster {
    /// Builds a cluster from an explicit site list and bond list; the first
    /// site is the origin of the cluster. Used for hand-made configurations.
    pub fn from_parts(sites: Vec<Site>, bonds: Vec<Bond>) -> Result<Cluster> {
        let Some(first) = sites.first() else {
            return Err(invalid("a cluster needs at least one site"));
        };
        let dim = first.dim();
        let mut c = Cluster::empty(dim);
        for s in &sites {
            if s.dim() != dim {
                return Err(invalid("sites of mixed dimension"));
            }
            if c.index_of(s.coords()).is_some() {
                return Err(invalid(format!("duplicate site {s:?}")));
            }
            c.push_site(s.coords(), site_hash(s.coords()), 0);
        }
        for b in &bonds {
            let (Some(i), Some(j)) = (c.index_of(b.a().coords()), c.index_of(b.b().coords()))
            else {
                return Err(invalid(format!("bond {b:?} leaves the site set")));
            };
            c.bonds.push((i as u32, j as u32));
        }
        c.bonds.sort_unstable();
        c.bonds.dedup();
        // chemical layers by BFS from the first site; also checks connectivity
        let adj = c.adjacency();
        let mut layer = vec![u32::MAX; c.size()];
        layer[0] = 0;
        let mut queue = vec![0usize];
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &(w, _) in adj.neighbors(v) {
                if layer[w] == u32::MAX {
                    layer[w] = layer[v] + 1;
                    queue.push(w);
                }
            }
        }
        if queue.len() != c.size() {
            return Err(invalid("site set is not connected by the given bonds"));
        }
        c.layers = layer;
        Ok(c)
    }

    fn empty(dim: usize) -> Cluster {
        Cluster {
            dim,
            coords: Vec::new(),
            hashes: Vec::new(),
            layers: Vec::new(),
            table: HashTable::new(),
            bonds: Vec::new(),
            truncated: false,
        }
    }

    fn push_site(&mut self, coords: &[i32], hash: u64, layer: u32) -> usize {
        let idx = self.hashes.len();
        self.coords.extend_from_slice(coords);
        self.hashes.push(hash);
        self.layers.push(layer);
        let hashes = &self.hashes;
        self.table.insert_unique(hash, idx as u32, |&i| hashes[i as usize]);
        idx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sites, `|C(0)|` when not truncated.
    pub fn size(&self) -> usize {
        self.hashes.len()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn origin(&self) -> Site {
        self.site(0)
    }

    pub fn coords(&self, i: usize) -> &[i32] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn site(&self, i: usize) -> Site {
        Site::new(self.coords(i).to_vec())
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i32]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Chemical distance from the origin along the explored bonds.
    pub fn layer(&self, i: usize) -> u32 {
        self.layers[i]
    }

    pub fn index_of(&self, coords: &[i32]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let h = site_hash(coords);
        self.table
            .find(h, |&i| self.coords(i as usize) == coords)
            .map(|&i| i as usize)
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index_of(x.coords()).is_some()
    }

    pub fn bond_indices(&self) -> &[(u32, u32)] {
        &self.bonds
    }

    pub fn occupied_bonds(&self) -> Vec<Bond> {
        self.bonds
            .iter()
            .map(|&(i, j)| {
                Bond::new(self.site(i as usize), self.site(j as usize))
                    .expect("recorded bonds join nearest neighbours")
            })
            .collect()
    }

    pub(crate) fn adjacency(&self) -> crate::percolation::graph::Adjacency {
        crate::percolation::graph::Adjacency::new(self.size(), &self.bonds)
    }
}

/// Reusable cluster grower. Holding one per worker avoids reallocating the
/// site table for every sample.
#[derive(Debug)]
pub struct Grower {
    d: usize,
    p: f64,
    cluster: Cluster,
    scratch: Vec<i32>,
}

impl Grower {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("bond density {p} outside [0,1]")));
        }
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { d, p, cluster: Cluster::empty(d), scratch: vec![0; d] })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Grows the cluster of the origin for one realization.
    ///
    /// Each bond mark is a pure function of `(seed, bond)`, so the explored
    /// set does not depend on exploration order and the realization is
    /// revealed lazily: only bonds touching the cluster are ever evaluated.
    pub fn grow(&mut self, seed: u64, opts: GrowthOptions) -> Result<GrowthSummary> {
        if opts.cap < 1 {
            return Err(invalid("cap must be at least 1"));
        }
        let d = self.d;
        let p = self.p;
        let rng = CounterRng::new(seed);
        let c = &mut self.cluster;
        c.coords.clear();
        c.hashes.clear();
        c.layers.clear();
        c.table.clear();
        c.bonds.clear();
        c.truncated = false;

        let origin = vec![0i32; d];
        c.push_site(&origin, site_hash(&origin), 0);

        let x = &mut self.scratch;
        let mut head = 0usize;
        'bfs: while head < c.hashes.len() {
            let layer = c.layers[head];
            if opts.max_depth.is_some_and(|m| layer >= m) {
                break;
            }
            let hx = c.hashes[head];
            x.copy_from_slice(&c.coords[head * d..(head + 1) * d]);
            for axis in 0..d {
                for step in [-1i32, 1] {
                    let hy = shifted_hash(hx, x, axis, step);
                    let lower = if step < 0 { hy } else { hx };
                    if rng.bond_uniform(lower, axis) >= p {
                        continue;
                    }
                    debug_assert!(x[axis].unsigned_abs() < (1 << 30), "coordinate overflow");
                    x[axis] += step;
                    let found = {
                        let coords = &c.coords;
                        let y: &[i32] = x;
                        c.table
                            .find(hy, |&i| &coords[i as usize * d..(i as usize + 1) * d] == y)
                            .copied()
                    };
                    match found {
                        Some(j) => {
                            if opts.record_bonds && j as usize > head {
                                c.bonds.push((head as u32, j));
                            }
                        }
                        None => {
                            if c.hashes.len() == opts.cap {
                                c.truncated = true;
                                x[axis] -= step;
                                break 'bfs;
                            }
                            let j = c.push_site(x, hy, layer + 1);
                            if opts.record_bonds {
                                c.bonds.push((head as u32, j as u32));
                            }
                        }
                    }
                    x[axis] -= step;
                }
            }
            head += 1;
        }
        Ok(GrowthSummary { size: c.hashes.len(), truncated: c.truncated })
    }

    /// The cluster from the most recent call to [`Grower::grow`].
    pub fn cluster(&self) -> &Cluster {
        &self.cluster
    }

    pub fn into_cluster(self) -> Cluster {
        self.cluster
    }
}

/// Grows the cluster of the origin with all occupied bonds recorded.
pub fn grow_cluster(p: f64, d: usize, seed: u64, cap: usize) -> Result<Cluster> {
    let mut g = Grower::new(p, d)?;
    g.grow(seed, GrowthOptions::full(cap))?;
    Ok(g.into_cluster())
}

/// `x` belongs to the cluster.
pub fn connected(c: &Cluster, x: &Site) -> bool {
    c.contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    use crate::lattice::site_hash;

    /// Naive depth-first grower with std collections and reversed axis order,
    /// sharing only the keyed bond marks.
    fn naive_sites(p: f64, d: usize, seed: u64) -> HashSet<Vec<i32>> {
        let rng = CounterRng::new(seed);
        let mut seen = HashSet::new();
        let mut stack = VecDeque::new();
        seen.insert(vec![0; d]);
        stack.push_back(vec![0; d]);
        while let Some(x) = stack.pop_back() {
            for axis in (0..d).rev() {
                for step in [1, -1] {
                    let mut y = x.clone();
                    y[axis] += step;
                    let lower = if step < 0 { &y } else { &x };
                    if rng.bond_uniform(site_hash(lower), axis) < p && seen.insert(y.clone()) {
                        stack.push_back(y);
                    }
                }
            }
        }
        seen
    }

    #[test]
    fn p_zero_is_single_site() {
        for d in [1, 3, 7] {
            let c = grow_cluster(0.0, d, 5, 100).unwrap();
            assert_eq!(c.size(), 1);
            assert!(c.occupied_bonds().is_empty());
            assert!(!c.truncated());
            assert!(connected(&c, &Site::origin(d)));
            assert!(!connected(&c, &Site::unit(d, 0, 1)));
        }
    }

    #[test]
    fn p_one_truncates_at_cap() {
        let c = grow_cluster(1.0, 2, 1, 10).unwrap();
        assert!(c.truncated());
        assert_eq!(c.size(), 10);
    }

    #[test]
    fn p_one_line_reveals_an_interval() {
        let c = grow_cluster(1.0, 1, 3, 9).unwrap();
        assert!(c.truncated());
        let mut xs: Vec<i32> = c.sites().map(|s| s[0]).collect();
        xs.sort();
        assert_eq!(xs, (-4..=4).collect::<Vec<_>>());
        for x in -4..=4 {
            assert!(connected(&c, &Site::new(vec![x])));
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(grow_cluster(0.5, 2, 0, 0).is_err());
        assert!(grow_cluster(1.5, 2, 0, 10).is_err());
        assert!(grow_cluster(0.5, 0, 0, 10).is_err());
    }

    #[test]
    fn seed_determinism() {
        let a = grow_cluster(0.2, 4, 99, 10_000).unwrap();
        let b = grow_cluster(0.2, 4, 99, 10_000).unwrap();
        assert_eq!(a.sites().collect::<Vec<_>>(), b.sites().collect::<Vec<_>>());
        assert_eq!(a.bond_indices(), b.bond_indices());
    }

    #[test]
    fn exploration_order_does_not_matter() {
        for seed in 0..200 {
            let c = grow_cluster(0.45, 2, seed, 1_000_000).unwrap();
            assert!(!c.truncated());
            let ours: HashSet<Vec<i32>> = c.sites().map(|s| s.to_vec()).collect();
            assert_eq!(ours, naive_sites(0.45, 2, seed), "seed {seed}");
        }
    }

    #[test]
    fn cap_monotone() {
        for seed in 0..50 {
            let small = grow_cluster(0.3, 3, seed, 20).unwrap();
            let big = grow_cluster(0.3, 3, seed, 200).unwrap();
            let n = small.size();
            assert_eq!(
                small.sites().collect::<Vec<_>>(),
                big.sites().take(n).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn bonds_inside_and_connected() {
        for seed in 0..50 {
            let c = grow_cluster(0.25, 3, seed, 5000).unwrap();
            let bonds = c.occupied_bonds();
            let set: HashSet<_> = bonds.iter().cloned().collect();
            assert_eq!(set.len(), bonds.len(), "no bond recorded twice");
            for b in &bonds {
                assert!(c.contains(b.a()) && c.contains(b.b()));
            }
            // rebuilding from parts checks connectivity
            let sites: Vec<Site> = (0..c.size()).map(|i| c.site(i)).collect();
            let rebuilt = Cluster::from_parts(sites, bonds).unwrap();
            for i in 0..c.size() {
                assert_eq!(rebuilt.layer(i), c.layer(i));
            }
        }
    }

    #[test]
    fn every_occupied_bond_within_cluster_is_recorded() {
        let seed = 17;
        let p = 0.4;
        let c = grow_cluster(p, 2, seed, 100_000).unwrap();
        let rng = CounterRng::new(seed);
        let mut expected = 0;
        for s in c.sites() {
            for axis in 0..2 {
                let mut y = s.to_vec();
                y[axis] += 1;
                if c.index_of(&y).is_some() && rng.bond_uniform(site_hash(s), axis) < p {
                    expected += 1;
                }
            }
        }
        assert_eq!(c.bond_indices().len(), expected);
    }

    #[test]
    fn depth_limit_stops_expansion() {
        let mut g = Grower::new(1.0, 2).unwrap();
        let opts = GrowthOptions { cap: 1000, record_bonds: false, max_depth: Some(3) };
        let s = g.grow(0, opts).unwrap();
        // sites with l1 norm <= 3 in Z^2
        assert_eq!(s.size, 25);
        assert!(!s.truncated);
        assert!((0..s.size).all(|i| g.cluster().layer(i) <= 3));
    }
}
