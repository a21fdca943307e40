//! Double connections, pivotal bonds and the backbone between two sites.

use crate::error::{invalid, Result};
use crate::lattice::{Bond, Site};
use crate::percolation::cluster::Cluster;
use crate::percolation::graph::FlowSolver;

/// Ordered pivotal bonds for a connection `x <-> y` and the sausages between
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotalDecomposition {
    /// Directed pivots `(u_i, v_i)` in order from `x` to `y`.
    pub pivots: Vec<(Site, Site)>,
    /// `sausages[0]` contains `x`, `sausages[i]` contains `v_{i-1}`.
    /// Every cluster site lies in exactly one sausage.
    pub sausages: Vec<Vec<Site>>,
}

impl PivotalDecomposition {
    pub fn pivot_bonds(&self) -> Vec<Bond> {
        self.pivots
            .iter()
            .map(|(u, v)| Bond::new(u.clone(), v.clone()).expect("pivots are bonds"))
            .collect()
    }
}

fn locate(c: &Cluster, x: &Site, what: &str) -> Result<usize> {
    c.index_of(x.coords())
        .ok_or_else(|| invalid(format!("{what} {x:?} is not in the cluster")))
}

/// `x == y` or two bond-disjoint occupied paths join them.
pub fn doubly_connected(c: &Cluster, x: &Site, y: &Site) -> Result<bool> {
    let i = locate(c, x, "x")?;
    let j = locate(c, y, "y")?;
    if i == j {
        return Ok(true);
    }
    let adj = c.adjacency();
    let mut solver = FlowSolver::new(&adj);
    Ok(solver.max_flow(&[i, i], j, 2) >= 2)
}

/// Pivotal bonds for `x <-> y`, ordered from `x`, and the resulting sausages.
pub fn pivotal_bonds(c: &Cluster, x: &Site, y: &Site) -> Result<PivotalDecomposition> {
    let i = locate(c, x, "x")?;
    let j = locate(c, y, "y")?;
    if i == j {
        return Err(invalid("pivotal bonds need x != y"));
    }
    let adj = c.adjacency();
    let bridges = adj.bridges();
    // A bond separates x from y iff it is a bridge lying on an x-y path; any
    // simple path crosses it exactly once, so walking one path lists the
    // pivots in order.
    let parent = adj.bfs_tree(i, &[]);
    let mut path = Vec::new();
    let mut v = j;
    while v != i {
        let e = parent[v].expect("cluster is connected");
        let (a, b) = adj.ends(e);
        let u = if a == v { b } else { a };
        path.push((u, v, e));
        v = u;
    }
    path.reverse();
    let pivot_edges: Vec<(usize, usize, usize)> =
        path.into_iter().filter(|&(_, _, e)| bridges[e]).collect();

    let mut blocked = vec![false; adj.edges()];
    for &(_, _, e) in &pivot_edges {
        blocked[e] = true;
    }
    let label = adj.components(&blocked);
    let mut heads = vec![i];
    heads.extend(pivot_edges.iter().map(|&(_, v, _)| v));
    let mut sausages = vec![Vec::new(); heads.len()];
    let slot: std::collections::HashMap<usize, usize> =
        heads.iter().enumerate().map(|(s, &h)| (label[h], s)).collect();
    debug_assert_eq!(slot.len(), heads.len());
    // removing k pivots from a connected graph leaves exactly k+1 components
    for (v, l) in label.iter().enumerate() {
        sausages[slot[l]].push(c.site(v));
    }
    let pivots = pivot_edges
        .iter()
        .map(|&(u, v, _)| (c.site(u), c.site(v)))
        .collect();
    Ok(PivotalDecomposition { pivots, sausages })
}

/// Sites `u` with bond-disjoint occupied paths `x -> u` and `u -> y`, in
/// cluster discovery order.
pub fn backbone(c: &Cluster, x: &Site, y: &Site) -> Result<Vec<Site>> {
    let i = locate(c, x, "x")?;
    let j = locate(c, y, "y")?;
    let adj = c.adjacency();
    let mut solver = FlowSolver::new(&adj);
    let mut out = Vec::new();
    for u in 0..c.size() {
        if solver.max_flow(&[i, j], u, 2) >= 2 {
            out.push(c.site(u));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[i32]) -> Site {
        Site::new(v.to_vec())
    }

    fn b(x: &[i32], y: &[i32]) -> Bond {
        Bond::new(s(x), s(y)).unwrap()
    }

    fn segment() -> Cluster {
        Cluster::from_parts(
            vec![s(&[0, 0]), s(&[1, 0]), s(&[2, 0])],
            vec![b(&[0, 0], &[1, 0]), b(&[1, 0], &[2, 0])],
        )
        .unwrap()
    }

    fn unit_square() -> Cluster {
        Cluster::from_parts(
            vec![s(&[0, 0]), s(&[1, 0]), s(&[1, 1]), s(&[0, 1])],
            vec![
                b(&[0, 0], &[1, 0]),
                b(&[1, 0], &[1, 1]),
                b(&[1, 1], &[0, 1]),
                b(&[0, 1], &[0, 0]),
            ],
        )
        .unwrap()
    }

    fn square_with_pendant() -> Cluster {
        let mut sites = vec![s(&[0, 0]), s(&[1, 0]), s(&[1, 1]), s(&[0, 1])];
        sites.push(s(&[2, 1]));
        let bonds = vec![
            b(&[0, 0], &[1, 0]),
            b(&[1, 0], &[1, 1]),
            b(&[1, 1], &[0, 1]),
            b(&[0, 1], &[0, 0]),
            b(&[1, 1], &[2, 1]),
        ];
        Cluster::from_parts(sites, bonds).unwrap()
    }

    #[test]
    fn doubly_connected_examples() {
        let single = Cluster::from_parts(vec![s(&[0]), s(&[1])], vec![b(&[0], &[1])]).unwrap();
        assert!(doubly_connected(&single, &s(&[0]), &s(&[0])).unwrap());
        assert!(!doubly_connected(&single, &s(&[0]), &s(&[1])).unwrap());
        let sq = unit_square();
        assert!(doubly_connected(&sq, &s(&[0, 0]), &s(&[1, 1])).unwrap());
        assert!(doubly_connected(&sq, &s(&[0, 0]), &s(&[5, 5])).is_err());
    }

    #[test]
    fn pivots_of_segment() {
        let d = pivotal_bonds(&segment(), &s(&[0, 0]), &s(&[2, 0])).unwrap();
        assert_eq!(
            d.pivots,
            vec![(s(&[0, 0]), s(&[1, 0])), (s(&[1, 0]), s(&[2, 0]))]
        );
        assert_eq!(d.sausages.len(), 3);
        // reversed direction reverses order and orientation
        let r = pivotal_bonds(&segment(), &s(&[2, 0]), &s(&[0, 0])).unwrap();
        assert_eq!(
            r.pivots,
            vec![(s(&[2, 0]), s(&[1, 0])), (s(&[1, 0]), s(&[0, 0]))]
        );
    }

    #[test]
    fn pivots_of_square() {
        let d = pivotal_bonds(&unit_square(), &s(&[0, 0]), &s(&[1, 1])).unwrap();
        assert!(d.pivots.is_empty());
        assert_eq!(d.sausages.len(), 1);
        assert_eq!(d.sausages[0].len(), 4);
        assert!(pivotal_bonds(&unit_square(), &s(&[0, 0]), &s(&[0, 0])).is_err());
    }

    #[test]
    fn pendant_bond_is_the_last_pivot() {
        let c = square_with_pendant();
        let d = pivotal_bonds(&c, &s(&[0, 0]), &s(&[2, 1])).unwrap();
        assert_eq!(d.pivots, vec![(s(&[1, 1]), s(&[2, 1]))]);
        assert_eq!(d.sausages[0].len(), 4);
        assert_eq!(d.sausages[1], vec![s(&[2, 1])]);
    }

    #[test]
    fn backbone_examples() {
        let seg = segment();
        assert_eq!(backbone(&seg, &s(&[0, 0]), &s(&[2, 0])).unwrap().len(), 3);
        let sq = unit_square();
        assert_eq!(backbone(&sq, &s(&[0, 0]), &s(&[1, 1])).unwrap().len(), 4);
        // segment with a dangling branch at the middle site
        let c = Cluster::from_parts(
            vec![s(&[0, 0]), s(&[1, 0]), s(&[2, 0]), s(&[1, 1]), s(&[1, 2])],
            vec![
                b(&[0, 0], &[1, 0]),
                b(&[1, 0], &[2, 0]),
                b(&[1, 0], &[1, 1]),
                b(&[1, 1], &[1, 2]),
            ],
        )
        .unwrap();
        let bb = backbone(&c, &s(&[0, 0]), &s(&[2, 0])).unwrap();
        assert_eq!(bb, vec![s(&[0, 0]), s(&[1, 0]), s(&[2, 0])]);
    }
}
