//! Graph algorithms on the explored cluster: unit-capacity max-flow and
//! bridge finding.

/// Compressed adjacency lists. Each entry is `(neighbour, edge id)` where the
/// edge id indexes the bond list the adjacency was built from.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(usize, usize)>,
    ends: Vec<(usize, usize)>,
}

impl Adjacency {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(a, b) in edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0, 0); offsets[n]];
        for (e, &(a, b)) in edges.iter().enumerate() {
            let (a, b) = (a as usize, b as usize);
            entries[fill[a]] = (b, e);
            fill[a] += 1;
            entries[fill[b]] = (a, e);
            fill[b] += 1;
        }
        let ends = edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
        Self { offsets, entries, ends }
    }

    pub fn vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edges(&self) -> usize {
        self.ends.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    /// Breadth-first search from `src` that never crosses a blocked edge.
    /// Returns, for every vertex, the edge used to reach it (or `None`).
    pub fn bfs_tree(&self, src: usize, blocked: &[bool]) -> Vec<Option<usize>> {
        let n = self.vertices();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut queue = vec![src];
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &(w, e) in self.neighbors(v) {
                if !seen[w] && !blocked.get(e).copied().unwrap_or(false) {
                    seen[w] = true;
                    parent[w] = Some(e);
                    queue.push(w);
                }
            }
        }
        parent
    }

    /// Component label of every vertex with `blocked` edges removed.
    pub fn components(&self, blocked: &[bool]) -> Vec<usize> {
        let n = self.vertices();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &(w, e) in self.neighbors(v) {
                    if label[w] == usize::MAX && !blocked[e] {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Bridge flags per edge (iterative Tarjan low-link).
    pub fn bridges(&self) -> Vec<bool> {
        let n = self.vertices();
        let mut is_bridge = vec![false; self.edges()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        // frame: (vertex, edge used to enter, next adjacency position)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(frame) = stack.last_mut() {
                let (v, via, pos) = *frame;
                let nb = self.neighbors(v);
                if pos < nb.len() {
                    frame.2 += 1;
                    let (w, e) = nb[pos];
                    if e == via {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, e, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(u, _, _)) = stack.last() {
                        low[u] = low[u].min(low[v]);
                        if low[v] > disc[u] {
                            is_bridge[via] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }
}

/// Unit-capacity max-flow on an undirected graph, stopping at a flow limit.
///
/// A super source is attached by one unit edge to each vertex in `sources`
/// (a vertex may appear twice, giving it capacity two).
#[derive(Debug)]
pub struct FlowSolver<'a> {
    adj: &'a Adjacency,
    flow: Vec<i8>,
    pred: Vec<usize>,
    seen: Vec<u32>,
    stamp: u32,
    queue: Vec<usize>,
}

const ROOT: usize = usize::MAX;
const FROM_SOURCE: usize = usize::MAX - 1;

impl<'a> FlowSolver<'a> {
    pub fn new(adj: &'a Adjacency) -> Self {
        Self {
            adj,
            flow: vec![0; adj.edges()],
            pred: vec![ROOT; adj.vertices()],
            seen: vec![0; adj.vertices()],
            stamp: 0,
            queue: Vec::new(),
        }
    }

    /// Number of edge-disjoint paths from the super source to `sink`,
    /// capped at `limit`.
    pub fn max_flow(&mut self, sources: &[usize], sink: usize, limit: usize) -> usize {
        self.flow.iter_mut().for_each(|f| *f = 0);
        let mut used = vec![false; sources.len()];
        let mut value = 0;
        while value < limit {
            if !self.augment(sources, &mut used, sink) {
                break;
            }
            value += 1;
        }
        value
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        self.stamp
    }

    fn augment(&mut self, sources: &[usize], used: &mut [bool], sink: usize) -> bool {
        let stamp = self.next_stamp();
        self.queue.clear();
        // which source arc each first-layer vertex came through
        let entry;
        for (i, &s) in sources.iter().enumerate() {
            if !used[i] && self.seen[s] != stamp {
                self.seen[s] = stamp;
                self.pred[s] = FROM_SOURCE;
                self.queue.push(s);
                if s == sink {
                    used[i] = true;
                    return true;
                }
            }
        }
        let mut head = 0;
        let mut reached = false;
        while head < self.queue.len() && !reached {
            let v = self.queue[head];
            head += 1;
            for &(w, e) in self.adj.neighbors(v) {
                if self.seen[w] == stamp {
                    continue;
                }
                let (a, _) = self.adj.ends(e);
                let residual = if v == a { self.flow[e] < 1 } else { self.flow[e] > -1 };
                if residual {
                    self.seen[w] = stamp;
                    self.pred[w] = e;
                    self.queue.push(w);
                    if w == sink {
                        reached = true;
                        break;
                    }
                }
            }
        }
        if !reached {
            return false;
        }
        let mut v = sink;
        loop {
            let e = self.pred[v];
            if e == FROM_SOURCE {
                entry = Some(v);
                break;
            }
            let (a, b) = self.adj.ends(e);
            if v == b {
                self.flow[e] += 1;
                v = a;
            } else {
                self.flow[e] -= 1;
                v = b;
            }
        }
        let s = entry.expect("augmenting path starts at a source");
        let i = (0..sources.len())
            .find(|&i| !used[i] && sources[i] == s)
            .expect("source arc available");
        used[i] = true;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Adjacency {
        // 0-1-2-3-0
        Adjacency::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    #[test]
    fn flow_on_cycle_is_two() {
        let adj = square();
        let mut f = FlowSolver::new(&adj);
        assert_eq!(f.max_flow(&[0], 2, 5), 1);
        assert_eq!(f.max_flow(&[0, 0], 2, 5), 2);
        assert_eq!(f.max_flow(&[0, 2], 1, 5), 2);
    }

    #[test]
    fn flow_on_path_is_one() {
        let adj = Adjacency::new(3, &[(0, 1), (1, 2)]);
        let mut f = FlowSolver::new(&adj);
        assert_eq!(f.max_flow(&[0, 0], 2, 2), 1);
        // source at the sink itself counts once per arc
        assert_eq!(f.max_flow(&[2, 0], 2, 2), 2);
    }

    #[test]
    fn flow_needs_reverse_residuals() {
        // classic case where a greedy first path must be undone:
        // s=0, t=5; paths 0-1-3-5 and 0-2-4-5 with a cross edge 1-4 ... ordered so
        // BFS may first pick 0-1-4-5
        let adj = Adjacency::new(6, &[(0, 1), (0, 2), (1, 4), (1, 3), (2, 4), (3, 5), (4, 5)]);
        let mut f = FlowSolver::new(&adj);
        assert_eq!(f.max_flow(&[0, 0], 5, 3), 2);
    }

    #[test]
    fn bridges_on_small_graphs() {
        assert_eq!(square().bridges(), vec![false; 4]);
        // square with pendant 2-4
        let adj = Adjacency::new(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 4)]);
        assert_eq!(adj.bridges(), vec![false, false, false, false, true]);
        // two triangles joined by a bridge
        let adj = Adjacency::new(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]);
        let b = adj.bridges();
        assert_eq!(b.iter().filter(|&&x| x).count(), 1);
        assert!(b[3]);
    }

    #[test]
    fn bridges_match_removal_check() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..12);
            let mut edges = Vec::new();
            for a in 0..n as u32 {
                for b in a + 1..n as u32 {
                    if rng.random_bool(0.3) {
                        edges.push((a, b));
                    }
                }
            }
            let adj = Adjacency::new(n, &edges);
            let base = adj.components(&vec![false; edges.len()]);
            let ncomp = base.iter().max().unwrap() + 1;
            let flags = adj.bridges();
            for e in 0..edges.len() {
                let mut blocked = vec![false; edges.len()];
                blocked[e] = true;
                let c = adj.components(&blocked);
                let k = c.iter().max().unwrap() + 1;
                assert_eq!(flags[e], k > ncomp, "edge {e} in {edges:?}");
            }
        }
    }
}
