use std::collections::VecDeque;

use super::Lattice;

/// Split of the links into a spanning tree fixed to `+1` and the remaining
/// dynamical links, each of which is assigned a qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeFixing {
    fixed: Vec<usize>,
    free: Vec<usize>,
    /// `qubit_of[link]` for free links.
    qubit_of: Vec<Option<usize>>,
}

impl GaugeFixing {
    /// Fixed (tree) links, ascending.
    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Free links in qubit order: `free()[q]` is the link carried by qubit `q`.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_links(&self) -> usize {
        self.qubit_of.len()
    }

    pub fn qubit_of(&self, link: usize) -> Option<usize> {
        self.qubit_of.get(link).copied().flatten()
    }

    pub fn is_fixed(&self, link: usize) -> bool {
        self.qubit_of(link).is_none()
    }

    /// Bit mask over qubits for the free links among `links`. Fixed links
    /// carry `+1` and drop out of every product.
    pub fn qubit_mask(&self, links: &[usize]) -> u64 {
        links
            .iter()
            .filter_map(|&l| self.qubit_of(l))
            .fold(0u64, |m, q| m | (1u64 << q))
    }

    /// Rebuild a gauge fixing from an explicit fixed-link set. Returns `None`
    /// if any index is out of range.
    pub fn from_fixed(n_links: usize, fixed: &[usize]) -> Option<Self> {
        let mut is_fixed = vec![false; n_links];
        for &l in fixed {
            *is_fixed.get_mut(l)? = true;
        }
        Some(Self::from_flags(&is_fixed))
    }

    fn from_flags(is_fixed: &[bool]) -> Self {
        let mut fixed = Vec::new();
        let mut free = Vec::new();
        let mut qubit_of = vec![None; is_fixed.len()];
        for (l, &f) in is_fixed.iter().enumerate() {
            if f {
                fixed.push(l);
            } else {
                qubit_of[l] = Some(free.len());
                free.push(l);
            }
        }
        GaugeFixing {
            fixed,
            free,
            qubit_of,
        }
    }
}

/// Breadth-first spanning tree rooted at site 0. Neighbours are explored in
/// ascending link order, so the result depends only on the geometry.
pub fn gauge_fix(lattice: &Lattice) -> GaugeFixing {
    let n_sites = lattice.n_sites();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_sites];
    for l in 0..lattice.n_links() {
        let (a, b) = lattice.link_endpoints(l);
        incident[a].push((l, b));
        incident[b].push((l, a));
    }
    for list in &mut incident {
        list.sort_unstable();
    }

    let mut visited = vec![false; n_sites];
    let mut in_tree = vec![false; lattice.n_links()];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(site) = queue.pop_front() {
        for &(link, other) in &incident[site] {
            if !visited[other] {
                visited[other] = true;
                in_tree[link] = true;
                queue.push_back(other);
            }
        }
    }

    GaugeFixing::from_flags(&in_tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn is_spanning_tree(lattice: &Lattice, tree: &[usize]) -> bool {
        // union-find: n_sites - 1 edges with no cycle spans a connected graph
        let mut parent: Vec<usize> = (0..lattice.n_sites()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for &l in tree {
            let (a, b) = lattice.link_endpoints(l);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        tree.len() + 1 == lattice.n_sites()
    }

    #[test]
    fn hypercube_counts() {
        let lat = Lattice::new(&[2, 2, 2, 2], Boundary::Open).unwrap();
        let gf = gauge_fix(&lat);
        assert_eq!(gf.fixed().len(), 15);
        assert_eq!(gf.n_free(), 17);
        assert!(is_spanning_tree(&lat, gf.fixed()));
    }

    #[test]
    fn small_lattices() {
        let lat = Lattice::new(&[2, 2], Boundary::Open).unwrap();
        let gf = gauge_fix(&lat);
        assert_eq!((gf.fixed().len(), gf.n_free()), (3, 1));

        let lat = Lattice::new(&[2, 2, 2], Boundary::Open).unwrap();
        let gf = gauge_fix(&lat);
        assert_eq!(lat.n_links(), 12);
        assert_eq!(lat.n_sites(), 8);
        assert_eq!((gf.fixed().len(), gf.n_free()), (7, 5));
    }

    #[test]
    fn spanning_tree_on_many_geometries() {
        for (dims, b) in [
            (vec![3, 3], Boundary::Open),
            (vec![3, 4], Boundary::Periodic),
            (vec![2, 3, 2], Boundary::Open),
            (vec![3, 3, 3, 3], Boundary::Periodic),
        ] {
            let lat = Lattice::new(&dims, b).unwrap();
            let gf = gauge_fix(&lat);
            assert!(is_spanning_tree(&lat, gf.fixed()));
            assert_eq!(gf.n_free(), lat.n_links() - lat.n_sites() + 1);
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let lat = Lattice::new(&[2, 2, 2, 2], Boundary::Open).unwrap();
        let a = gauge_fix(&lat);
        let b = gauge_fix(&lat);
        assert_eq!(a, b);
        assert!(a.free().windows(2).all(|w| w[0] < w[1]));
        for (q, &l) in a.free().iter().enumerate() {
            assert_eq!(a.qubit_of(l), Some(q));
        }
        assert_eq!(GaugeFixing::from_fixed(lat.n_links(), a.fixed()), Some(a));
    }
}
