//! Spanning-cluster detection with a disjoint-set forest.

use super::{Axis, Occupancy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// True iff fractured cells connect the left and right borders
/// (`Axis::Horizontal`) or the bottom and top borders (`Axis::Vertical`)
/// under 4-connectivity.
pub fn check_failure(occ: &Occupancy, axis: Axis) -> bool {
    check_failure_with(occ, axis, Connectivity::Four)
}

pub fn check_failure_with(occ: &Occupancy, axis: Axis, conn: Connectivity) -> bool {
    let (nx, ny) = (occ.nx, occ.ny);
    if nx == 0 || ny == 0 {
        return false;
    }
    let n = nx * ny;
    let source = n as u32;
    let sink = n as u32 + 1;
    let mut ds = DisjointSet::new(n + 2);
    let id = |i: usize, j: usize| (j * nx + i) as u32;
    for j in 0..ny {
        for i in 0..nx {
            if !occ.get(i, j) {
                continue;
            }
            let here = id(i, j);
            let on_start = match axis {
                Axis::Horizontal => i == 0,
                Axis::Vertical => j == 0,
            };
            let on_end = match axis {
                Axis::Horizontal => i == nx - 1,
                Axis::Vertical => j == ny - 1,
            };
            if on_start {
                ds.union(here, source);
            }
            if on_end {
                ds.union(here, sink);
            }
            // Link to already-visited neighbours only.
            if i > 0 && occ.get(i - 1, j) {
                ds.union(here, id(i - 1, j));
            }
            if j > 0 && occ.get(i, j - 1) {
                ds.union(here, id(i, j - 1));
            }
            if conn == Connectivity::Eight && j > 0 {
                if i > 0 && occ.get(i - 1, j - 1) {
                    ds.union(here, id(i - 1, j - 1));
                }
                if i + 1 < nx && occ.get(i + 1, j - 1) {
                    ds.union(here, id(i + 1, j - 1));
                }
            }
        }
    }
    ds.find(source) == ds.find(sink)
}
