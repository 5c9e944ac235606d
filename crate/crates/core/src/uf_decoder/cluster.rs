/// Disjoint-set forest over detectors with per-root cluster data.
///
/// Union by size with full path compression. Every root carries the
/// excitation parity of its cluster and the (lazily purged) list of boundary
/// edges. State touched since the last [`ClusterForest::reset`] is tracked so
/// that resetting costs `O(touched)`.
#[derive(Debug, Clone)]
pub struct ClusterForest {
    // hot per-vertex fields packed together: one cache line per visit
    nodes: Vec<Node>,
    boundary: Vec<Vec<u32>>,
    touched: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: u32,
    size: u32,
    odd: bool,
    touched: bool,
    reached: bool,
}

impl Node {
    fn singleton(v: u32) -> Self {
        Node {
            parent: v,
            size: 1,
            odd: false,
            touched: false,
            reached: false,
        }
    }
}

impl ClusterForest {
    pub fn new(n: usize) -> Self {
        Self {
            nodes: (0..n as u32).map(Node::singleton).collect(),
            boundary: vec![Vec::new(); n],
            touched: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    fn touch(&mut self, v: u32) {
        let node = &mut self.nodes[v as usize];
        if !node.touched {
            node.touched = true;
            self.touched.push(v);
        }
    }

    /// Whether `v` has been involved in any operation since the last reset.
    #[inline]
    pub fn is_touched(&self, v: u32) -> bool {
        self.nodes[v as usize].touched
    }

    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    /// Flags `v` as reached; returns `false` if it already was.
    #[inline]
    pub fn reach(&mut self, v: u32) -> bool {
        self.touch(v);
        !std::mem::replace(&mut self.nodes[v as usize].reached, true)
    }

    #[inline]
    pub fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.nodes[root as usize].parent != root {
            root = self.nodes[root as usize].parent;
        }
        let mut x = v;
        while self.nodes[x as usize].parent != root {
            let next = self.nodes[x as usize].parent;
            self.nodes[x as usize].parent = root;
            x = next;
        }
        root
    }

    /// Merges the clusters of `a` and `b`; returns the surviving root.
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        self.touch(ra);
        self.touch(rb);
        let (keep, gone) = if (self.size(ra), rb) >= (self.size(rb), ra) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        let (k, g) = (keep as usize, gone as usize);
        let absorbed_node = self.nodes[g];
        self.nodes[g].parent = keep;
        self.nodes[k].size += absorbed_node.size;
        self.nodes[k].odd ^= absorbed_node.odd;
        // append the shorter list onto the longer one
        let mut absorbed = std::mem::take(&mut self.boundary[g]);
        if absorbed.len() > self.boundary[k].len() {
            std::mem::swap(&mut absorbed, &mut self.boundary[k]);
        }
        self.boundary[k].append(&mut absorbed);
        keep
    }

    #[inline]
    pub fn is_odd(&self, root: u32) -> bool {
        self.nodes[root as usize].odd
    }

    pub fn toggle_parity(&mut self, v: u32) {
        self.touch(v);
        let r = self.find(v);
        self.nodes[r as usize].odd ^= true;
    }

    #[inline]
    pub fn size(&self, root: u32) -> u32 {
        self.nodes[root as usize].size
    }

    #[inline]
    pub fn boundary(&self, root: u32) -> &[u32] {
        &self.boundary[root as usize]
    }

    pub fn take_boundary(&mut self, root: u32) -> Vec<u32> {
        std::mem::take(&mut self.boundary[root as usize])
    }

    pub fn set_boundary(&mut self, root: u32, list: Vec<u32>) {
        self.touch(root);
        self.boundary[root as usize] = list;
    }

    /// Restores every touched vertex to a singleton, keeping allocations.
    pub fn reset(&mut self) {
        for &v in &self.touched {
            self.nodes[v as usize] = Node::singleton(v);
            self.boundary[v as usize].clear();
        }
        self.touched.clear();
    }

    /// Marks `v` as touched so the next reset restores it; needed when a
    /// caller links `v` without going through `union`.
    pub fn mark(&mut self, v: u32) {
        self.touch(v);
    }
}
