use std::collections::{BTreeSet, HashMap};

use super::{MSGraph, Tracklet, VertexId};

/// Why an untangling request was postponed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UntangleSkip {
    Missing,
    NotSolo,
    /// The component of the matched pair contains a cycle.
    NotDag,
    /// Zero or several unlabeled paths join the pair, so the intermediate
    /// tracklets are not yet attributable.
    PathNotUnique(u64),
}

impl MSGraph {
    /// Vertices on some unlabeled path from `u` to `v` (both included).
    fn unlabeled_region(&self, u: VertexId, v: VertexId) -> BTreeSet<VertexId> {
        let mut region = BTreeSet::from([v]);
        let mut stack = vec![v];
        let mut reaches_u = false;
        while let Some(x) = stack.pop() {
            for p in &self.vertices[&x].parents {
                if *p == u {
                    reaches_u = true;
                } else if self.vertices[p].label.is_none() && region.insert(*p) {
                    stack.push(*p);
                }
            }
        }
        if !reaches_u {
            return BTreeSet::new();
        }
        region.insert(u);
        // Keep only what u actually reaches.
        let mut fwd = BTreeSet::from([u]);
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            if x == v {
                continue;
            }
            for c in &self.vertices[&x].children {
                if region.contains(c) && fwd.insert(*c) {
                    stack.push(*c);
                }
            }
        }
        fwd
    }

    /// Number of unlabeled paths from `u` to `v` (saturating).
    pub fn unlabeled_path_count(&self, u: VertexId, v: VertexId) -> u64 {
        self.unlabeled_paths(u, v).0
    }

    fn unlabeled_paths(&self, u: VertexId, v: VertexId) -> (u64, Option<Vec<VertexId>>) {
        if u == v {
            return (0, None);
        }
        let region = self.unlabeled_region(u, v);
        if region.is_empty() {
            return (0, None);
        }
        let Some(order) = self.order_within(&region) else {
            return (0, None);
        };
        // Paths from each vertex to v inside the region.
        let mut to_v: HashMap<VertexId, u64> = HashMap::new();
        for x in order.iter().rev() {
            let n = if *x == v {
                1
            } else {
                self.vertices[x]
                    .children
                    .iter()
                    .filter(|c| region.contains(c) && **c != u)
                    .map(|c| to_v.get(c).copied().unwrap_or(0))
                    .fold(0u64, u64::saturating_add)
            };
            to_v.insert(*x, n);
        }
        let count = to_v[&u];
        if count != 1 {
            return (count, None);
        }
        let mut path = vec![u];
        let mut x = u;
        while x != v {
            x = *self.vertices[&x]
                .children
                .iter()
                .find(|c| region.contains(c) && to_v.get(c).copied().unwrap_or(0) > 0)
                .expect("unique path continues");
            path.push(x);
        }
        (count, Some(path))
    }

    /// Resolves the graph along the unique unlabeled path between two solo
    /// vertices known to carry the same target.
    ///
    /// Off-path edges of solo path vertices are dropped, every compound on the
    /// path gives up one member to a new solo vertex on the chain, and the
    /// resulting chains are merged. The set of feasible target-to-tracklet
    /// assignments is unchanged.
    pub fn untangle(&mut self, u: VertexId, v: VertexId) -> Result<(), UntangleSkip> {
        let (u, v) = (self.resolve(u), self.resolve(v));
        let (Some(ux), Some(vx)) = (self.vertices.get(&u), self.vertices.get(&v)) else {
            return Err(UntangleSkip::Missing);
        };
        if !ux.is_solo() || !vx.is_solo() {
            return Err(UntangleSkip::NotSolo);
        }
        if !self.is_dag(v) {
            return Err(UntangleSkip::NotDag);
        }
        let (count, path) = self.unlabeled_paths(u, v);
        let Some(path) = path else {
            return Err(UntangleSkip::PathNotUnique(count));
        };

        let k = path.len() - 1;
        let mut chain = path.clone();
        let mut touched: BTreeSet<VertexId> = path.iter().copied().collect();
        for i in 1..k {
            let x = path[i];
            if !self.vertices[&x].is_solo() {
                let tracklet: Tracklet = {
                    let vx = self.vertices.get_mut(&x).expect("path vertex");
                    vx.member_count -= 1;
                    vx.tracklet.clone()
                };
                let s = self.new_vertex(1, tracklet, None);
                chain[i] = s;
                touched.insert(s);
            }
        }

        for i in 0..k {
            let (x, y) = (path[i], path[i + 1]);
            let (xs, ys) = (chain[i], chain[i + 1]);
            let x_split = xs != x;
            let y_split = ys != y;
            // Between two compounds the remainders may still share the edge.
            if !(x_split && y_split) {
                self.remove_edge(x, y);
            }
            self.add_edge(xs, ys);
            if !x_split {
                let others: Vec<VertexId> = self.vertices[&x]
                    .children
                    .iter()
                    .copied()
                    .filter(|c| *c != ys)
                    .collect();
                for c in others {
                    self.remove_edge(x, c);
                    touched.insert(c);
                }
            }
            if !y_split {
                let others: Vec<VertexId> = self.vertices[&y].parents.iter().copied().filter(|p| *p != xs).collect();
                for p in others {
                    self.remove_edge(p, y);
                    touched.insert(p);
                    // Siblings of y lose a co-child: their chain() may change.
                    touched.extend(self.vertices[&p].children.iter().copied());
                }
            }
        }
        for x in touched.clone() {
            if let Some(vx) = self.vertices.get(&x) {
                touched.extend(vx.children.iter().copied());
            }
        }

        self.stats.untangles += 1;
        self.on_untangle_repair(&touched);
        self.settle(touched);
        Ok(())
    }

    /// True when `a -> b` is the only edge out of `a` and into `b` and both
    /// carry the same number of targets.
    pub(crate) fn chain_link(&self, a: VertexId, b: VertexId) -> bool {
        let (av, bv) = (&self.vertices[&a], &self.vertices[&b]);
        if av.children.len() != 1 || av.children[0] != b || bv.parents.len() != 1 {
            return false;
        }
        if av.member_count != bv.member_count {
            return false;
        }
        match av.tracklet.end() {
            Some(e) if e < bv.tracklet.start() => {}
            _ => return false,
        }
        if let (Some(la), Some(lb)) = (av.label, bv.label) {
            assert_eq!(la, lb, "chain {a} -> {b} links two different identities");
        }
        true
    }

    /// Edges that would still be merged by [`MSGraph::merge_solo_chain`].
    pub fn mergeable_links(&self) -> Vec<(VertexId, VertexId)> {
        self.edges().filter(|(a, b)| self.chain_link(*a, *b)).collect()
    }

    /// Replaces the maximal chain starting at `head` by one vertex whose
    /// tracklet is the concatenation of the chain. Returns the surviving id.
    pub fn merge_solo_chain(&mut self, head: VertexId) -> VertexId {
        let head = self.resolve(head);
        if !self.vertices.contains_key(&head) {
            return head;
        }
        let mut chain = vec![head];
        loop {
            let last = *chain.last().expect("nonempty");
            let children = &self.vertices[&last].children;
            if children.len() == 1 && self.chain_link(last, children[0]) {
                chain.push(children[0]);
            } else {
                break;
            }
        }
        if chain.len() == 1 {
            return head;
        }

        let first = &self.vertices[&chain[0]];
        let mut tracklet = first.tracklet.clone();
        let members = first.member_count;
        let parents = first.parents.clone();
        let mut label = first.label;
        for id in &chain[1..] {
            let v = &self.vertices[id];
            tracklet.concat(&v.tracklet);
            label = label.or(v.label);
        }
        let tail = *chain.last().expect("nonempty");
        let children = self.vertices[&tail].children.clone();

        let merged = self.new_vertex(members, tracklet, label);
        for p in &parents {
            let pv = self.vertices.get_mut(p).expect("parent");
            for c in pv.children.iter_mut() {
                if *c == chain[0] {
                    *c = merged;
                }
            }
        }
        for c in &children {
            let cv = self.vertices.get_mut(c).expect("child");
            for p in cv.parents.iter_mut() {
                if *p == tail {
                    *p = merged;
                }
            }
        }
        {
            let mv = self.vertices.get_mut(&merged).expect("merged");
            mv.parents = parents;
            mv.children = children;
        }
        for id in &chain {
            self.vertices.remove(id);
            self.frontier.remove(id);
            self.labeled.remove(id);
            self.retired.insert(*id, merged);
        }
        self.stats.merges += 1;
        self.refresh([merged]);
        merged
    }

    /// Merges the maximal chain through `x`, wherever `x` sits in it.
    pub(crate) fn merge_chain_containing(&mut self, x: VertexId) -> VertexId {
        let mut head = self.resolve(x);
        if !self.vertices.contains_key(&head) {
            return head;
        }
        loop {
            let ps = &self.vertices[&head].parents;
            if ps.len() == 1 && self.chain_link(ps[0], head) {
                head = ps[0];
            } else {
                break;
            }
        }
        self.merge_solo_chain(head)
    }

    /// Merges every chain touching the given vertices.
    pub(crate) fn settle<I: IntoIterator<Item = VertexId>>(&mut self, ids: I) {
        let ids: Vec<VertexId> = ids.into_iter().collect();
        for id in ids {
            let id = self.resolve(id);
            if self.vertices.contains_key(&id) {
                self.merge_chain_containing(id);
            }
        }
    }
}
