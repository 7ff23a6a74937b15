//! Explicit graphs with a Büchi acceptance flag and the two emptiness
//! checks over them.

use std::collections::VecDeque;

/// Finite directed graph in compressed adjacency form with initial nodes and
/// accepting nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplicitGraph {
    pub initial: Vec<u32>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    pub accepting: Vec<bool>,
}

impl ExplicitGraph {
    pub fn from_adjacency(initial: Vec<u32>, adj: Vec<Vec<u32>>, accepting: Vec<bool>) -> Self {
        assert_eq!(adj.len(), accepting.len());
        let mut g = ExplicitGraph { initial, offsets: vec![0], targets: vec![], accepting: vec![] };
        for (succ, acc) in adj.into_iter().zip(accepting) {
            g.push_node(acc, succ);
        }
        g
    }

    /// Empty graph to be filled node by node, in id order.
    pub fn builder(initial: Vec<u32>) -> Self {
        ExplicitGraph { initial, offsets: vec![0], targets: vec![], accepting: vec![] }
    }

    /// Appends the next node (id = current node count).
    pub fn push_node(&mut self, accepting: bool, successors: impl IntoIterator<Item = u32>) {
        self.targets.extend(successors);
        self.offsets.push(self.targets.len() as u32);
        self.accepting.push(accepting);
    }

    pub fn node_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Whether `l` is a path of this graph starting in an initial node and
    /// closing into a cycle through an accepting node.
    pub fn is_accepting_lasso(&self, l: &GraphLasso) -> bool {
        if l.cycle.is_empty() {
            return false;
        }
        let path: Vec<u32> = l.prefix.iter().chain(&l.cycle).copied().collect();
        if !self.initial.contains(&path[0]) {
            return false;
        }
        let steps_ok = path.windows(2).all(|w| self.successors(w[0]).contains(&w[1]));
        let closes = self.successors(*l.cycle.last().unwrap()).contains(&l.cycle[0]);
        steps_ok && closes && l.cycle.iter().any(|&v| self.accepting[v as usize])
    }
}

/// Path `prefix · cycle^ω` through a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphLasso {
    pub prefix: Vec<u32>,
    pub cycle: Vec<u32>,
}

/// Nested depth-first search: an outer search in postorder seeds an inner
/// search from every accepting node, looking for a path back to the seed.
/// The inner visited set is shared across seeds.
pub fn check_emptiness_ndfs(g: &ExplicitGraph) -> Option<GraphLasso> {
    let n = g.node_count();
    let mut outer = vec![false; n];
    let mut inner = vec![false; n];
    for &root in &g.initial {
        if outer[root as usize] {
            continue;
        }
        outer[root as usize] = true;
        let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut edge)) = stack.last_mut() {
            let succ = g.successors(v);
            if *edge < succ.len() {
                let t = succ[*edge];
                *edge += 1;
                if !outer[t as usize] {
                    outer[t as usize] = true;
                    stack.push((t, 0));
                }
                continue;
            }
            if g.accepting[v as usize] {
                if let Some(cycle) = inner_search(g, v, &mut inner) {
                    let prefix = stack[..stack.len() - 1].iter().map(|&(u, _)| u).collect();
                    return Some(GraphLasso { prefix, cycle });
                }
            }
            stack.pop();
        }
    }
    None
}

fn inner_search(g: &ExplicitGraph, seed: u32, visited: &mut [bool]) -> Option<Vec<u32>> {
    let mut stack: Vec<(u32, usize)> = vec![(seed, 0)];
    while let Some(&mut (v, ref mut edge)) = stack.last_mut() {
        let succ = g.successors(v);
        if *edge < succ.len() {
            let t = succ[*edge];
            *edge += 1;
            if t == seed {
                return Some(stack.iter().map(|&(u, _)| u).collect());
            }
            if !visited[t as usize] {
                visited[t as usize] = true;
                stack.push((t, 0));
            }
        } else {
            stack.pop();
        }
    }
    None
}

/// Strongly connected components reachable from the initial nodes
/// (iterative Tarjan).
pub fn strongly_connected_components(g: &ExplicitGraph) -> Vec<Vec<u32>> {
    const UNSEEN: u32 = u32::MAX;
    let n = g.node_count();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut tarjan: Vec<u32> = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0u32;
    for &root in &g.initial {
        if index[root as usize] != UNSEEN {
            continue;
        }
        let mut call: Vec<(u32, usize)> = vec![(root, 0)];
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        tarjan.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            let succ = g.successors(v);
            if *edge < succ.len() {
                let t = succ[*edge];
                *edge += 1;
                let ti = t as usize;
                if index[ti] == UNSEEN {
                    index[ti] = counter;
                    low[ti] = counter;
                    counter += 1;
                    tarjan.push(t);
                    on_stack[ti] = true;
                    call.push((t, 0));
                } else if on_stack[ti] {
                    low[v as usize] = low[v as usize].min(index[ti]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let mut comp = Vec::new();
                loop {
                    let w = tarjan.pop().expect("tarjan stack");
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

/// Shortest path (by BFS) from any of `sources` to `target`, restricted to
/// nodes accepted by `allowed`. With `skip_start`, the search starts from
/// the successors of the sources, so a source can reach itself; the
/// returned path then begins and ends with that source.
fn bfs_path(
    g: &ExplicitGraph,
    sources: &[u32],
    target: u32,
    allowed: impl Fn(u32) -> bool,
    skip_start: bool,
) -> Option<Vec<u32>> {
    const NONE: u32 = u32::MAX;
    let n = g.node_count();
    let mut parent = vec![NONE; n];
    let mut origin = vec![NONE; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if skip_start {
            for &t in g.successors(s) {
                if allowed(t) && !seen[t as usize] {
                    seen[t as usize] = true;
                    origin[t as usize] = s;
                    queue.push_back(t);
                }
            }
        } else if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == target {
            let mut path = vec![v];
            let mut cur = v;
            while parent[cur as usize] != NONE {
                cur = parent[cur as usize];
                path.push(cur);
            }
            if skip_start {
                path.push(origin[cur as usize]);
            }
            path.reverse();
            return Some(path);
        }
        for &t in g.successors(v) {
            if allowed(t) && !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = v;
                queue.push_back(t);
            }
        }
    }
    None
}

/// Accepting-SCC search: a lasso exists iff some reachable nontrivial
/// strongly connected component contains an accepting node.
pub fn check_emptiness_scc(g: &ExplicitGraph) -> Option<GraphLasso> {
    for comp in strongly_connected_components(g) {
        let nontrivial = comp.len() > 1 || g.successors(comp[0]).contains(&comp[0]);
        if !nontrivial {
            continue;
        }
        let Some(&acc) = comp.iter().find(|&&v| g.accepting[v as usize]) else { continue };
        let mut member = vec![false; g.node_count()];
        for &v in &comp {
            member[v as usize] = true;
        }
        let mut stem = bfs_path(g, &g.initial, acc, |_| true, false).expect("component is reachable");
        stem.pop();
        let mut cycle = bfs_path(g, &[acc], acc, |v| member[v as usize], true).expect("nontrivial component");
        cycle.pop();
        return Some(GraphLasso { prefix: stem, cycle });
    }
    None
}
