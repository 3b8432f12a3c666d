//! Deterministic min-cost max-flow on small directed networks.
//!
//! Successive shortest augmenting paths with Johnson potentials: every
//! augmentation follows a minimum-cost path in the residual network, so the
//! final flow has minimum cost among all maximum flows. Costs must be
//! non-negative, which the crossing-slot networks built on top of this
//! guarantee by construction (costs are time offsets).
//!
//! Determinism: all tie-breaks reduce to node and edge insertion order, so
//! identical build sequences yield identical flows — a requirement for
//! reproducible schedules, not just a nicety.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone)]
struct Edge {
    to: NodeId,
    /// Remaining capacity in the residual network.
    residual: i64,
    cost: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowResult {
    /// Total units pushed from source to sink.
    pub flow: i64,
    /// Total cost of the pushed flow.
    pub cost: i64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    /// Forward and reverse edges interleaved: forward edges have even ids.
    edges: Vec<Edge>,
    adj: Vec<Vec<EdgeId>>,
    caps: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
            caps: Vec::new(),
        }
    }

    pub fn add_node(&mut self) -> NodeId {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Add a directed edge. Returns a handle usable with [`flow_on`].
    ///
    /// Panics on negative capacity or cost: the solver's optimality argument
    /// needs non-negative costs, and callers encode time offsets which are
    /// non-negative by construction.
    pub fn add_edge(&mut self, from: NodeId, to: NodeId, cap: i64, cost: i64) -> EdgeId {
        assert!(cap >= 0, "negative capacity");
        assert!(cost >= 0, "negative cost");
        assert!(from < self.adj.len() && to < self.adj.len(), "bad node id");
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            residual: cap,
            cost,
        });
        self.edges.push(Edge {
            to: from,
            residual: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        self.caps.push(cap);
        id
    }

    /// Flow currently on a forward edge.
    pub fn flow_on(&self, id: EdgeId) -> i64 {
        debug_assert!(id % 2 == 0, "flow_on takes forward edge ids");
        self.caps[id / 2] - self.edges[id].residual
    }

    /// Push up to `limit` units of minimum-cost flow from `source` to `sink`.
    /// `i64::MAX` for an uncapped maximum flow.
    pub fn min_cost_flow(&mut self, source: NodeId, sink: NodeId, limit: i64) -> FlowResult {
        assert_ne!(source, sink);
        let n = self.adj.len();
        let mut potential = vec![0i64; n];
        let mut total = FlowResult { flow: 0, cost: 0 };

        while total.flow < limit {
            // Dijkstra over reduced costs; ties resolved by (distance, node)
            // ordering so runs are reproducible.
            let mut dist = vec![i64::MAX; n];
            let mut parent_edge: Vec<Option<EdgeId>> = vec![None; n];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &eid in &self.adj[u] {
                    let e = &self.edges[eid];
                    if e.residual <= 0 {
                        continue;
                    }
                    let reduced = e.cost + potential[u] - potential[e.to];
                    debug_assert!(reduced >= 0, "potentials violated");
                    let nd = d + reduced;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        parent_edge[e.to] = Some(eid);
                        heap.push(Reverse((nd, e.to)));
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            for v in 0..n {
                if dist[v] < i64::MAX {
                    potential[v] += dist[v];
                }
            }
            // Bottleneck along the shortest path.
            let mut push = limit - total.flow;
            let mut v = sink;
            while let Some(eid) = parent_edge[v] {
                push = push.min(self.edges[eid].residual);
                v = self.edges[eid ^ 1].to;
            }
            debug_assert!(push > 0);
            let mut v = sink;
            let mut path_cost = 0i64;
            while let Some(eid) = parent_edge[v] {
                self.edges[eid].residual -= push;
                self.edges[eid ^ 1].residual += push;
                path_cost += self.edges[eid].cost;
                v = self.edges[eid ^ 1].to;
            }
            total.flow += push;
            total.cost += push * path_cost;
        }
        total
    }

    /// Edge list with assigned flow, one line per forward edge:
    /// `from,to,capacity,cost,flow`. Useful for dumping a crossing network.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("from,to,capacity,cost,flow\n");
        for (from, edges) in self.adj.iter().enumerate() {
            for &eid in edges {
                if eid % 2 != 0 {
                    continue;
                }
                let e = &self.edges[eid];
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    from,
                    e.to,
                    self.caps[eid / 2],
                    e.cost,
                    self.flow_on(eid)
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new(3);
        let a = net.add_edge(0, 1, 5, 2);
        let b = net.add_edge(1, 2, 3, 1);
        let r = net.min_cost_flow(0, 2, i64::MAX);
        assert_eq!(r, FlowResult { flow: 3, cost: 9 });
        assert_eq!(net.flow_on(a), 3);
        assert_eq!(net.flow_on(b), 3);
    }

    #[test]
    fn prefers_cheap_path_then_spills() {
        // Two parallel 0->1 routes: cheap cap 2 cost 1, dear cap 5 cost 4.
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 2, 1);
        net.add_edge(0, 2, 5, 4);
        net.add_edge(1, 3, 10, 0);
        net.add_edge(2, 3, 10, 0);
        let r = net.min_cost_flow(0, 3, 4);
        assert_eq!(r, FlowResult { flow: 4, cost: 2 * 1 + 2 * 4 });
    }

    #[test]
    fn classic_max_flow_value() {
        // CLRS-style example with known max flow 23.
        let mut net = FlowNetwork::new(6);
        let caps = [
            (0, 1, 16),
            (0, 2, 13),
            (1, 3, 12),
            (2, 1, 4),
            (2, 4, 14),
            (3, 2, 9),
            (3, 5, 20),
            (4, 3, 7),
            (4, 5, 4),
        ];
        for (u, v, c) in caps {
            net.add_edge(u, v, c, 0);
        }
        let r = net.min_cost_flow(0, 5, i64::MAX);
        assert_eq!(r.flow, 23);
        assert_eq!(r.cost, 0);
    }

    #[test]
    fn flow_limit_respected() {
        let mut net = FlowNetwork::new(2);
        net.add_edge(0, 1, 100, 3);
        let r = net.min_cost_flow(0, 1, 7);
        assert_eq!(r, FlowResult { flow: 7, cost: 21 });
    }

    /// Brute-force oracle: minimum-cost perfect-ish assignment of n tasks to
    /// m slots (each slot holds one task) must match the flow solution.
    #[test]
    fn assignment_matches_exhaustive_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let n = rng.gen_range(1..=5); // tasks
            let m = rng.gen_range(n..=7); // slots
            let cost: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0..20)).collect())
                .collect();

            // Exhaustive: choose a distinct slot per task.
            fn best(cost: &[Vec<i64>], task: usize, used: &mut Vec<bool>) -> i64 {
                if task == cost.len() {
                    return 0;
                }
                let mut b = i64::MAX;
                for s in 0..used.len() {
                    if !used[s] {
                        used[s] = true;
                        let rest = best(cost, task + 1, used);
                        if rest < i64::MAX {
                            b = b.min(cost[task][s] + rest);
                        }
                        used[s] = false;
                    }
                }
                b
            }
            let oracle = best(&cost, 0, &mut vec![false; m]);

            let mut net = FlowNetwork::new(2 + n + m);
            let (src, sink) = (0, 1);
            for t in 0..n {
                net.add_edge(src, 2 + t, 1, 0);
                for s in 0..m {
                    net.add_edge(2 + t, 2 + n + s, 1, cost[t][s]);
                }
            }
            for s in 0..m {
                net.add_edge(2 + n + s, sink, 1, 0);
            }
            let r = net.min_cost_flow(src, sink, i64::MAX);
            assert_eq!(r.flow as usize, n, "trial {trial}: all tasks assigned");
            assert_eq!(r.cost, oracle, "trial {trial}: minimal cost");
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let build = || {
            let mut net = FlowNetwork::new(8);
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let mut ids = Vec::new();
            for _ in 0..20 {
                let u = rng.gen_range(0..7);
                let v = rng.gen_range(u + 1..8);
                ids.push(net.add_edge(u, v, rng.gen_range(1..6), rng.gen_range(0..9)));
            }
            net.min_cost_flow(0, 7, i64::MAX);
            (net.to_csv(), ids)
        };
        let (a, _) = build();
        let (b, _) = build();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_dump_shape() {
        let mut net = FlowNetwork::new(2);
        net.add_edge(0, 1, 4, 2);
        net.min_cost_flow(0, 1, i64::MAX);
        assert_eq!(net.to_csv(), "from,to,capacity,cost,flow\n0,1,4,2,4\n");
    }

    #[test]
    #[should_panic(expected = "negative cost")]
    fn negative_cost_rejected() {
        let mut net = FlowNetwork::new(2);
        net.add_edge(0, 1, 1, -1);
    }

    #[test]
    fn disconnected_sink_yields_zero() {
        let mut net = FlowNetwork::new(3);
        net.add_edge(0, 1, 5, 1);
        let r = net.min_cost_flow(0, 2, i64::MAX);
        assert_eq!(r, FlowResult { flow: 0, cost: 0 });
    }
}
