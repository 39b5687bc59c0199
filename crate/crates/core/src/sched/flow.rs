//! Min-cost flow by successive shortest paths with Johnson potentials.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // Min-heap on distance, then node index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds `from → to` and returns its id for `flow_on`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    pub fn flow_on(&self, id: usize) -> i64 {
        self.edges[id ^ 1].cap
    }

    /// Pushes up to `limit` units from `s` to `t`; returns (flow, cost).
    /// Negative edge costs are allowed if the initial graph has no negative
    /// cycle.
    pub fn run(&mut self, s: usize, t: usize, limit: i64) -> (i64, f64) {
        let mut pot = self.bellman_ford(s);
        let (mut flow, mut cost) = (0i64, 0.0);
        let mut dist = vec![f64::INFINITY; self.n];
        let mut prev = vec![usize::MAX; self.n];
        while flow < limit {
            dist.fill(f64::INFINITY);
            prev.fill(usize::MAX);
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Item(0.0, s));
            while let Some(Item(d, v)) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                for &e in &self.adj[v] {
                    let ed = &self.edges[e];
                    if ed.cap <= 0 || !pot[ed.to].is_finite() {
                        continue;
                    }
                    // Reduced costs are non-negative up to rounding.
                    let nd = d + (ed.cost + pot[v] - pot[ed.to]).max(0.0);
                    if nd < dist[ed.to] {
                        dist[ed.to] = nd;
                        prev[ed.to] = e;
                        heap.push(Item(nd, ed.to));
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..self.n {
                if dist[v].is_finite() && pot[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                cost += push as f64 * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
        }
        (flow, cost)
    }

    fn bellman_ford(&self, s: usize) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; self.n];
        d[s] = 0.0;
        for _ in 0..self.n {
            let mut changed = false;
            for v in 0..self.n {
                if !d[v].is_finite() {
                    continue;
                }
                for &e in &self.adj[v] {
                    let ed = &self.edges[e];
                    if ed.cap > 0 && d[v] + ed.cost < d[ed.to] {
                        d[ed.to] = d[v] + ed.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        d
    }
}
