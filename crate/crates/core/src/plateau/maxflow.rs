//! Dinic's maximum flow on a graph with real capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct FlowGraph {
    n: usize,
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    next: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self { n, head: vec![NONE; n], to: vec![], cap: vec![], next: vec![] }
    }

    fn arc(&mut self, u: usize, v: usize, c: f64) {
        self.to.push(v);
        self.cap.push(c);
        self.next.push(self.head[u]);
        self.head[u] = self.to.len() - 1;
    }

    /// Directed edge `u -> v` with capacity `c` and reverse capacity `rc`.
    pub fn add_edge(&mut self, u: usize, v: usize, c: f64, rc: f64) {
        debug_assert!(c >= 0.0 && rc >= 0.0);
        self.arc(u, v, c);
        self.arc(v, u, rc);
    }

    fn bfs(&self, s: usize, eps: f64, level: &mut [usize]) {
        level.iter_mut().for_each(|l| *l = NONE);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NONE {
                let v = self.to[e];
                if self.cap[e] > eps && level[v] == NONE {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64, eps: f64, level: &[usize], it: &mut [usize]) -> f64 {
        if u == t {
            return pushed;
        }
        while it[u] != NONE {
            let e = it[u];
            let v = self.to[e];
            if self.cap[e] > eps && level[v] == level[u] + 1 {
                let d = self.dfs(v, t, pushed.min(self.cap[e]), eps, level, it);
                if d > 0.0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            it[u] = self.next[e];
        }
        0.0
    }

    /// Maximum flow value; the graph is left in its residual state.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let cmax = self.cap.iter().cloned().fold(0.0, f64::max);
        let eps = 1e-13 * cmax;
        let mut level = vec![NONE; self.n];
        let mut flow = 0.0;
        loop {
            self.bfs(s, eps, &mut level);
            if level[t] == NONE {
                return flow;
            }
            let mut it = self.head.clone();
            loop {
                let f = self.dfs(s, t, f64::INFINITY, eps, &level, &mut it);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph (the canonical minimum cut).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let cmax = self.cap.iter().cloned().fold(0.0, f64::max);
        let mut level = vec![NONE; self.n];
        self.bfs(s, 1e-13 * cmax, &mut level);
        level.iter().map(|l| *l != NONE).collect()
    }
}
