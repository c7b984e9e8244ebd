use fixedbitset::FixedBitSet;

use super::SolverConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentSet {
    pub size: usize,
    pub members: Vec<usize>,
    /// `size` is the true maximum.
    pub exact: bool,
}

/// Maximum independent set of the graph with adjacency rows `adj`.
///
/// `adj` must be symmetric and loop-free. Components are solved separately;
/// a component larger than the threshold gets a min-degree greedy answer.
pub fn maximum_independent_set(adj: &[FixedBitSet], cfg: &SolverConfig) -> IndependentSet {
    let n = adj.len();
    let adj: Vec<FixedBitSet> = adj
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.grow(n);
            r
        })
        .collect();
    let mut members = Vec::new();
    let mut exact = true;
    for comp in components(&adj) {
        if comp.count_ones(..) > cfg.exact_threshold {
            members.extend(greedy(&adj, comp));
            exact = false;
            continue;
        }
        let seed = greedy(&adj, comp.clone());
        let mut search = Search {
            adj: &adj,
            best: seed,
            nodes: 0,
            budget: cfg.node_budget,
            aborted: false,
        };
        let mut cur = Vec::new();
        search.run(comp, &mut cur);
        exact &= !search.aborted;
        members.extend(search.best);
    }
    members.sort_unstable();
    IndependentSet {
        size: members.len(),
        members,
        exact,
    }
}

fn components(adj: &[FixedBitSet]) -> Vec<FixedBitSet> {
    let n = adj.len();
    let mut seen = FixedBitSet::with_capacity(n);
    let mut out = Vec::new();
    for s in 0..n {
        if seen.contains(s) {
            continue;
        }
        let mut comp = FixedBitSet::with_capacity(n);
        let mut stack = vec![s];
        seen.insert(s);
        while let Some(v) = stack.pop() {
            comp.insert(v);
            for w in adj[v].ones() {
                if !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn greedy(adj: &[FixedBitSet], mut cand: FixedBitSet) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some(v) = cand.ones().min_by_key(|&v| adj[v].intersection_count(&cand)) {
        out.push(v);
        cand.set(v, false);
        cand.difference_with(&adj[v]);
    }
    out
}

struct Search<'a> {
    adj: &'a [FixedBitSet],
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl Search<'_> {
    fn run(&mut self, mut cand: FixedBitSet, cur: &mut Vec<usize>) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let mark = cur.len();
        // vertices of degree at most one always belong to some maximum set
        loop {
            let low = cand.ones().find(|&v| self.adj[v].intersection_count(&cand) <= 1);
            match low {
                Some(v) => {
                    cur.push(v);
                    cand.set(v, false);
                    cand.difference_with(&self.adj[v]);
                }
                None => break,
            }
        }
        if cand.is_clear() {
            if cur.len() > self.best.len() {
                self.best = cur.clone();
            }
            cur.truncate(mark);
            return;
        }
        if cur.len() + self.clique_cover(&cand) <= self.best.len() {
            cur.truncate(mark);
            return;
        }
        let v = cand
            .ones()
            .max_by_key(|&v| self.adj[v].intersection_count(&cand))
            .expect("nonempty");
        let mut with = cand.clone();
        with.set(v, false);
        with.difference_with(&self.adj[v]);
        cur.push(v);
        self.run(with, cur);
        cur.pop();
        cand.set(v, false);
        self.run(cand, cur);
        cur.truncate(mark);
    }

    /// Number of cliques in a greedy clique cover: an upper bound on the
    /// independence number of `cand`.
    fn clique_cover(&self, cand: &FixedBitSet) -> usize {
        let mut cliques: Vec<FixedBitSet> = Vec::new();
        for v in cand.ones() {
            match cliques.iter_mut().find(|c| c.is_subset(&self.adj[v])) {
                Some(c) => c.insert(v),
                None => {
                    let mut c = FixedBitSet::with_capacity(cand.len());
                    c.insert(v);
                    cliques.push(c);
                }
            }
        }
        cliques.len()
    }
}
