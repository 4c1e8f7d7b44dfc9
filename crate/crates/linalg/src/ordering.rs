use std::collections::VecDeque;

use crate::{CsrMatrix, Scalar};

/// A bijection between original and reordered indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// `new_of_old[i]` is the position of original index `i`.
    pub new_of_old: Vec<usize>,
    /// `old_of_new[k]` is the original index placed at position `k`.
    pub old_of_new: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            new_of_old: (0..n).collect(),
            old_of_new: (0..n).collect(),
        }
    }

    pub fn from_old_of_new(old_of_new: Vec<usize>) -> Self {
        let mut new_of_old = vec![usize::MAX; old_of_new.len()];
        for (k, &i) in old_of_new.iter().enumerate() {
            new_of_old[i] = k;
        }
        debug_assert!(new_of_old.iter().all(|&k| k != usize::MAX));
        Self {
            new_of_old,
            old_of_new,
        }
    }

    pub fn len(&self) -> usize {
        self.old_of_new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_of_new.is_empty()
    }

    /// Gathers `x` into the new ordering.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.old_of_new.iter().map(|&i| x[i]).collect()
    }

    /// Scatters a reordered vector back to the original ordering.
    pub fn apply_inverse<T: Copy>(&self, y: &[T]) -> Vec<T> {
        self.new_of_old.iter().map(|&k| y[k]).collect()
    }
}

fn symmetric_adjacency<T: Scalar>(a: &CsrMatrix<T>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, mark: &[bool]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([root]);
    level[root] = 0;
    let mut last = root;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if !mark[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let depth = level[last];
    (level, depth)
}

/// Pseudo-peripheral start vertex by repeated BFS from the deepest, lowest-degree vertex.
fn peripheral_root(adj: &[Vec<usize>], start: usize, mark: &[bool]) -> usize {
    let mut root = start;
    let (mut level, mut depth) = bfs_levels(adj, root, mark);
    loop {
        let candidate = (0..adj.len())
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(root);
        let (l2, d2) = bfs_levels(adj, candidate, mark);
        if d2 <= depth {
            return root;
        }
        root = candidate;
        level = l2;
        depth = d2;
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`.
///
/// Ties are broken by vertex index, so the result is deterministic.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Permutation {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        let root = peripheral_root(&adj, seed, &visited);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Permutation::from_old_of_new(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TripletBuilder;

    fn path_graph_shuffled(n: usize) -> CsrMatrix<f64> {
        // path 0-1-2-..., relabelled by a stride so the natural order has a wide band
        let label = |i: usize| (i * 7) % n;
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(label(i), label(i), 2.0);
            if i + 1 < n {
                b.push(label(i), label(i + 1), -1.0);
                b.push(label(i + 1), label(i), -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn rcm_recovers_tridiagonal_band() {
        let a = path_graph_shuffled(20);
        assert!(a.bandwidths().0 > 1);
        let p = reverse_cuthill_mckee(&a);
        let pa = a.permute_symmetric(&p.new_of_old);
        assert_eq!(pa.bandwidths(), (1, 1));
    }

    #[test]
    fn permutation_round_trip() {
        let p = Permutation::from_old_of_new(vec![2, 0, 3, 1]);
        let x = [10, 11, 12, 13];
        assert_eq!(p.apply(&x), vec![12, 10, 13, 11]);
        assert_eq!(p.apply_inverse(&p.apply(&x)), x.to_vec());
    }

    #[test]
    fn handles_disconnected_components() {
        let mut b = TripletBuilder::new(4, 4);
        for i in 0..4 {
            b.push(i, i, 1.0);
        }
        b.push(0, 3, 1.0);
        b.push(3, 0, 1.0);
        let p = reverse_cuthill_mckee(&b.build());
        let mut sorted = p.old_of_new.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }
}
