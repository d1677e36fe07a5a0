//! Envelope (variable band) Cholesky factorization with reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use crate::scalar::Scalar;

/// Reverse Cuthill–McKee permutation of an undirected graph given as adjacency lists.
/// Returns `order[k]` = vertex placed at position `k`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if placed[start] {
            continue;
        }
        let root = pseudo_peripheral(adj, start);
        let mut queue = VecDeque::new();
        placed[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

// Endpoint of a repeated breadth-first sweep (George–Liu heuristic).
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = farthest(adj, root);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        root = far;
    }
    root
}

fn farthest(adj: &[Vec<usize>], root: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut best = (root, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > best.1 || (d == best.1 && adj[v].len() < adj[best.0].len()) {
            best = (v, d);
        }
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    best
}

/// Symmetric matrix stored by rows of its lower envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Skyline<T> {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Skyline<T> {
    /// `first[i]` is the leftmost stored column of row `i` (`first[i] <= i`).
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i);
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);
        Skyline {
            first,
            start,
            values: vec![T::zero(); total],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn stored(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.first[i]);
        self.start[i] + j - self.first[i]
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored, so callers add each
    /// off-diagonal pair once.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.values[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if c < self.first[r] {
            T::zero()
        } else {
            self.values[self.slot(r, c)]
        }
    }

    /// In-place `L L^T` factorization. Fails on a pivot at or below `rel_pivot * max diagonal`.
    pub fn factorize(mut self, rel_pivot: T) -> Result<CholeskyFactor<T>, usize> {
        let n = self.dim();
        let max_diag = (0..n).map(|i| self.get(i, i)).fold(T::zero(), T::max);
        let floor = rel_pivot * max_diag;
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let mut s = self.values[self.slot(i, j)];
                let (ri, rj) = (self.slot(i, k0), self.slot(j, k0));
                for k in 0..j - k0 {
                    s -= self.values[ri + k] * self.values[rj + k];
                }
                let djj = self.values[self.slot(j, j)];
                let sij = self.slot(i, j);
                self.values[sij] = s / djj;
            }
            let mut d = self.values[self.slot(i, i)];
            let r0 = self.slot(i, fi);
            for k in 0..i - fi {
                let l = self.values[r0 + k];
                d -= l * l;
            }
            if !(d > floor) {
                return Err(i);
            }
            let sii = self.slot(i, i);
            self.values[sii] = d.sqrt();
        }
        Ok(CholeskyFactor { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct CholeskyFactor<T> {
    l: Skyline<T>,
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let l = &self.l;
        let n = l.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = l.first[i];
            let r0 = l.slot(i, fi);
            let mut s = y[i];
            for k in fi..i {
                s -= l.values[r0 + k - fi] * y[k];
            }
            y[i] = s / l.values[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            y[i] /= l.values[l.slot(i, i)];
            let yi = y[i];
            let fi = l.first[i];
            let r0 = l.slot(i, fi);
            for k in fi..i {
                y[k] -= l.values[r0 + k - fi] * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bandwidth(adj: &[Vec<usize>], order: &[usize]) -> usize {
        let mut pos = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        adj.iter()
            .enumerate()
            .flat_map(|(v, ns)| ns.iter().map(move |&w| (v, w)))
            .map(|(v, w)| pos[v].abs_diff(pos[w]))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn rcm_is_permutation_and_narrows_grid() {
        // 10x10 grid graph numbered column-major in a scrambled way
        let n = 10;
        let id = |i: usize, j: usize| ((i + j * n) * 37) % (n * n);
        let mut adj = vec![Vec::new(); n * n];
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < n {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..n * n).collect::<Vec<_>>());
        let identity: Vec<usize> = (0..n * n).collect();
        assert!(bandwidth(&adj, &order) <= n + 1);
        assert!(bandwidth(&adj, &order) < bandwidth(&adj, &identity));
    }

    #[test]
    fn rcm_handles_components() {
        let adj = vec![vec![1], vec![0], vec![], vec![4], vec![3]];
        let mut o = reverse_cuthill_mckee(&adj);
        o.sort();
        assert_eq!(o, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn tridiagonal_solve() {
        let n = 6;
        let mut first = vec![0];
        first.extend((1..n).map(|i| i - 1));
        let mut a = Skyline::<f64>::new(first);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 4.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                s
            })
            .collect();
        let f = a.factorize(1e-12).unwrap();
        for (u, v) in f.solve(&b).iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        let mut a = Skyline::<f64>::new(vec![0, 0]);
        a.add(0, 0, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert_eq!(a.factorize(1e-12).unwrap_err(), 1);
    }
}
