use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// The `k` vertices of `[0, 1]ⁿ` with the smallest `<v, grad>`, in ascending order.
///
/// Starts from the best vertex (ones exactly where `grad < 0`); every other
/// vertex is the best one with a set of coordinates flipped, costing `Σ |grad_i|`
/// over the flips. Flip sets are enumerated best-first: coordinates are sorted
/// by `|grad_i|` and each popped set `S` with largest sorted position `j` spawns
/// `S ∪ {j+1}` and `S \ {j} ∪ {j+1}`, which visits every subset exactly once in
/// nondecreasing cost.
pub fn hypercube_k_best(grad: &[f64], k: usize) -> Vec<Vec<bool>> {
    let n = grad.len();
    let base: Vec<bool> = grad.iter().map(|&g| g < 0.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| grad[a].abs().total_cmp(&grad[b].abs()).then(a.cmp(&b)));
    let costs: Vec<f64> = order.iter().map(|&i| grad[i].abs()).collect();

    let mut out = Vec::with_capacity(k);
    out.push(base.clone());
    let mut heap = BinaryHeap::new();
    if n > 0 {
        heap.push(FlipSet {
            cost: costs[0],
            positions: vec![0],
        });
    }
    while out.len() < k {
        let Some(set) = heap.pop() else { break };
        let mut v = base.clone();
        for &p in &set.positions {
            let i = order[p];
            v[i] = !v[i];
        }
        out.push(v);
        let j = *set.positions.last().expect("non-empty flip set");
        if j + 1 < n {
            let mut grow = set.positions.clone();
            grow.push(j + 1);
            heap.push(FlipSet {
                cost: set.cost + costs[j + 1],
                positions: grow,
            });
            let mut shift = set.positions;
            *shift.last_mut().expect("non-empty") = j + 1;
            heap.push(FlipSet {
                cost: set.cost - costs[j] + costs[j + 1],
                positions: shift,
            });
        }
    }
    out
}

#[derive(Debug, PartialEq)]
struct FlipSet {
    cost: f64,
    positions: Vec<usize>,
}

impl Eq for FlipSet {}

impl Ord for FlipSet {
    // min-heap on cost, then lexicographic positions
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.positions.cmp(&self.positions))
    }
}

impl PartialOrd for FlipSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
