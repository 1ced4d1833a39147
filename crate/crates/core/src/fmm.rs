//! Fast multipole summation of `Σ_j q_j / (x_j − z)` in the plane.
//!
//! Adaptive quadtrees on sources and targets, dual-tree traversal, scaled
//! multipole and local expansions. Boxes interact through expansions when
//! `ρ_a + ρ_b ≤ θ |c_a − c_b|` with `ρ` the circumradius of the box.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::gnk::{DenseBackend, SummationBackend};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmmBackend {
    /// Expansion order.
    pub order: usize,
    /// Separation ratio for the expansion test.
    pub theta: f64,
    /// Largest number of points in a leaf.
    pub leaf_size: usize,
    /// Below this many interactions the dense sum is used instead.
    pub dense_below: usize,
}

impl Default for FmmBackend {
    fn default() -> Self {
        Self {
            order: 44,
            theta: 0.5,
            leaf_size: 48,
            dense_below: 100_000_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    center: Complex64,
    half: f64,
    start: usize,
    end: usize,
    children: Vec<usize>,
}

impl Node {
    fn radius(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.half
    }

    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Quadtree over a point set. `order[i]` is the input index of the `i`-th
/// sorted point; every node owns a contiguous range of sorted points.
struct Tree {
    nodes: Vec<Node>,
    order: Vec<usize>,
    points: Vec<Complex64>,
}

impl Tree {
    fn build(points: &[Complex64], leaf_size: usize) -> Tree {
        let (mut lo, mut hi) = (Complex64::new(f64::MAX, f64::MAX), Complex64::new(f64::MIN, f64::MIN));
        for z in points {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let center = (lo + hi) / 2.0;
        let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let mut tree = Tree {
            nodes: Vec::new(),
            order: (0..points.len()).collect(),
            points: Vec::new(),
        };
        tree.split(points, center, half, 0, points.len(), leaf_size, 0);
        tree.points = tree.order.iter().map(|&i| points[i]).collect();
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn split(
        &mut self,
        points: &[Complex64],
        center: Complex64,
        half: f64,
        start: usize,
        end: usize,
        leaf_size: usize,
        depth: usize,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            center,
            half,
            start,
            end,
            children: Vec::new(),
        });
        if end - start <= leaf_size || depth >= 48 {
            return id;
        }
        let quadrant = |z: Complex64| (z.re >= center.re) as usize + 2 * (z.im >= center.im) as usize;
        let slice = &mut self.order[start..end];
        slice.sort_by_key(|&i| quadrant(points[i]));
        let mut bounds = [start; 5];
        for q in 0..4 {
            let count = self.order[start..end]
                .iter()
                .filter(|&&i| quadrant(points[i]) == q)
                .count();
            bounds[q + 1] = bounds[q] + count;
        }
        let h = half / 2.0;
        let mut children = Vec::new();
        for q in 0..4 {
            if bounds[q + 1] == bounds[q] {
                continue;
            }
            let dx = if q % 2 == 1 { h } else { -h };
            let dy = if q >= 2 { h } else { -h };
            let c = center + Complex64::new(dx, dy);
            children.push(self.split(points, c, h, bounds[q], bounds[q + 1], leaf_size, depth + 1));
        }
        self.nodes[id].children = children;
        id
    }
}

/// Binomial coefficients `C(a, b)` for `a ≤ 2p`.
struct Binomials {
    size: usize,
    table: Vec<f64>,
}

impl Binomials {
    fn new(p: usize) -> Self {
        let size = 2 * p + 1;
        let mut table = vec![0.0; size * size];
        for a in 0..size {
            table[a * size] = 1.0;
            for b in 1..=a {
                table[a * size + b] = table[(a - 1) * size + b - 1] + table[(a - 1) * size + b];
            }
        }
        Self { size, table }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.size + b]
    }
}

struct Plan<'a> {
    cfg: &'a FmmBackend,
    binom: Binomials,
    src: &'a Tree,
    tgt: &'a Tree,
    m2l: Vec<Vec<usize>>,
    p2p: Vec<Vec<usize>>,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a FmmBackend, src: &'a Tree, tgt: &'a Tree) -> Self {
        let mut plan = Plan {
            cfg,
            binom: Binomials::new(cfg.order),
            src,
            tgt,
            m2l: vec![Vec::new(); tgt.nodes.len()],
            p2p: vec![Vec::new(); tgt.nodes.len()],
        };
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&tgt.nodes[a], &src.nodes[b]);
            let d = (nb.center - na.center).norm();
            if na.radius() + nb.radius() <= cfg.theta * d {
                plan.m2l[a].push(b);
            } else if na.is_leaf() && nb.is_leaf() {
                plan.p2p[a].push(b);
            } else if nb.is_leaf() || (!na.is_leaf() && na.half >= nb.half) {
                stack.extend(na.children.iter().map(|&c| (c, b)));
            } else {
                stack.extend(nb.children.iter().map(|&c| (a, c)));
            }
        }
        plan
    }

    /// Scaled multipole coefficients `Σ q ((x − c)/ρ)^k` of every source box.
    fn upward(&self, q: &[Complex64]) -> Vec<Vec<Complex64>> {
        let p = self.cfg.order;
        let nodes = &self.src.nodes;
        let mut mult = vec![Vec::new(); nodes.len()];
        // children always come after their parent
        for id in (0..nodes.len()).rev() {
            let node = &nodes[id];
            let rho = node.radius();
            let mut coef = vec![ZERO; p + 1];
            if node.is_leaf() {
                for i in node.start..node.end {
                    let r = (self.src.points[i] - node.center) / rho;
                    let mut pow = q[i];
                    for c in coef.iter_mut() {
                        *c += pow;
                        pow *= r;
                    }
                }
            } else {
                for &ch in &node.children {
                    let child = &nodes[ch];
                    let d = (child.center - node.center) / rho;
                    let s = child.radius() / rho;
                    let mut src = mult[ch].clone();
                    let mut sk = 1.0;
                    for c in src.iter_mut() {
                        *c *= sk;
                        sk *= s;
                    }
                    // coef_l += Σ_k C(l,k) d^(l−k) src_k
                    let mut dpow = vec![Complex64::new(1.0, 0.0); p + 1];
                    for j in 1..=p {
                        dpow[j] = dpow[j - 1] * d;
                    }
                    for (l, out) in coef.iter_mut().enumerate() {
                        let mut acc = ZERO;
                        for (k, s) in src.iter().enumerate().take(l + 1) {
                            acc += self.binom.get(l, k) * dpow[l - k] * s;
                        }
                        *out += acc;
                    }
                }
            }
            mult[id] = coef;
        }
        mult
    }

    /// Scaled local coefficients contributed by the interaction list of `a`.
    fn local_from_lists(&self, a: usize, mult: &[Vec<Complex64>]) -> Vec<Complex64> {
        let p = self.cfg.order;
        let na = &self.tgt.nodes[a];
        let mut local = vec![ZERO; p + 1];
        let mut ut = vec![ZERO; p + 1];
        for &b in &self.m2l[a] {
            let nb = &self.src.nodes[b];
            let dvec = nb.center - na.center;
            let inv = 1.0 / dvec;
            let u = nb.radius() * inv;
            let v = na.radius() * inv;
            let mut upow = Complex64::new(1.0, 0.0);
            for (k, m) in mult[b].iter().enumerate() {
                ut[k] = if k % 2 == 0 { upow * m } else { -upow * m };
                upow *= u;
            }
            let mut vpow = inv;
            for (l, out) in local.iter_mut().enumerate() {
                let mut acc = ZERO;
                for (k, t) in ut.iter().enumerate() {
                    acc += self.binom.get(k + l, l) * t;
                }
                *out += vpow * acc;
                vpow *= v;
            }
        }
        local
    }

    fn run(&self, q_sorted: &[Complex64]) -> Vec<Complex64> {
        let p = self.cfg.order;
        let mult = self.upward(q_sorted);
        let nodes = &self.tgt.nodes;
        let mut local: Vec<Vec<Complex64>> = (0..nodes.len())
            .into_par_iter()
            .map(|a| self.local_from_lists(a, &mult))
            .collect();
        // shift parents into children, parents first
        for id in 0..nodes.len() {
            let parent = &nodes[id];
            if parent.is_leaf() || local[id].iter().all(|c| *c == ZERO) {
                continue;
            }
            let rho = parent.radius();
            let pl = local[id].clone();
            for &ch in &parent.children {
                let child = &nodes[ch];
                let e = (child.center - parent.center) / rho;
                let s = child.radius() / rho;
                let mut epow = vec![Complex64::new(1.0, 0.0); p + 1];
                for j in 1..=p {
                    epow[j] = epow[j - 1] * e;
                }
                let mut sk = 1.0;
                for k in 0..=p {
                    let mut acc = ZERO;
                    for l in k..=p {
                        acc += self.binom.get(l, k) * epow[l - k] * pl[l];
                    }
                    local[ch][k] += sk * acc;
                    sk *= s;
                }
            }
        }
        let leaves: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_leaf()).collect();
        let pieces: Vec<(usize, Vec<Complex64>)> = leaves
            .par_iter()
            .map(|&a| {
                let na = &nodes[a];
                let rho = na.radius();
                let out = (na.start..na.end)
                    .map(|i| {
                        let z = self.tgt.points[i];
                        let w = (z - na.center) / rho;
                        let mut acc = ZERO;
                        for c in local[a].iter().rev() {
                            acc = acc * w + c;
                        }
                        for &b in &self.p2p[a] {
                            let nb = &self.src.nodes[b];
                            for j in nb.start..nb.end {
                                let dz = self.src.points[j] - z;
                                let r2 = dz.norm_sqr();
                                if r2 > 0.0 {
                                    acc += q_sorted[j] * dz.conj() / r2;
                                }
                            }
                        }
                        acc
                    })
                    .collect();
                (a, out)
            })
            .collect();
        let mut result = vec![ZERO; self.tgt.points.len()];
        for (a, vals) in pieces {
            let na = &nodes[a];
            for (i, v) in (na.start..na.end).zip(vals) {
                result[self.tgt.order[i]] = v;
            }
        }
        result
    }
}

impl FmmBackend {
    fn sums(
        &self,
        points: &[Complex64],
        strengths: &[Complex64],
        targets: Option<&[Complex64]>,
        out: &mut [Complex64],
    ) {
        let src = Tree::build(points, self.leaf_size);
        let q_sorted: Vec<Complex64> = src.order.iter().map(|&i| strengths[i]).collect();
        let result = match targets {
            None => Plan::new(self, &src, &src).run(&q_sorted),
            Some(t) => {
                let tgt = Tree::build(t, self.leaf_size);
                Plan::new(self, &src, &tgt).run(&q_sorted)
            }
        };
        out.copy_from_slice(&result);
    }
}

impl SummationBackend for FmmBackend {
    fn self_sums(&self, points: &[Complex64], strengths: &[Complex64], out: &mut [Complex64]) {
        if points.len() * points.len() < self.dense_below {
            DenseBackend.self_sums(points, strengths, out);
        } else {
            self.sums(points, strengths, None, out);
        }
    }

    fn target_sums(
        &self,
        points: &[Complex64],
        strengths: &[Complex64],
        targets: &[Complex64],
        out: &mut [Complex64],
    ) {
        if points.len() * targets.len() < self.dense_below || targets.is_empty() {
            DenseBackend.target_sums(points, strengths, targets, out);
        } else {
            self.sums(points, strengths, Some(targets), out);
        }
    }
}
