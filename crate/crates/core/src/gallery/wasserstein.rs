use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_cap, DEFAULT_POINT_CAP};
use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, FiniteBimetricSpace, Label};

pub type Q = Ratio<i64>;

/// Support cap for exact transport.
pub const TRANSPORT_SUPPORT_CAP: usize = 400;

/// A probability measure on the grid `{1/n, ..., n/n}^d` with rational
/// weights. Atom `idx` has 1-based coordinates given by the base-`n` digits of
/// `idx`, first coordinate most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeMeasure {
    d: usize,
    n: usize,
    weights: Vec<Q>,
}

fn grid_size(d: usize, n: usize) -> Result<usize> {
    if d == 0 || n == 0 {
        return Err(Error::Domain("lattice needs d >= 1 and n >= 1".into()));
    }
    n.checked_pow(d as u32)
        .filter(|s| *s <= 1 << 20)
        .ok_or(Error::SizeCap {
            what: "lattice grid",
            size: usize::MAX,
            cap: 1 << 20,
        })
}

fn coords(idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    let mut rest = idx;
    for slot in c.iter_mut().rev() {
        *slot = rest % n + 1;
        rest /= n;
    }
    c
}

/// `l_inf` distance between atoms in units of `1/n`.
fn steps(a: usize, b: usize, d: usize, n: usize) -> i64 {
    coords(a, d, n)
        .iter()
        .zip(coords(b, d, n))
        .map(|(x, y)| x.abs_diff(y) as i64)
        .max()
        .unwrap_or(0)
}

impl LatticeMeasure {
    pub fn new(d: usize, n: usize, weights: Vec<Q>) -> Result<Self> {
        let size = grid_size(d, n)?;
        if weights.len() != size {
            return Err(Error::Structural(format!(
                "{} weights for a grid of {size} atoms",
                weights.len()
            )));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::Domain("negative weight".into()));
        }
        let total: Q = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { d, n, weights })
    }

    pub fn point_mass(d: usize, n: usize, atom: usize) -> Result<Self> {
        let size = grid_size(d, n)?;
        if atom >= size {
            return Err(Error::Domain(format!("atom {atom} outside grid of {size}")));
        }
        let mut w = vec![Q::zero(); size];
        w[atom] = Q::one();
        Self::new(d, n, w)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.weights.len()).filter(|&i| !self.weights[i].is_zero())
    }

    /// 1-based grid coordinates of atom `idx`.
    pub fn coords(&self, idx: usize) -> Vec<usize> {
        coords(idx, self.d, self.n)
    }

    /// True if every weight is an integer multiple of `1/q`.
    pub fn on_lattice(&self, q: i64) -> bool {
        self.weights.iter().all(|w| (w * q).is_integer())
    }
}

/// An optimal transport plan with its exact cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Transport {
    pub cost: Q,
    /// `(from atom, to atom, mass)` for every positive flow.
    pub plan: Vec<(usize, usize, Q)>,
    /// A dual solution with equal objective was found and checked.
    pub certified: bool,
}

impl Transport {
    pub fn value(&self) -> f64 {
        self.cost.to_f64().unwrap_or(f64::NAN)
    }
}

struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

struct FlowGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
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

    /// Successive shortest paths with Dijkstra on reduced costs.
    fn min_cost_flow(&mut self, s: usize, t: usize) -> i64 {
        let v = self.adj.len();
        let mut pot = vec![0i64; v];
        let mut total = 0i64;
        loop {
            let mut dist = vec![i64::MAX; v];
            let mut prev = vec![usize::MAX; v];
            let mut done = vec![false; v];
            dist[s] = 0;
            loop {
                let mut u = usize::MAX;
                for i in 0..v {
                    if !done[i] && dist[i] != i64::MAX && (u == usize::MAX || dist[i] < dist[u]) {
                        u = i;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap > 0 {
                        let nd = dist[u] + edge.cost + pot[u] - pot[edge.to];
                        if nd < dist[edge.to] {
                            dist[edge.to] = nd;
                            prev[edge.to] = e;
                        }
                    }
                }
            }
            if dist[t] == i64::MAX {
                return total;
            }
            for i in 0..v {
                if dist[i] != i64::MAX {
                    pot[i] += dist[i];
                }
            }
            let mut push = i64::MAX;
            let mut x = t;
            while x != s {
                let e = prev[x];
                push = push.min(self.edges[e].cap);
                x = self.edges[e ^ 1].to;
            }
            let mut x = t;
            while x != s {
                let e = prev[x];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                total += push * self.edges[e].cost;
                x = self.edges[e ^ 1].to;
            }
        }
    }

    /// Potentials with no negative reduced cost on any residual arc, or `None`
    /// if the residual graph has a negative cycle.
    fn residual_potentials(&self) -> Option<Vec<i64>> {
        let v = self.adj.len();
        let mut p = vec![0i64; v];
        for round in 0..=v {
            let mut changed = false;
            for u in 0..v {
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap > 0 && p[u] + edge.cost < p[edge.to] {
                        p[edge.to] = p[u] + edge.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Some(p);
            }
            if round == v {
                break;
            }
        }
        None
    }
}

/// Exact 1-Wasserstein distance with `l_inf` ground cost.
///
/// Only the signed difference `mu - nu` is transported (shared mass stays put
/// at zero cost). Supplies are scaled to integers by the lcm of the weight
/// denominators and costs are measured in grid steps, so the min-cost flow
/// runs in exact integer arithmetic. The result is certified by a dual
/// solution read off a Bellman-Ford pass on the residual graph.
pub fn w1_distance(mu: &LatticeMeasure, nu: &LatticeMeasure) -> Result<Transport> {
    if (mu.d, mu.n) != (nu.d, nu.n) {
        return Err(Error::Domain("measures live on different grids".into()));
    }
    let support = (0..mu.weights.len())
        .filter(|&i| !mu.weights[i].is_zero() || !nu.weights[i].is_zero())
        .count();
    check_cap("transport support", support, TRANSPORT_SUPPORT_CAP)?;

    let diff: Vec<Q> = mu.weights.iter().zip(&nu.weights).map(|(a, b)| a - b).collect();
    let scale = diff.iter().fold(1i64, |l, q| l.lcm(q.denom()));
    let sources: Vec<(usize, i64)> = diff
        .iter()
        .enumerate()
        .filter(|(_, q)| q.is_positive())
        .map(|(i, q)| (i, (q * scale).to_integer()))
        .collect();
    let sinks: Vec<(usize, i64)> = diff
        .iter()
        .enumerate()
        .filter(|(_, q)| q.is_negative())
        .map(|(i, q)| (i, -(q * scale).to_integer()))
        .collect();
    let supply: i64 = sources.iter().map(|s| s.1).sum();

    let (a, b) = (sources.len(), sinks.len());
    let (s, t) = (0, a + b + 1);
    let mut g = FlowGraph::new(a + b + 2);
    for (i, &(_, q)) in sources.iter().enumerate() {
        g.add(s, 1 + i, q, 0);
    }
    for (j, &(_, q)) in sinks.iter().enumerate() {
        g.add(1 + a + j, t, q, 0);
    }
    let mut arcs = Vec::with_capacity(a * b);
    for (i, &(x, _)) in sources.iter().enumerate() {
        for (j, &(y, _)) in sinks.iter().enumerate() {
            let c = steps(x, y, mu.d, mu.n);
            arcs.push((i, j, c, g.add(1 + i, 1 + a + j, supply, c)));
        }
    }
    let cost = g.min_cost_flow(s, t);
    let routed: i64 = sources
        .iter()
        .enumerate()
        .map(|(i, &(_, q))| q - g.edges[g.adj[s][i]].cap)
        .sum();
    if routed != supply {
        return Err(Error::Internal(format!("routed {routed} of {supply} units")));
    }

    let mut plan = Vec::new();
    for &(i, j, _, e) in &arcs {
        let f = supply - g.edges[e].cap;
        if f > 0 {
            plan.push((sources[i].0, sinks[j].0, Q::new(f, scale)));
        }
    }
    let certified = g.residual_potentials().is_some_and(|p| {
        let feasible = arcs.iter().all(|&(i, j, c, _)| p[1 + a + j] - p[1 + i] <= c);
        let dual: i64 = sinks.iter().enumerate().map(|(j, &(_, q))| q * p[1 + a + j]).sum::<i64>()
            - sources.iter().enumerate().map(|(i, &(_, q))| q * p[1 + i]).sum::<i64>();
        feasible && dual == cost
    });
    if !certified {
        return Err(Error::Internal("transport optimality certificate failed".into()));
    }
    Ok(Transport {
        cost: Q::new(cost, scale * mu.n as i64),
        plan,
        certified,
    })
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=total).rev() {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// All measures on `{1/n, ..., n/n}^d` with weights in `(1/denom) Z`, with
/// the exact `W1` distance on both metrics.
pub fn lattice_measure_space(d: usize, n: usize, denom: usize) -> Result<FiniteBimetricSpace> {
    let size = grid_size(d, n)?;
    if denom == 0 {
        return Err(Error::Domain("denominator must be positive".into()));
    }
    let count = binomial((denom + size - 1) as u64, (size - 1) as u64);
    let count = count.to_usize().unwrap_or(usize::MAX);
    check_cap("lattice measure space", count, DEFAULT_POINT_CAP)?;
    let mut comps = Vec::with_capacity(count);
    compositions(denom, size, &mut Vec::new(), &mut comps);
    let measures: Vec<LatticeMeasure> = comps
        .iter()
        .map(|c| {
            let w = c.iter().map(|&k| Q::new(k as i64, denom as i64)).collect();
            LatticeMeasure::new(d, n, w)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..count)
        .flat_map(|i| (i + 1..count).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| w1_distance(&measures[i], &measures[j]).map(|t| t.value()))
        .collect::<Result<_>>()?;
    let mut rows = vec![vec![0.0; count]; count];
    for (&(i, j), v) in pairs.iter().zip(values) {
        rows[i][j] = v;
        rows[j][i] = v;
    }
    let labels = comps
        .iter()
        .map(|c| Label::Coords(c.iter().map(|&k| k as f64 / denom as f64).collect()))
        .collect();
    FiniteBimetricSpace::single(labels, DistanceMatrix::from_rows(rows)?, false)
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The finite covering of the Wasserstein space at resolution `gamma`: grid
/// `S` with side `n = ceil(2 / gamma)`, the count of `1/|S|`-lattice measures
/// on `S`, and a boustrophedon ordering of `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStructure {
    pub d: usize,
    pub gamma: f64,
    pub n: usize,
    /// 1-based coordinates of each atom of `S` (value `c / n`), in atom order.
    pub points: Vec<Vec<usize>>,
    /// `|Lambda| = binom(2|S| - 1, |S| - 1)`.
    #[serde(with = "biguint_string")]
    pub lambda_size: BigUint,
    /// Atom indices in salesman order.
    pub path: Vec<usize>,
    /// Total `l_inf` path length in grid steps of `1/n`.
    pub path_steps: u64,
    pub path_length: f64,
    /// `n^(d-1)`.
    pub path_bound: f64,
}

impl CoverStructure {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Dimension-major snake: the first coordinate is outermost, and each
/// sub-path is traversed forward or backward alternately.
fn snake(d: usize, n: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return (1..=n).map(|i| vec![i]).collect();
    }
    let inner = snake(d - 1, n);
    let mut out = Vec::with_capacity(n * inner.len());
    for i in 1..=n {
        let part: Box<dyn Iterator<Item = &Vec<usize>>> = if i % 2 == 1 {
            Box::new(inner.iter())
        } else {
            Box::new(inner.iter().rev())
        };
        for rest in part {
            let mut c = vec![i];
            c.extend_from_slice(rest);
            out.push(c);
        }
    }
    out
}

pub fn wasserstein_cover(d: usize, gamma: f64) -> Result<CoverStructure> {
    if !(1..=2).contains(&d) {
        return Err(Error::Domain(format!("cover dimension must be 1 or 2, got {d}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let n = (2.0 / gamma - 1e-9).ceil() as usize;
    let size = grid_size(d, n)?;
    let points: Vec<Vec<usize>> = (0..size).map(|i| coords(i, d, n)).collect();
    let index = |c: &[usize]| c.iter().fold(0usize, |acc, &x| acc * n + (x - 1));
    let path: Vec<usize> = snake(d, n).iter().map(|c| index(c)).collect();
    let path_steps: u64 = path
        .windows(2)
        .map(|w| steps(w[0], w[1], d, n) as u64)
        .sum();
    let size64 = size as u64;
    Ok(CoverStructure {
        d,
        gamma,
        n,
        points,
        lambda_size: binomial(2 * size64 - 1, size64 - 1),
        path,
        path_steps,
        path_length: path_steps as f64 / n as f64,
        path_bound: (n as f64).powi(d as i32 - 1),
    })
}

/// Output of [`round_to_cover`].
#[derive(Clone, Debug, PartialEq)]
pub struct Rounded {
    pub measure: LatticeMeasure,
    /// Cost of the forward-pushing plan, an upper bound on `W1(nu, measure)`.
    pub plan_cost: Q,
}

/// Walks the salesman path writing the accumulated weight at each atom as
/// `(m_k + omega_k) / |S|` with integer `m_k` and `omega_k` in `[0, 1)`,
/// keeping `m_k / |S|` and pushing `omega_k / |S|` to the next atom.
pub fn round_to_cover(nu: &LatticeMeasure, cover: &CoverStructure) -> Result<Rounded> {
    if (nu.d, nu.n) != (cover.d, cover.n) {
        return Err(Error::Domain(format!(
            "measure on grid (d={}, n={}) is not supported on the cover grid (d={}, n={})",
            nu.d, nu.n, cover.d, cover.n
        )));
    }
    let m = cover.size() as i64;
    let mut out = vec![Q::zero(); nu.weights.len()];
    let mut carry = Q::zero();
    let mut plan_cost = Q::zero();
    for (k, &x) in cover.path.iter().enumerate() {
        let scaled = (nu.weights[x] + carry) * m;
        let whole = scaled.floor();
        out[x] = whole / m;
        carry = (scaled - whole) / m;
        if let Some(&next) = cover.path.get(k + 1) {
            plan_cost += carry * Q::new(steps(x, next, nu.d, nu.n), nu.n as i64);
        } else if !carry.is_zero() {
            return Err(Error::Internal(format!("rounding left {carry} unplaced")));
        }
    }
    let measure = LatticeMeasure::new(nu.d, nu.n, out)?;
    if !measure.on_lattice(m) || plan_cost > Q::new(1, nu.n as i64) {
        return Err(Error::Internal("rounded measure misses the cover guarantees".into()));
    }
    Ok(Rounded { measure, plan_cost })
}
