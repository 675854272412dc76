//! Time-varying undirected communication graphs and their mixing matrices.
//!
//! A [`GraphSchedule`] is a periodic sequence of doubly stochastic matrices;
//! the matrix used at communication step `k` is `matrices[k mod P]`. Each
//! epoch of the algorithm multiplies several consecutive matrices into a
//! [`ConsensusWeights`] transition matrix
//! `Phi(s + c, s) = A(s + c) A(s + c - 1) ... A(s)`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Dense row-major square matrix of mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    m: usize,
    data: Vec<f64>,
}

impl MixingMatrix {
    pub fn identity(m: usize) -> Self {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + i] = 1.0;
        }
        MixingMatrix { m, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut data = Vec::with_capacity(m * m);
        for r in rows {
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(MixingMatrix { m, data })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Undirected edges carried by nonzero off-diagonal weights.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if self.get(i, j) != 0.0 || self.get(j, i) != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn max_stochastic_defect(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for i in 0..m {
            let row: f64 = (0..m).map(|j| self.get(i, j)).sum();
            let col: f64 = (0..m).map(|j| self.get(j, i)).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        worst
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= 0.0) && self.max_stochastic_defect() <= tol
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// First entry violating the lower bound `eta` on the diagonal and on
    /// every nonzero off-diagonal (up to rounding).
    pub fn eta_violation(&self, eta: f64) -> Option<(usize, usize, f64)> {
        for i in 0..self.m {
            for j in 0..self.m {
                let v = self.get(i, j);
                if (i == j || v != 0.0) && v < eta - STOCHASTIC_TOL {
                    return Some((i, j, v));
                }
            }
        }
        None
    }

    /// `self * rhs`
    pub fn matmul(&self, rhs: &MixingMatrix) -> MixingMatrix {
        let m = self.m;
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..m {
                    data[i * m + j] += a * rhs.get(k, j);
                }
            }
        }
        MixingMatrix { m, data }
    }

    /// Row `i` combination `sum_l a_il * xs[l]`.
    pub fn mix_row(&self, i: usize, xs: &[Vec<f64>]) -> Vec<f64> {
        let d = xs.first().map_or(0, Vec::len);
        let mut out = vec![0.0; d];
        for (l, x) in xs.iter().enumerate() {
            let w = self.get(i, l);
            if w != 0.0 {
                crate::vecops::axpy(w, x, &mut out);
            }
        }
        out
    }
}

fn normalize_edges(edges: &[(usize, usize)], m: usize) -> Result<BTreeSet<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a == b || a >= m || b >= m {
            return Err(Error::InvalidEdge(a, b, m));
        }
        set.insert((a.min(b), a.max(b)));
    }
    Ok(set)
}

/// Metropolis weights: `a_ij = 1 / (1 + max(deg_i, deg_j))` on edges and the
/// remainder on the diagonal.
pub fn metropolis_weights(edges: &[(usize, usize)], m: usize, eta: f64) -> Result<MixingMatrix> {
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidEta(eta));
    }
    let set = normalize_edges(edges, m)?;
    let mut deg = vec![0usize; m];
    for &(a, b) in &set {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut data = vec![0.0; m * m];
    for &(a, b) in &set {
        let w = 1.0 / (1 + deg[a].max(deg[b])) as f64;
        data[a * m + b] = w;
        data[b * m + a] = w;
    }
    for i in 0..m {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| data[i * m + j]).sum();
        data[i * m + i] = 1.0 - off;
    }
    let mat = MixingMatrix { m, data };
    if let Some((row, col, value)) = mat.eta_violation(eta) {
        return Err(Error::EtaViolation {
            row,
            col,
            value,
            eta,
        });
    }
    Ok(mat)
}

/// How many communication steps an epoch performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsMode {
    /// `t + 1` factors at epoch `t` (the inclusive product of the transition matrix).
    Growing,
    /// A constant `K >= 1` factors per epoch.
    Fixed(usize),
}

impl StepsMode {
    /// Number of matrix factors multiplied at epoch `t`.
    pub fn factors(self, t: usize) -> usize {
        match self {
            StepsMode::Growing => t + 1,
            StepsMode::Fixed(k) => k.max(1),
        }
    }

    /// Communication steps consumed by epochs `0..t`.
    pub fn steps_before(self, t: usize) -> usize {
        match self {
            StepsMode::Growing => t * (t + 1) / 2,
            StepsMode::Fixed(k) => t * k.max(1),
        }
    }
}

/// Periodic sequence of mixing matrices with a declared connectivity window.
#[derive(Debug, Clone)]
pub struct GraphSchedule {
    matrices: Vec<MixingMatrix>,
    window: usize,
    eta: f64,
}

impl GraphSchedule {
    pub fn new(matrices: Vec<MixingMatrix>, window: usize, eta: f64) -> Result<Self> {
        let m = matrices.first().ok_or(Error::EmptyGraph)?.size();
        if let Some(bad) = matrices.iter().find(|a| a.size() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.size(),
            });
        }
        if window == 0 {
            return Err(Error::Config("connectivity window must be >= 1".into()));
        }
        Ok(GraphSchedule {
            matrices,
            window,
            eta,
        })
    }

    /// Metropolis matrix for each period slot.
    pub fn from_edge_slots(
        m: usize,
        slots: &[Vec<(usize, usize)>],
        eta: f64,
        window: usize,
    ) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Config("schedule needs at least one slot".into()));
        }
        let matrices = slots
            .iter()
            .map(|edges| metropolis_weights(edges, m, eta))
            .collect::<Result<Vec<_>>>()?;
        Self::new(matrices, window, eta)
    }

    /// Seeded edge-dropout schedule: each slot keeps every base edge
    /// independently with probability `1 - drop_prob`.
    pub fn edge_dropout(
        m: usize,
        base: &[(usize, usize)],
        period: usize,
        drop_prob: f64,
        eta: f64,
        window: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<Vec<(usize, usize)>> = (0..period.max(1))
            .map(|_| {
                base.iter()
                    .copied()
                    .filter(|_| rng.random::<f64>() >= drop_prob)
                    .collect()
            })
            .collect();
        Self::from_edge_slots(m, &slots, eta, window)
    }

    pub fn agents(&self) -> usize {
        self.matrices[0].size()
    }

    pub fn period(&self) -> usize {
        self.matrices.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn matrices(&self) -> &[MixingMatrix] {
        &self.matrices
    }

    /// Matrix used at communication step `k`.
    pub fn matrix(&self, k: usize) -> &MixingMatrix {
        &self.matrices[k % self.matrices.len()]
    }

    /// `A(start + count - 1) ... A(start + 1) A(start)`
    pub fn product(&self, start: usize, count: usize) -> ConsensusWeights {
        let mut phi = MixingMatrix::identity(self.agents());
        for k in start..start + count {
            phi = self.matrix(k).matmul(&phi);
        }
        ConsensusWeights(phi)
    }
}

/// Multi-step mixing coefficients `lambda_{jl}` for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights(pub MixingMatrix);

impl ConsensusWeights {
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.0.get(j, l)
    }

    pub fn matrix(&self) -> &MixingMatrix {
        &self.0
    }

    /// `max_{j,l} |lambda_jl - 1/m|`
    pub fn max_deviation_from_uniform(&self) -> f64 {
        let m = self.0.size();
        let u = 1.0 / m as f64;
        self.0.data.iter().map(|v| (v - u).abs()).fold(0.0, f64::max)
    }
}

/// Transition matrix for epoch `t`, with the step counter derived in closed form.
pub fn consensus_weights_for_epoch(s: &GraphSchedule, t: usize, mode: StepsMode) -> ConsensusWeights {
    s.product(mode.steps_before(t), mode.factors(t))
}

/// Running communication-step counter. Each epoch consumes its factors from
/// the current position and advances it.
#[derive(Debug, Clone, Default)]
pub struct ScheduleCursor {
    step: usize,
}

impl ScheduleCursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total communication steps performed so far.
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn epoch_weights(&mut self, s: &GraphSchedule, t: usize, mode: StepsMode) -> ConsensusWeights {
        let count = mode.factors(t);
        let w = s.product(self.step, count);
        self.step += count;
        w
    }

    /// Single matrix at the cursor; advances by one step.
    pub fn single_step<'a>(&mut self, s: &'a GraphSchedule) -> &'a MixingMatrix {
        let a = s.matrix(self.step);
        self.step += 1;
        a
    }
}

fn union_connected(m: usize, mats: &[&MixingMatrix]) -> bool {
    let mut adj = vec![Vec::new(); m];
    for a in mats {
        for (i, j) in a.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == m
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCheck {
    pub slot: usize,
    pub doubly_stochastic: bool,
    pub symmetric: bool,
    pub eta_bounded: bool,
}

impl MatrixCheck {
    pub fn passed(&self) -> bool {
        self.doubly_stochastic && self.symmetric && self.eta_bounded
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowCheck {
    pub start: usize,
    pub connected: bool,
}

/// Outcome of checking a schedule against the network assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub agents: usize,
    pub window: usize,
    pub eta: f64,
    pub matrices: Vec<MatrixCheck>,
    pub windows: Vec<WindowCheck>,
}

impl ValidationReport {
    pub fn matrices_ok(&self) -> bool {
        self.matrices.iter().all(MatrixCheck::passed)
    }

    pub fn connectivity_ok(&self) -> bool {
        self.windows.iter().all(|w| w.connected)
    }

    pub fn passed(&self) -> bool {
        self.matrices_ok() && self.connectivity_ok()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "graph schedule: m = {}, period = {}, B = {}, eta = {}",
            self.agents,
            self.matrices.len(),
            self.window,
            self.eta
        )?;
        let yn = |b: bool| if b { "ok" } else { "FAIL" };
        for c in &self.matrices {
            writeln!(
                f,
                "  slot {}: doubly stochastic {}, symmetric {}, eta-bounded {}",
                c.slot,
                yn(c.doubly_stochastic),
                yn(c.symmetric),
                yn(c.eta_bounded)
            )?;
        }
        for w in &self.windows {
            writeln!(
                f,
                "  window [{}, {}): union connected {}",
                w.start,
                w.start + self.window,
                yn(w.connected)
            )?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Checks every slot's matrix and every cyclic window of `B` consecutive slots.
pub fn validate_schedule(s: &GraphSchedule) -> ValidationReport {
    let m = s.agents();
    let matrices = s
        .matrices
        .iter()
        .enumerate()
        .map(|(slot, a)| MatrixCheck {
            slot,
            doubly_stochastic: a.is_doubly_stochastic(STOCHASTIC_TOL),
            symmetric: a.is_symmetric(),
            eta_bounded: a.eta_violation(s.eta).is_none(),
        })
        .collect();
    let windows = (0..s.period())
        .map(|start| {
            let mats: Vec<&MixingMatrix> = (start..start + s.window).map(|k| s.matrix(k)).collect();
            WindowCheck {
                start,
                connected: union_connected(m, &mats),
            }
        })
        .collect();
    ValidationReport {
        agents: m,
        window: s.window,
        eta: s.eta,
        matrices,
        windows,
    }
}

/// Cycle `0-1-...-(m-1)-0` split into three rotating slots whose union is the
/// full cycle.
pub fn rotating_ring_slots(m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut slots = vec![Vec::new(), Vec::new(), Vec::new()];
    if m < 2 {
        return slots;
    }
    let ring: Vec<(usize, usize)> = if m == 2 {
        vec![(0, 1)]
    } else {
        (0..m).map(|i| (i, (i + 1) % m)).collect()
    };
    for (k, e) in ring.into_iter().enumerate() {
        slots[k % 3].push(e);
    }
    slots
}

pub fn complete_edges(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_matrix(a: &MixingMatrix, expected: &[&[f64]]) {
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(a.get(i, j), *v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_two_agents() {
        let a = metropolis_weights(&[(0, 1)], 2, 0.1).unwrap();
        assert_matrix(&a, &[&[0.5, 0.5], &[0.5, 0.5]]);
    }

    #[test]
    fn metropolis_no_edges_is_identity() {
        let a = metropolis_weights(&[], 3, 0.1).unwrap();
        assert_eq!(a, MixingMatrix::identity(3));
    }

    #[test]
    fn metropolis_path() {
        let a = metropolis_weights(&[(0, 1), (1, 2)], 3, 0.1).unwrap();
        let t = 1.0 / 3.0;
        assert_matrix(&a, &[&[2.0 * t, t, 0.0], &[t, t, t], &[0.0, t, 2.0 * t]]);
        assert!(a.is_doubly_stochastic(1e-12));
        assert!(a.is_symmetric());
    }

    #[test]
    fn metropolis_errors() {
        assert!(matches!(metropolis_weights(&[], 0, 0.1), Err(Error::EmptyGraph)));
        assert!(matches!(
            metropolis_weights(&[(1, 1)], 3, 0.1),
            Err(Error::InvalidEdge(1, 1, 3))
        ));
        // star on 4 nodes: off-diagonal weight 1/4 < 0.3
        assert!(matches!(
            metropolis_weights(&[(0, 1), (0, 2), (0, 3)], 4, 0.3),
            Err(Error::EtaViolation { .. })
        ));
    }

    #[test]
    fn validation_examples() {
        let complete = GraphSchedule::from_edge_slots(4, &[complete_edges(4)], 0.1, 1).unwrap();
        assert!(validate_schedule(&complete).passed());

        let ident = GraphSchedule::new(vec![MixingMatrix::identity(3)], 5, 0.1).unwrap();
        let rep = validate_schedule(&ident);
        assert!(rep.matrices_ok());
        assert!(!rep.connectivity_ok());

        let ring = GraphSchedule::from_edge_slots(5, &rotating_ring_slots(5), 0.05, 3).unwrap();
        assert!(validate_schedule(&ring).passed());
        // no single slot is connected on its own
        let single = GraphSchedule::from_edge_slots(5, &rotating_ring_slots(5), 0.05, 1).unwrap();
        assert!(!validate_schedule(&single).passed());
        assert!(format!("{}", validate_schedule(&ring)).ends_with("PASS"));
    }

    #[test]
    fn first_epoch_is_single_factor() {
        let s = GraphSchedule::from_edge_slots(5, &rotating_ring_slots(5), 0.05, 3).unwrap();
        let w = consensus_weights_for_epoch(&s, 0, StepsMode::Growing);
        assert_eq!(w.0, *s.matrix(0));
    }

    #[test]
    fn constant_schedule_gives_powers() {
        let a = metropolis_weights(&[(0, 1), (1, 2)], 3, 0.1).unwrap();
        let s = GraphSchedule::new(vec![a.clone()], 2, 0.1).unwrap();
        let w = consensus_weights_for_epoch(&s, 3, StepsMode::Growing);
        let a4 = a.matmul(&a).matmul(&a).matmul(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(w.get(i, j), a4.get(i, j), epsilon = 1e-15);
            }
        }
        let w = consensus_weights_for_epoch(&s, 9, StepsMode::Fixed(2));
        let a2 = a.matmul(&a);
        assert_eq!(w.0, a2);
    }

    #[test]
    fn path_graph_mixes_toward_uniform() {
        let a = metropolis_weights(&[(0, 1), (1, 2)], 3, 0.1).unwrap();
        let s = GraphSchedule::new(vec![a], 2, 0.1).unwrap();
        let w = consensus_weights_for_epoch(&s, 5, StepsMode::Growing);
        assert!(w.max_deviation_from_uniform() <= 0.05);
        let w10 = s.product(0, 10);
        let w100 = s.product(0, 100);
        assert!(w100.max_deviation_from_uniform() < w10.max_deviation_from_uniform());
    }

    #[test]
    fn cursor_matches_closed_form() {
        let s = GraphSchedule::from_edge_slots(5, &rotating_ring_slots(5), 0.05, 3).unwrap();
        for mode in [StepsMode::Growing, StepsMode::Fixed(3)] {
            let mut cur = ScheduleCursor::new();
            for t in 0..12 {
                assert_eq!(cur.steps_taken(), mode.steps_before(t));
                let w = cur.epoch_weights(&s, t, mode);
                assert_eq!(w, consensus_weights_for_epoch(&s, t, mode));
            }
        }
    }

    proptest! {
        #[test]
        fn products_stay_doubly_stochastic(
            seed in any::<u64>(),
            m in 2usize..8,
            t in 0usize..20,
            drop in 0.0..0.9f64,
        ) {
            let s = GraphSchedule::edge_dropout(m, &complete_edges(m), 4, drop, 1.0 / m as f64, 4, seed)
                .unwrap();
            let w = consensus_weights_for_epoch(&s, t, StepsMode::Growing);
            prop_assert!(w.0.is_doubly_stochastic(1e-10));
            prop_assert!(w.0.rows().iter().flatten().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        }
    }
}
