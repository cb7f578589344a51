//! Discrete s-minimal sets via minimum cut.
//!
//! The cells of the grid whose centers lie in `Omega` are free binary labels
//! (1 = in `E`). Everything else is the fixed exterior datum: a ring of
//! `padding_cells` voxelized layers around the grid plus the exact datum beyond
//! it. The discrete energy of a labeling `x` is
//!
//! `sum_{i<j kept} w_ij [x_i != x_j] + sum_i ( x_i u_in_i + (1 - x_i) u_out_i )`
//!
//! with `w_ij` the interaction of two cells, `u_in_i` the interaction of cell
//! `i` with the fixed complement and `u_out_i` with the fixed datum. The
//! `Omega^c x Omega^c` term is a constant and omitted.

pub mod maxflow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{default_lines, GridSpec, ShapeExpr, VoxelSet, P3};
use crate::kernel::KernelParams;
use crate::quadrature::engine::cell_average_potential;
use crate::quadrature::lattice::{shared_table, LatticeTable};
use crate::quadrature::QuadratureOptions;
use maxflow::FlowGraph;

/// Kept pairs above this count are refused before assembly.
pub const MAX_PAIRS: usize = 60_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauProblem {
    pub grid: GridSpec,
    pub omega: ShapeExpr,
    pub exterior_datum: ShapeExpr,
    pub kernel: KernelParams,
    /// Largest center distance of kept pairs; half the domain diameter when absent.
    #[serde(default)]
    pub pair_cutoff: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutGraph {
    /// Grid indices of the free cells; node `i` of the graph is `free_cells[i]`.
    pub free_cells: Vec<usize>,
    pub pair_edges: Vec<(u32, u32, f64)>,
    /// Cost of label 0 (interaction with the fixed datum), on the source edge.
    pub source_caps: Vec<f64>,
    /// Cost of label 1 (interaction with the fixed complement), on the sink edge.
    pub sink_caps: Vec<f64>,
    /// Added to every cut value to obtain the energy.
    pub constant: f64,
    /// Total weight of the pairs beyond the cutoff.
    pub dropped_pair_bound: f64,
    pub dense_pair_count: usize,
    /// Quadrature error estimate of the unary terms.
    pub unary_error: f64,
    pub cell_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGap {
    pub cell: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSolution {
    pub free_cells: Vec<usize>,
    pub labels: Vec<u8>,
    /// Discrete energy with the kept pairs (the minimized functional).
    pub energy: f64,
    /// Energy with every pair; lies in `[energy, energy + dropped_pair_bound]`.
    pub energy_all_pairs: f64,
    pub dropped_pair_bound: f64,
    pub unary_error: f64,
    /// Pair edges of the cut graph after the cutoff.
    pub kept_pairs: usize,
    pub volume: f64,
    /// Cell layers between the interface and the plane of a half-space datum.
    pub flatness: Option<f64>,
    /// `|label - datum trace|` on free cells with a face outside `Omega`.
    pub boundary_trace_gap: Vec<TraceGap>,
    pub max_trace_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVolumeSolution {
    pub solution: PlateauSolution,
    pub mu: f64,
    pub target_volume: f64,
    pub volume_gap: f64,
    /// `(mu, volume)` of the closest solutions below and above the target.
    pub below: (f64, f64),
    pub above: (f64, f64),
    /// Volumes along the bisection, in evaluation order.
    pub mu_path: Vec<(f64, f64)>,
}

struct Setup {
    padded: GridSpec,
    free: Vec<usize>,
    is_free: Vec<bool>,
    /// Multi-indices of the free cells in the padded grid.
    free_m: Vec<[i64; 3]>,
    /// Datum occupancy of every padded cell (unused for free cells).
    fixed_occ: Vec<f64>,
    table: Arc<LatticeTable>,
    cutoff: f64,
}

impl PlateauProblem {
    pub fn validate(&self) -> Result<usize> {
        self.grid.validate()?;
        self.quadrature.validate()?;
        let n = self.grid.dim();
        for s in [&self.omega, &self.exterior_datum] {
            let d = s.validate()?;
            if d != n {
                return Err(Error::DimensionMismatch { expected: n, got: d });
            }
        }
        if self.kernel.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.kernel.n });
        }
        let (lo, hi) = self.omega.bounds().ok_or_else(|| Error::Unbounded("the domain Omega must be bounded".into()))?;
        let tol = 1e-9 * self.grid.diameter();
        if (0..n).any(|i| lo[i] < self.grid.lo[i] - tol || hi[i] > self.grid.hi[i] + tol) {
            return Err(Error::param("plateau.grid", "must cover the domain Omega"));
        }
        if let Some(c) = self.pair_cutoff {
            if !(c > 0.0) {
                return Err(Error::param("plateau.pair_cutoff", "must be positive"));
            }
        }
        Ok(n)
    }

    pub fn cutoff(&self) -> f64 {
        self.pair_cutoff.unwrap_or_else(|| match self.omega.bounds() {
            Some((lo, hi)) => 0.5 * (0..self.grid.dim()).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt(),
            None => 0.5 * self.grid.diameter(),
        })
    }

    /// Grid indices of the cells whose centers lie in `Omega`.
    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.grid.num_cells()).filter(|&i| self.omega.contains_p(&self.grid.cell_center(i))).collect()
    }

    /// Pairs of free cells of the dense graph, reported before assembly.
    pub fn dense_pair_count(&self) -> usize {
        let f = self.free_cells().len();
        f * f.saturating_sub(1) / 2
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    fn setup(&self) -> Result<Setup> {
        let n = self.validate()?;
        let pad = self.quadrature.padding_cells;
        let padded = self.grid.padded(pad);
        let free = self.free_cells();
        if free.is_empty() {
            return Err(Error::param("plateau.omega", "contains no cell center"));
        }
        let mut is_free = vec![false; padded.num_cells()];
        let free_m: Vec<[i64; 3]> = free
            .iter()
            .map(|&c| {
                let m = self.grid.unravel(c);
                let mut q = [0usize; 3];
                for i in 0..n {
                    q[i] = m[i] + pad;
                }
                is_free[padded.ravel(&q)] = true;
                [q[0] as i64, q[1] as i64, q[2] as i64]
            })
            .collect();
        let outside = self.exterior_datum.clone().intersect(self.omega.clone().complement());
        let lines = default_lines(n);
        let fixed_occ: Vec<f64> = (0..padded.num_cells())
            .into_par_iter()
            .map(|i| if is_free[i] { 0.0 } else { padded.cell_fraction_lines(&outside, i, lines) })
            .collect();
        let mut extent = [0usize; 3];
        for i in 0..n {
            extent[i] = padded.cells[i] - 1;
        }
        let table = shared_table(self.kernel, padded.cell_dims(), extent, self.quadrature.near_field_rel_tol);
        Ok(Setup { padded, free, is_free, free_m, fixed_occ, table, cutoff: self.cutoff() })
    }
}

fn offset(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn center_distance(o: &[i64; 3], h: &P3) -> f64 {
    (0..3).map(|i| (o[i] as f64 * h[i]).powi(2)).sum::<f64>().sqrt()
}

/// Seed of the labelings sampled by the identity check in debug builds.
pub const DEFAULT_CHECK_SEED: u64 = 0x5eed;

/// Builds the cut graph. With `checks = Some(seed)`, the cut/energy identity is
/// verified on three random labelings drawn from `seed`.
pub fn assemble_graph_checked(p: &PlateauProblem, checks: Option<u64>) -> Result<CutGraph> {
    let st = p.setup()?;
    let g = assemble(p, &st)?;
    if let Some(seed) = checks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let x: Vec<u8> = (0..g.free_cells.len()).map(|_| rng.gen_range(0..=1)).collect();
            let cut = g.cut_value(&x) + g.constant;
            let e = evaluate(&st, &g, &x, st.cutoff);
            if (cut - e).abs() > 1e-10 * e.abs().max(1.0) {
                return Err(Error::Numerical(format!("cut/energy identity violated: {cut} vs {e}")));
            }
        }
    }
    Ok(g)
}

/// Builds the cut graph, checking the cut/energy identity in debug builds.
pub fn assemble_graph(p: &PlateauProblem) -> Result<CutGraph> {
    assemble_graph_checked(p, cfg!(debug_assertions).then_some(DEFAULT_CHECK_SEED))
}

fn assemble(p: &PlateauProblem, st: &Setup) -> Result<CutGraph> {
    let k = &p.kernel;
    let h = st.padded.cell_dims();
    let f = st.free.len();
    let cutoff = st.cutoff;
    let rows: Vec<(Vec<(u32, u32, f64)>, f64)> = (0..f)
        .into_par_iter()
        .map(|i| {
            let mut kept = Vec::new();
            let mut dropped = 0.0;
            for j in i + 1..f {
                let o = offset(&st.free_m[i], &st.free_m[j]);
                let w = st.table.get(o);
                if center_distance(&o, &h) <= cutoff {
                    kept.push((i as u32, j as u32, w));
                } else {
                    dropped += w;
                }
            }
            (kept, dropped)
        })
        .collect();
    let kept_total: usize = rows.iter().map(|r| r.0.len()).sum();
    if kept_total > MAX_PAIRS {
        return Err(Error::param("plateau.pair_cutoff", format!("{kept_total} pairs exceed the limit {MAX_PAIRS}")));
    }
    let dropped_pair_bound = rows.iter().map(|r| r.1).sum();
    let pair_edges: Vec<(u32, u32, f64)> = rows.into_iter().flat_map(|r| r.0).collect();

    // unary terms: near part from the padded grid, far part from the exact datum
    let fixed: Vec<(usize, [i64; 3], f64)> = (0..st.padded.num_cells())
        .filter(|&c| !st.is_free[c])
        .map(|c| {
            let m = st.padded.unravel(c);
            (c, [m[0] as i64, m[1] as i64, m[2] as i64], st.fixed_occ[c])
        })
        .collect();
    let opts = QuadratureOptions { cells_per_axis: st.padded.cells[0], ..p.quadrature };
    let scale = k.normalization() * st.padded.cell_volume();
    let unary: Vec<(f64, f64, f64)> = (0..f)
        .into_par_iter()
        .map(|i| {
            let (mut inside, mut outside) = (0.0, 0.0);
            for (_, m, o) in &fixed {
                let w = st.table.get(offset(&st.free_m[i], m));
                outside += w * o;
                inside += w * (1.0 - o);
            }
            let m = st.free_m[i];
            let idx = st.padded.ravel(&[m[0] as usize, m[1] as usize, m[2] as usize]);
            let (ud, ed) = cell_average_potential(&st.padded, idx, Some(&p.exterior_datum), k, &opts);
            let (ua, ea) = cell_average_potential(&st.padded, idx, None, k, &opts);
            (inside + scale * (ua - ud).max(0.0), outside + scale * ud, scale * (ed + ea))
        })
        .collect();
    Ok(CutGraph {
        free_cells: st.free.clone(),
        pair_edges,
        source_caps: unary.iter().map(|u| u.1).collect(),
        sink_caps: unary.iter().map(|u| u.0).collect(),
        constant: 0.0,
        dropped_pair_bound,
        dense_pair_count: f * f.saturating_sub(1) / 2,
        unary_error: unary.iter().map(|u| u.2).sum(),
        cell_volume: p.grid.cell_volume(),
    })
}

/// Energy of `x` recomputed from the lattice table and the unary terms,
/// summing pairs within `cutoff` by a direct double loop.
fn evaluate(st: &Setup, g: &CutGraph, x: &[u8], cutoff: f64) -> f64 {
    let h = st.padded.cell_dims();
    let f = x.len();
    let pairs: f64 = (0..f)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..f {
                if j != i && x[i] != x[j] {
                    let o = offset(&st.free_m[i], &st.free_m[j]);
                    if center_distance(&o, &h) <= cutoff {
                        acc += st.table.get(o);
                    }
                }
            }
            acc
        })
        .sum::<f64>()
        * 0.5;
    let unary: f64 = (0..f).map(|i| if x[i] == 1 { g.sink_caps[i] } else { g.source_caps[i] }).sum();
    pairs + unary
}

impl CutGraph {
    /// Capacity of the cut that puts label-1 nodes on the source side.
    pub fn cut_value(&self, x: &[u8]) -> f64 {
        let unary: f64 = (0..x.len()).map(|i| if x[i] == 1 { self.sink_caps[i] } else { self.source_caps[i] }).sum();
        let pairs: f64 = self.pair_edges.iter().filter(|(i, j, _)| x[*i as usize] != x[*j as usize]).map(|e| e.2).sum();
        unary + pairs
    }

    /// Graph with `-mu * cell_volume` added to the cost of label 1, reparametrized
    /// to nonnegative capacities.
    pub fn with_volume_multiplier(&self, mu: f64) -> CutGraph {
        let mut g = self.clone();
        for i in 0..g.free_cells.len() {
            let a = g.sink_caps[i] - mu * g.cell_volume;
            let b = g.source_caps[i];
            let m = a.min(b);
            g.sink_caps[i] = a - m;
            g.source_caps[i] = b - m;
            g.constant += m;
        }
        g
    }

    /// Canonical minimum cut: labels of the nodes reachable from the source.
    pub fn min_cut(&self) -> (Vec<u8>, f64) {
        let f = self.free_cells.len();
        let (s, t) = (f, f + 1);
        let mut fg = FlowGraph::new(f + 2);
        for i in 0..f {
            if self.source_caps[i] > 0.0 {
                fg.add_edge(s, i, self.source_caps[i], 0.0);
            }
            if self.sink_caps[i] > 0.0 {
                fg.add_edge(i, t, self.sink_caps[i], 0.0);
            }
        }
        for (i, j, w) in &self.pair_edges {
            fg.add_edge(*i as usize, *j as usize, *w, *w);
        }
        let flow = fg.max_flow(s, t);
        let side = fg.source_side(s);
        ((0..f).map(|i| side[i] as u8).collect(), flow)
    }
}

fn finish(p: &PlateauProblem, st: &Setup, g: &CutGraph, labels: Vec<u8>) -> Result<PlateauSolution> {
    let energy = g.cut_value(&labels) + g.constant;
    let check = evaluate(st, g, &labels, st.cutoff) + g.constant;
    if (energy - check).abs() > 1e-10 * check.abs().max(1.0) {
        return Err(Error::Numerical(format!("energy re-evaluation differs: {energy} vs {check}")));
    }
    let energy_all_pairs = evaluate(st, g, &labels, f64::INFINITY) + g.constant;
    let volume = labels.iter().filter(|l| **l == 1).count() as f64 * p.grid.cell_volume();
    let flatness = flatness(p, st, &labels);
    let boundary_trace_gap = trace_gaps(st, &labels);
    let max_trace_gap = boundary_trace_gap.iter().map(|t| t.gap).fold(0.0, f64::max);
    Ok(PlateauSolution {
        free_cells: st.free.clone(),
        labels,
        energy,
        energy_all_pairs,
        dropped_pair_bound: g.dropped_pair_bound,
        unary_error: g.unary_error,
        kept_pairs: g.pair_edges.len(),
        volume,
        flatness,
        boundary_trace_gap,
        max_trace_gap,
    })
}

fn flatness(p: &PlateauProblem, st: &Setup, labels: &[u8]) -> Option<f64> {
    let ShapeExpr::HalfSpace { normal, offset } = &p.exterior_datum else {
        return None;
    };
    let n = p.grid.dim();
    let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hmin = (0..n).map(|i| p.grid.h(i)).fold(f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for (i, &c) in st.free.iter().enumerate() {
        let x = p.grid.cell_center(c);
        let d = ((0..n).map(|a| normal[a] * x[a]).sum::<f64>() - offset) / len;
        if (d > 0.0) != (labels[i] == 1) {
            worst = worst.max(d.abs() / hmin + 0.5);
        }
    }
    Some(worst)
}

fn trace_gaps(st: &Setup, labels: &[u8]) -> Vec<TraceGap> {
    let g = &st.padded;
    let n = g.dim();
    let mut out = Vec::new();
    for (i, m) in st.free_m.iter().enumerate() {
        let mut acc = 0.0;
        let mut count = 0;
        for axis in 0..n {
            for step in [-1i64, 1] {
                let mut q = *m;
                q[axis] += step;
                if q[axis] < 0 || q[axis] >= g.cells[axis] as i64 {
                    continue;
                }
                let c = g.ravel(&[q[0] as usize, q[1] as usize, q[2] as usize]);
                if !st.is_free[c] {
                    acc += st.fixed_occ[c];
                    count += 1;
                }
            }
        }
        if count > 0 {
            out.push(TraceGap { cell: st.free[i], gap: (labels[i] as f64 - acc / count as f64).abs() });
        }
    }
    out
}

/// Exact minimizer of the discrete energy.
pub fn solve_plateau(p: &PlateauProblem) -> Result<PlateauSolution> {
    let st = p.setup()?;
    let g = assemble(p, &st)?;
    let (labels, _) = g.min_cut();
    finish(p, &st, &g, labels)
}

/// Solution and graph in one pass (for callers that re-evaluate labelings).
pub fn solve_with_graph(p: &PlateauProblem, checks: Option<u64>) -> Result<(PlateauSolution, CutGraph)> {
    let g = assemble_graph_checked(p, checks)?;
    let st = p.setup()?;
    let (labels, _) = g.min_cut();
    Ok((finish(p, &st, &g, labels)?, g))
}

/// Energy of an arbitrary labeling of the free cells (kept pairs only).
pub fn labeling_energy(p: &PlateauProblem, g: &CutGraph, labels: &[u8]) -> Result<f64> {
    if labels.len() != g.free_cells.len() {
        return Err(Error::DimensionMismatch { expected: g.free_cells.len(), got: labels.len() });
    }
    let st = p.setup()?;
    Ok(evaluate(&st, g, labels, st.cutoff) + g.constant)
}

/// Relative volume mismatch above which a fixed-volume solve reports failure.
pub const VOLUME_REL_TOL: f64 = 0.05;

/// Minimizer of energy `- mu |E∩Ω|` with `mu` bisected so that the volume is
/// closest to `target_volume`; ties go to the smaller volume.
pub fn solve_fixed_volume(p: &PlateauProblem, target_volume: f64, mu_tol: f64) -> Result<FixedVolumeSolution> {
    let st = p.setup()?;
    let g = assemble(p, &st)?;
    let v = g.cell_volume;
    let full = st.free.len() as f64 * v;
    if !(0.0..=full * (1.0 + 1e-12)).contains(&target_volume) {
        return Err(Error::param("plateau.target_volume", format!("must lie in [0, {full}]")));
    }
    if !(mu_tol > 0.0) {
        return Err(Error::param("plateau.mu_tol", "must be positive"));
    }
    // beyond these multipliers every cell has a dominant unary term
    let mut incident = vec![0.0; st.free.len()];
    for (i, j, w) in &g.pair_edges {
        incident[*i as usize] += w;
        incident[*j as usize] += w;
    }
    let bound = (0..st.free.len())
        .map(|i| g.sink_caps[i].max(g.source_caps[i]) + incident[i])
        .fold(0.0, f64::max)
        / v
        * 1.01;
    let mut path = Vec::new();
    let mut solve = |mu: f64| {
        let gm = g.with_volume_multiplier(mu);
        let (x, _) = gm.min_cut();
        let vol = x.iter().filter(|l| **l == 1).count() as f64 * v;
        path.push((mu, vol));
        (x, vol)
    };
    let (mut lo, mut hi) = (-bound, bound);
    let (mut xlo, mut vlo) = solve(lo);
    let (mut xhi, mut vhi) = solve(hi);
    while hi - lo > mu_tol && vlo < target_volume && vhi > target_volume {
        let mid = 0.5 * (lo + hi);
        let (x, vol) = solve(mid);
        if vol <= target_volume {
            lo = mid;
            xlo = x;
            vlo = vol;
        } else {
            hi = mid;
            xhi = x;
            vhi = vol;
        }
    }
    let (mu, labels, vol) = if (target_volume - vlo) <= (vhi - target_volume) { (lo, xlo, vlo) } else { (hi, xhi, vhi) };
    let gap = (vol - target_volume).abs();
    if gap > (VOLUME_REL_TOL * target_volume).max(v) {
        return Err(Error::UnreachableVolume { target: target_volume, below: vlo, above: vhi });
    }
    let solution = finish(p, &st, &g, labels)?;
    Ok(FixedVolumeSolution { solution, mu, target_volume, volume_gap: gap, below: (lo, vlo), above: (hi, vhi), mu_path: path })
}

impl PlateauSolution {
    /// Occupancy over the problem grid: labels on free cells, datum fractions elsewhere.
    pub fn to_voxels(&self, p: &PlateauProblem) -> Result<VoxelSet> {
        let n = p.grid.dim();
        let outside = p.exterior_datum.clone().intersect(p.omega.clone().complement());
        let lines = default_lines(n);
        let mut occ: Vec<f64> = (0..p.grid.num_cells()).map(|i| p.grid.cell_fraction_lines(&outside, i, lines)).collect();
        for (c, l) in self.free_cells.iter().zip(&self.labels) {
            occ[*c] = *l as f64;
        }
        VoxelSet::new(p.grid.clone(), occ, Some(outside))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(n: usize, cells: usize, datum: ShapeExpr, s: f64) -> PlateauProblem {
        let grid = GridSpec::cube(n, -0.5, 0.5, cells).unwrap();
        let omega = ShapeExpr::cuboid(&vec![-0.5; n], &vec![0.5; n]);
        PlateauProblem {
            grid,
            omega,
            exterior_datum: datum,
            kernel: KernelParams::new(n, s).unwrap(),
            pair_cutoff: None,
            quadrature: QuadratureOptions { padding_cells: 4, ..QuadratureOptions::for_dim(n) },
        }
    }

    fn all_labelings(f: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1u32 << f).map(move |b| (0..f).map(|i| ((b >> i) & 1) as u8).collect())
    }

    #[test]
    fn two_cells_in_one_dimension() {
        let p = problem(1, 2, ShapeExpr::half_space(&[-1.0], 0.0), 0.5);
        let g = assemble_graph_checked(&p, Some(DEFAULT_CHECK_SEED)).unwrap();
        assert_eq!(g.pair_edges.len(), 1);
        let st = p.setup().unwrap();
        let w = st.table.get([1, 0, 0]);
        assert_eq!(g.pair_edges[0].2, w);
        for x in all_labelings(2) {
            let e = labeling_energy(&p, &g, &x).unwrap();
            assert!((g.cut_value(&x) + g.constant - e).abs() < 1e-14 * e.max(1.0));
        }
    }

    #[test]
    fn matches_exhaustive_search() {
        for (datum, s) in [
            (ShapeExpr::half_space(&[0.3, -1.0], 0.05), 0.5),
            (ShapeExpr::ball(&[0.6, 0.3], 0.5), 0.3),
            (ShapeExpr::cone(&[1.0, 0.0], 0.5), 0.1),
        ] {
            let mut p = problem(2, 3, datum, s);
            p.grid = GridSpec::new(&[-0.5, -0.5], &[0.5, 0.5], &[3, 4]).unwrap();
            let (sol, g) = solve_with_graph(&p, Some(DEFAULT_CHECK_SEED)).unwrap();
            let best = all_labelings(12).map(|x| labeling_energy(&p, &g, &x).unwrap()).fold(f64::INFINITY, f64::min);
            assert!((sol.energy - best).abs() <= 1e-12 * best.abs(), "{} {best}", sol.energy);
        }
    }

    #[test]
    fn trivial_data() {
        let p = problem(2, 6, ShapeExpr::empty(2), 0.5);
        let sol = solve_plateau(&p).unwrap();
        assert!(sol.labels.iter().all(|l| *l == 0));
        assert_eq!(sol.energy, 0.0);
        let p = problem(2, 6, ShapeExpr::full(2), 0.5);
        let sol = solve_plateau(&p).unwrap();
        assert!(sol.labels.iter().all(|l| *l == 1));
        assert!(sol.energy.abs() < 1e-12);
    }

    #[test]
    fn cutoff_doubling() {
        let mut p = problem(2, 12, ShapeExpr::ball(&[0.5, 0.5], 0.6), 0.4);
        p.pair_cutoff = Some(0.2);
        let a = solve_with_graph(&p, Some(DEFAULT_CHECK_SEED)).unwrap();
        p.pair_cutoff = Some(0.4);
        let b = solve_with_graph(&p, Some(DEFAULT_CHECK_SEED)).unwrap();
        assert!(b.1.pair_edges.len() >= a.1.pair_edges.len());
        assert!((b.0.energy - a.0.energy).abs() <= a.0.dropped_pair_bound);
        assert!(a.0.energy_all_pairs >= a.0.energy && a.0.energy_all_pairs <= a.0.energy + a.0.dropped_pair_bound);
    }

    #[test]
    fn fixed_volume_extremes() {
        let p = problem(2, 8, ShapeExpr::empty(2), 0.5);
        let r = solve_fixed_volume(&p, 0.0, 1e-6).unwrap();
        assert_eq!(r.solution.volume, 0.0);
        let r = solve_fixed_volume(&p, 1.0, 1e-6).unwrap();
        assert!((r.solution.volume - 1.0).abs() < 1e-12);
        let mut pts = r.mu_path.clone();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn concave_profile_makes_intermediate_volumes_unreachable() {
        let mut p = problem(2, 12, ShapeExpr::empty(2), 0.5);
        p.grid = GridSpec::cube(2, -1.0, 1.0, 12).unwrap();
        p.omega = ShapeExpr::cuboid(&[-1.0, -1.0], &[1.0, 1.0]);
        match solve_fixed_volume(&p, std::f64::consts::PI * 0.36, 1e-8) {
            Err(Error::UnreachableVolume { below, above, .. }) => {
                assert_eq!(below, 0.0);
                assert!((above - 4.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
