//! Grid approximations of orbits and control sets, boundary structure, and
//! the structural checks for the `A = 0` case.
//!
//! Every occupied cell keeps one point that is exactly reachable from the
//! seed; new cells are found by flowing that point under each grid control for
//! durations `time_step·2^k`. Waves are processed level by level and a cell
//! reached by several candidates keeps the one with the smallest
//! `(source cell, control index, duration index)`, so the result does not
//! depend on thread scheduling.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{equilibrium, flow_concat, flow_r2, DegenerateSystem, PiecewiseControl, Segment};
use crate::geometry::{invariant_ball, Ball};
use crate::se2::{perp, GroupElement, Vec2};
use crate::system::{larc, BoundaryStructure, Case, ReducedSpec, SystemSpec};

pub const DEFAULT_CONTROL_GRID: usize = 21;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
const MAX_DOUBLINGS: u32 = 24;
const MAX_CELLS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let ok = [xmin, xmax, ymin, ymax].iter().all(|c| c.is_finite()) && xmin < xmax && ymin < ymax;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "bounds [{xmin}, {xmax}] × [{ymin}, {ymax}]"
            )));
        }
        Ok(Self { xmin, xmax, ymin, ymax })
    }

    pub fn around(center: Vec2, half_width: f64) -> Result<Self> {
        Self::new(
            center.x - half_width,
            center.x + half_width,
            center.y - half_width,
            center.y + half_width,
        )
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.xmin <= p.x && p.x <= self.xmax && self.ymin <= p.y && p.y <= self.ymax
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub bounds: Bounds,
    pub resolution: f64,
    pub control_grid: usize,
    pub time_step: f64,
    /// Cap on the number of occupied cells.
    pub max_steps: usize,
    /// Longest flow time tried from a representative point.
    pub max_duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub i: u32,
    pub j: u32,
}

impl GridConfig {
    /// Defaults scaled to the system: the box holds the invariant ball (or
    /// `±4|η|` when `λ = 0`) with about 400 cells across.
    pub fn default_for(rs: &ReducedSpec) -> Result<Self> {
        let (lo, hi) = (rs.omega.lo, rs.omega.hi);
        let rate = rs.lambda.abs().max((rs.mu - lo).abs()).max((rs.mu - hi).abs()).max(1.0);
        let time_step = 0.05 / rate;
        let eta = rs.eta.norm();
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be nonzero".into()));
        }
        let (bounds, resolution, max_duration) = if rs.lambda != 0.0 {
            let ball = invariant_ball(rs)?;
            (
                Bounds::around(ball.center, 1.5 * ball.radius)?,
                ball.radius / 200.0,
                40.0 / rs.lambda.abs(),
            )
        } else {
            let slowest = control_grid(rs, DEFAULT_CONTROL_GRID)
                .into_iter()
                .filter(|&u| !rs.is_singular_control(u))
                .map(|u| (rs.mu - u).abs())
                .fold(f64::INFINITY, f64::min);
            (
                Bounds::around(Vec2::ZERO, 4.0 * eta)?,
                8.0 * eta / 400.0,
                TAU / slowest,
            )
        };
        Ok(Self {
            bounds,
            resolution,
            control_grid: DEFAULT_CONTROL_GRID,
            time_step,
            max_steps: DEFAULT_MAX_STEPS,
            max_duration,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Bounds::new(self.bounds.xmin, self.bounds.xmax, self.bounds.ymin, self.bounds.ymax)?;
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolution {}", self.resolution)));
        }
        if self.control_grid < 3 {
            return Err(Error::InvalidArgument("control grid needs at least 3 points".into()));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {}", self.time_step)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        if !(self.max_duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("max duration {}", self.max_duration)));
        }
        let (nx, ny) = self.dims();
        if nx.saturating_mul(ny) > MAX_CELLS {
            return Err(Error::InvalidArgument(format!("grid of {nx}×{ny} cells is too large")));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        let b = &self.bounds;
        let n = |w: f64| ((w / self.resolution).ceil() as usize).max(1);
        (n(b.xmax - b.xmin), n(b.ymax - b.ymin))
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        if !(p.is_finite() && self.bounds.contains(p)) {
            return None;
        }
        let (nx, ny) = self.dims();
        let i = (((p.x - self.bounds.xmin) / self.resolution) as usize).min(nx - 1);
        let j = (((p.y - self.bounds.ymin) / self.resolution) as usize).min(ny - 1);
        Some(Cell {
            i: i as u32,
            j: j as u32,
        })
    }

    pub fn cell_center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            self.bounds.xmin + (c.i as f64 + 0.5) * self.resolution,
            self.bounds.ymin + (c.j as f64 + 0.5) * self.resolution,
        )
    }

    /// `time_step·2^k` for `k = 0, 1, …` up to `max_duration` (at least one entry).
    pub fn durations(&self) -> Vec<f64> {
        let mut out = vec![self.time_step];
        let mut d = self.time_step;
        for _ in 0..MAX_DOUBLINGS {
            d *= 2.0;
            if d > self.max_duration {
                break;
            }
            out.push(d);
        }
        out
    }
}

/// Control samples: `n` evenly spaced points over `Ω` (with `0` exact),
/// plus `μ` when it lies inside `Ω`.
pub fn control_grid(rs: &ReducedSpec, n: usize) -> Vec<f64> {
    let mut pts = rs.omega.linspace_with_zero(n.max(3));
    if rs.omega.contains_interior(rs.mu) && !pts.contains(&rs.mu) {
        pts.push(rs.mu);
        pts.sort_by(f64::total_cmp);
    }
    pts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachSet {
    pub config: GridConfig,
    pub occupied: BTreeSet<Cell>,
    pub seeded_from: Vec2,
    pub direction: Direction,
    /// Some candidate left the grid.
    pub hit_bounds: bool,
    /// Expansion stopped at `max_steps` cells.
    pub truncated: bool,
    pub waves: usize,
}

impl ReachSet {
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains_cell(&self, c: Cell) -> bool {
        self.occupied.contains(&c)
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        self.config.cell_of(p).is_some_and(|c| self.contains_cell(c))
    }

    pub fn cell_centers(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.occupied.iter().map(|&c| self.config.cell_center(c))
    }

    /// Occupied cells with a 4-neighbour that is unoccupied or off the grid.
    pub fn boundary_cells(&self) -> BTreeSet<Cell> {
        let (nx, ny) = self.config.dims();
        self.occupied
            .iter()
            .copied()
            .filter(|c| {
                neighbours4(*c, nx, ny)
                    .iter()
                    .any(|n| n.is_none_or(|n| !self.occupied.contains(&n)))
            })
            .collect()
    }

    /// Cells whose whole Chebyshev `k`-neighbourhood is occupied.
    pub fn eroded(&self, k: u32) -> BTreeSet<Cell> {
        let near_edge = chebyshev_dilation(&self.boundary_cells(), k, self.config.dims());
        self.occupied.difference(&near_edge).copied().collect()
    }

    /// CSV of occupied cell centres (`x,y`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in self.cell_centers() {
            out.push_str(&format!("{},{}\n", p.x, p.y));
        }
        out
    }
}

fn neighbours4(c: Cell, nx: usize, ny: usize) -> [Option<Cell>; 4] {
    let (i, j) = (c.i as i64, c.j as i64);
    let at = |i: i64, j: i64| {
        (i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny).then_some(Cell {
            i: i as u32,
            j: j as u32,
        })
    };
    [at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1)]
}

fn chebyshev_dilation(cells: &BTreeSet<Cell>, k: u32, (nx, ny): (usize, usize)) -> BTreeSet<Cell> {
    let k = k as i64;
    let mut out = BTreeSet::new();
    for c in cells {
        for di in -k..=k {
            for dj in -k..=k {
                let (i, j) = (c.i as i64 + di, c.j as i64 + dj);
                if i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny {
                    out.insert(Cell {
                        i: i as u32,
                        j: j as u32,
                    });
                }
            }
        }
    }
    out
}

/// Cells of `a \ b` farther than `k` cells (Chebyshev) from the boundary of `b`.
pub fn cells_outside_layer(a: &ReachSet, b: &ReachSet, k: u32) -> usize {
    let layer = chebyshev_dilation(&b.boundary_cells(), k, b.config.dims());
    a.occupied
        .difference(&b.occupied)
        .filter(|c| !layer.contains(c))
        .count()
}

/// Whether two grid sets differ only within a `k`-cell layer around each other's boundary.
pub fn agree_up_to_layer(a: &ReachSet, b: &ReachSet, k: u32) -> bool {
    cells_outside_layer(a, b, k) == 0 && cells_outside_layer(b, a, k) == 0
}

type CandidateKey = (usize, u16, u16);

fn expand(rs: &ReducedSpec, x0: Vec2, cfg: &GridConfig, direction: Direction) -> Result<ReachSet> {
    cfg.validate()?;
    let seed = cfg
        .cell_of(x0)
        .ok_or(Error::OutOfBounds { x: x0.x, y: x0.y })?;
    let controls = control_grid(rs, cfg.control_grid);
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let durations: Vec<f64> = cfg.durations().into_iter().map(|d| sign * d).collect();
    let (nx, ny) = cfg.dims();
    let flat = |c: Cell| c.j as usize * nx + c.i as usize;
    let unflat = |k: usize| Cell {
        i: (k % nx) as u32,
        j: (k / nx) as u32,
    };

    let mut reps: Vec<Option<Vec2>> = vec![None; nx * ny];
    reps[flat(seed)] = Some(x0);
    let mut count = 1usize;
    let mut frontier = vec![flat(seed)];
    let mut hit_bounds = false;
    let mut truncated = false;
    let mut waves = 0usize;

    while !frontier.is_empty() {
        if count >= cfg.max_steps {
            truncated = true;
            break;
        }
        waves += 1;
        let reps_ref = &reps;
        let (found, oob) = frontier
            .par_iter()
            .fold(
                || (HashMap::<usize, (CandidateKey, Vec2)>::new(), false),
                |(mut map, mut oob), &src| {
                    let p = reps_ref[src].expect("frontier cells have representatives");
                    for (ci, &u) in controls.iter().enumerate() {
                        for (di, &s) in durations.iter().enumerate() {
                            let q = flow_r2(rs, s, p, u);
                            let Some(cell) = cfg.cell_of(q) else {
                                oob = true;
                                continue;
                            };
                            let t = flat(cell);
                            if reps_ref[t].is_some() {
                                continue;
                            }
                            let key = (src, ci as u16, di as u16);
                            map.entry(t)
                                .and_modify(|e| {
                                    if key < e.0 {
                                        *e = (key, q);
                                    }
                                })
                                .or_insert((key, q));
                        }
                    }
                    (map, oob)
                },
            )
            .reduce(
                || (HashMap::new(), false),
                |(mut a, oa), (b, ob)| {
                    for (t, cand) in b {
                        a.entry(t)
                            .and_modify(|e| {
                                if cand.0 < e.0 {
                                    *e = cand;
                                }
                            })
                            .or_insert(cand);
                    }
                    (a, oa || ob)
                },
            );
        hit_bounds |= oob;
        let mut targets: Vec<(usize, Vec2)> = found.into_iter().map(|(t, (_, q))| (t, q)).collect();
        targets.sort_by_key(|&(t, _)| t);
        frontier.clear();
        for (t, q) in targets {
            if count >= cfg.max_steps {
                truncated = true;
                break;
            }
            reps[t] = Some(q);
            frontier.push(t);
            count += 1;
        }
    }

    let occupied = reps
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|_| unflat(k)))
        .collect();
    Ok(ReachSet {
        config: *cfg,
        occupied,
        seeded_from: x0,
        direction,
        hit_bounds,
        truncated,
        waves,
    })
}

/// Grid approximation of `O⁺(x0)`.
pub fn reach_forward(rs: &ReducedSpec, x0: Vec2, cfg: &GridConfig) -> Result<ReachSet> {
    expand(rs, x0, cfg, Direction::Forward)
}

/// Grid approximation of `O⁻(x0)`.
pub fn reach_backward(rs: &ReducedSpec, x0: Vec2, cfg: &GridConfig) -> Result<ReachSet> {
    expand(rs, x0, cfg, Direction::Backward)
}

/// Fraction of a disk covered by a reach set, evidence for controllability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCertificate {
    pub disk_center: Vec2,
    pub disk_radius: f64,
    pub cells_in_disk: usize,
    pub covered: usize,
    pub coverage: f64,
}

pub fn disk_coverage(set: &ReachSet, center: Vec2, radius: f64) -> CoverageCertificate {
    let cfg = &set.config;
    let (nx, ny) = cfg.dims();
    let mut total = 0;
    let mut covered = 0;
    for j in 0..ny as u32 {
        for i in 0..nx as u32 {
            let c = Cell { i, j };
            if (cfg.cell_center(c) - center).norm() <= radius {
                total += 1;
                if set.contains_cell(c) {
                    covered += 1;
                }
            }
        }
    }
    CoverageCertificate {
        disk_center: center,
        disk_radius: radius,
        cells_in_disk: total,
        covered,
        coverage: if total == 0 { 0.0 } else { covered as f64 / total as f64 },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Grid(ReachSet),
    AllPlane { certificate: CoverageCertificate },
}

/// Boundary structure: `{v(μ)}` in the plane and its lift to `S¹ × ℝ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDescriptor {
    pub planar_singleton: Option<Vec2>,
    pub lifted: BoundaryStructure,
}

/// One-point control set `{v(μ)}` and its lift, present when `tr A > 0` and `μ ∈ Ω`.
pub fn boundary_control_sets(rs: &ReducedSpec) -> BoundaryDescriptor {
    let lifted = crate::system::boundary_structure_of(rs);
    let planar_singleton = match lifted {
        BoundaryStructure::None => None,
        _ => equilibrium(rs, rs.mu).ok(),
    };
    BoundaryDescriptor {
        planar_singleton,
        lifted,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSetEstimate {
    pub case: Case,
    pub region: Region,
    pub generator_u: f64,
    pub generator_point: Vec2,
    pub boundary: BoundaryDescriptor,
    pub ball: Option<Ball>,
    /// Topology stated by the classification (a grid set cannot tell).
    pub closed: bool,
    pub open: bool,
}

/// Serializable summary without the cell list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub case: Case,
    pub generator_u: f64,
    pub generator_point: Vec2,
    pub all_plane: bool,
    pub coverage: Option<CoverageCertificate>,
    pub occupied_cells: Option<usize>,
    pub hit_bounds: Option<bool>,
    pub truncated: Option<bool>,
    pub bounds: Bounds,
    pub resolution: f64,
    pub boundary: BoundaryDescriptor,
    pub ball: Option<Ball>,
    pub closed: bool,
    pub open: bool,
}

impl ControlSetEstimate {
    pub fn reach_set(&self) -> &ReachSet {
        match &self.region {
            Region::Grid(set) => set,
            Region::AllPlane { .. } => panic!("all-plane estimate has no grid set"),
        }
    }

    pub fn summary(&self, cfg: &GridConfig) -> EstimateSummary {
        let (all_plane, coverage, set) = match &self.region {
            Region::Grid(s) => (false, None, Some(s)),
            Region::AllPlane { certificate } => (true, Some(*certificate), None),
        };
        EstimateSummary {
            case: self.case,
            generator_u: self.generator_u,
            generator_point: self.generator_point,
            all_plane,
            coverage,
            occupied_cells: set.map(|s| s.len()),
            hit_bounds: set.map(|s| s.hit_bounds),
            truncated: set.map(|s| s.truncated),
            bounds: cfg.bounds,
            resolution: cfg.resolution,
            boundary: self.boundary,
            ball: self.ball,
            closed: self.closed,
            open: self.open,
        }
    }
}

/// Interior grid control used to seed the estimate: `0` unless `μ = 0`,
/// otherwise the interior grid control nearest to zero.
pub fn default_generator(rs: &ReducedSpec, cfg: &GridConfig) -> Result<f64> {
    control_grid(rs, cfg.control_grid)
        .into_iter()
        .filter(|&u| rs.omega.contains_interior(u) && u != rs.mu && !rs.is_singular_control(u))
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or_else(|| Error::InvalidArgument("no interior control different from mu".into()))
}

pub fn estimate_control_set(rs: &ReducedSpec, cfg: &GridConfig) -> Result<ControlSetEstimate> {
    let u0 = default_generator(rs, cfg)?;
    estimate_control_set_from(rs, cfg, u0)
}

/// Estimate seeded from the equilibrium `v(u0)`.
pub fn estimate_control_set_from(
    rs: &ReducedSpec,
    cfg: &GridConfig,
    u0: f64,
) -> Result<ControlSetEstimate> {
    if !rs.omega.contains_interior(u0) || u0 == rs.mu {
        return Err(Error::InvalidControl(format!(
            "generator u = {u0} must be interior and different from mu"
        )));
    }
    let x0 = equilibrium(rs, u0)?;
    let boundary = boundary_control_sets(rs);
    let est = if rs.lambda == 0.0 {
        let set = reach_forward(rs, x0, cfg)?;
        let certificate = disk_coverage(&set, Vec2::ZERO, rs.eta.norm());
        ControlSetEstimate {
            case: Case::ControllableTraceZero,
            region: Region::AllPlane { certificate },
            generator_u: u0,
            generator_point: x0,
            boundary,
            ball: None,
            closed: true,
            open: true,
        }
    } else {
        let (case, set) = if rs.lambda < 0.0 {
            (Case::ClosedBoundedControlSet, reach_forward(rs, x0, cfg)?)
        } else {
            (Case::OpenControlSet, reach_backward(rs, x0, cfg)?)
        };
        ControlSetEstimate {
            case,
            region: Region::Grid(set),
            generator_u: u0,
            generator_point: x0,
            boundary,
            ball: Some(invariant_ball(rs)?),
            closed: rs.lambda < 0.0,
            open: rs.lambda > 0.0,
        }
    };
    Ok(est)
}

/// `S¹ × C` as a control set of the lifted system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedControlSet {
    pub whole_space: bool,
    pub compact: bool,
    pub open: bool,
    pub planar_cells: Option<usize>,
    pub boundary: BoundaryStructure,
    pub description: String,
}

pub fn lift_to_se2(est: &ControlSetEstimate) -> LiftedControlSet {
    let planar_cells = match &est.region {
        Region::Grid(s) => Some(s.len()),
        Region::AllPlane { .. } => None,
    };
    let (whole_space, compact, open, description) = match est.case {
        Case::ControllableTraceZero => (true, false, true, "S¹ × ℝ²: the system is controllable"),
        Case::ClosedBoundedControlSet => (false, true, false, "S¹ × C: the unique compact control set"),
        Case::OpenControlSet => (false, false, true, "S¹ × C: the unique open control set"),
        Case::DegenerateDetZero => (false, false, false, "no lift for A = 0"),
    };
    LiftedControlSet {
        whole_space,
        compact,
        open,
        planar_cells,
        boundary: est.boundary.lifted,
        description: description.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCounterexample {
    pub kind: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateReport {
    pub seed: u64,
    pub trajectories: usize,
    /// Smallest increase of `H = ⟨v, θξ⟩` between consecutive samples.
    pub min_increment: f64,
    pub monotonicity_violations: usize,
    /// Samples leaving the half-plane `⟨v − v₀, θξ⟩ ≥ 0`.
    pub cone_violations: usize,
    pub excursions: usize,
    /// Smallest `⟨D, θξ⟩` over excursion displacements `D`.
    pub min_excursion_gain: f64,
    pub mutual_pairs: usize,
    /// Largest `|⟨v₀ − v₁, θξ⟩|` over mutual pairs.
    pub max_pair_offset: f64,
    pub pair_violations: usize,
    pub counterexamples: Vec<DegenerateCounterexample>,
}

impl DegenerateReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0
            && self.cone_violations == 0
            && self.pair_violations == 0
            && self.min_excursion_gain > 0.0
    }
}

pub const PAIR_TOL: f64 = 1e-7;
pub const LINE_TOL: f64 = 1e-6;

fn random_sign(rng: &mut ChaCha8Rng) -> bool {
    rng.gen::<bool>()
}

/// Random non-zero control that sweeps out and back to the starting angle.
fn random_excursion(rng: &mut ChaCha8Rng, sys: &DegenerateSystem) -> PiecewiseControl {
    let (lo, hi) = (sys.omega.lo, sys.omega.hi);
    let up = rng.gen_range(0.1..=1.0) * hi;
    if rng.gen_range(0..5) == 0 {
        // full turn at constant speed
        let u = if random_sign(rng) { up } else { rng.gen_range(0.1..=1.0) * lo };
        return PiecewiseControl::new(vec![Segment {
            duration: TAU / u.abs(),
            u,
        }])
        .expect("positive duration");
    }
    let down = rng.gen_range(0.1..=1.0) * lo;
    let angle = std::f64::consts::PI * 10f64.powf(rng.gen_range(-9.0..0.0));
    let a = Segment {
        duration: angle / up,
        u: up,
    };
    let b = Segment {
        duration: angle / down.abs(),
        u: down,
    };
    let segs = if random_sign(rng) { vec![a, b] } else { vec![b, a] };
    PiecewiseControl::new(segs).expect("positive durations")
}

/// Structure checks for `A = 0`: the functional `H(s) = ⟨v(s), θξ⟩` of the
/// normalised system increases along non-zero controls, and points that are
/// mutually reachable from `(0, v₀)` stay on the line `v₀ + ℝξ`.
pub fn degenerate_structure_check(
    spec: &SystemSpec,
    samples: usize,
    seed: u64,
) -> Result<DegenerateReport> {
    if !larc(spec) {
        return Err(Error::CaseMismatch("the rank condition fails".into()));
    }
    let sys = DegenerateSystem::from_spec(spec)?;
    let txi = perp(sys.xi);
    let samples = samples.max(2);

    struct TrajStats {
        min_inc: f64,
        mono: usize,
        cone: usize,
        example: Option<DegenerateCounterexample>,
    }

    let stats: Vec<TrajStats> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k as u64);
            let t0 = rng.gen_range(0.0..TAU);
            let v0 = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let n = rng.gen_range(1..=4);
            let segs = (0..n)
                .map(|_| Segment {
                    duration: rng.gen_range(0.05..2.0),
                    u: rng.gen_range(sys.omega.lo..=sys.omega.hi),
                })
                .collect();
            let control = PiecewiseControl::new(segs).expect("positive durations");
            let x0 = GroupElement::new(t0, v0);
            let tr = flow_concat(&sys, &control, &x0, 32).expect("controls inside the range");
            let h: Vec<f64> = tr.samples.iter().map(|p| p.state.v.dot(txi)).collect();
            let mut st = TrajStats {
                min_inc: f64::INFINITY,
                mono: 0,
                cone: 0,
                example: None,
            };
            for (w, p) in h.windows(2).zip(&tr.samples[1..]) {
                let inc = w[1] - w[0];
                st.min_inc = st.min_inc.min(inc);
                if !(inc > 0.0) {
                    st.mono += 1;
                    st.example.get_or_insert(DegenerateCounterexample {
                        kind: "monotonicity".into(),
                        detail: format!("sample {k}: H step {inc:e} at s = {}", p.s),
                    });
                }
                if (p.state.v - v0).dot(txi) < 0.0 {
                    st.cone += 1;
                }
            }
            st
        })
        .collect();

    let mut report = DegenerateReport {
        seed,
        trajectories: samples,
        min_increment: f64::INFINITY,
        monotonicity_violations: 0,
        cone_violations: 0,
        excursions: samples,
        min_excursion_gain: f64::INFINITY,
        mutual_pairs: 0,
        max_pair_offset: 0.0,
        pair_violations: 0,
        counterexamples: Vec::new(),
    };
    for st in stats {
        report.min_increment = report.min_increment.min(st.min_inc);
        report.monotonicity_violations += st.mono;
        report.cone_violations += st.cone;
        report.counterexamples.extend(st.example);
    }

    // Excursions from angle 0 are pure translations by a fixed D.
    let pool: Vec<(PiecewiseControl, Vec2)> = (0..samples)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k as u64 + 1);
            let e = random_excursion(&mut rng, &sys);
            let end = run(&sys, &e, Vec2::ZERO);
            (e, end.v)
        })
        .collect();
    for (k, (_, d)) in pool.iter().enumerate() {
        let gain = d.dot(txi);
        report.min_excursion_gain = report.min_excursion_gain.min(gain);
        if !(gain > 0.0) {
            report.counterexamples.push(DegenerateCounterexample {
                kind: "excursion gain".into(),
                detail: format!("excursion {k}: ⟨D, θξ⟩ = {gain:e}"),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v0 = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    for (a, (e, de)) in pool.iter().enumerate() {
        for (b, (f, df)) in pool.iter().enumerate() {
            if a >= b || (*de + *df).norm() >= 10.0 * PAIR_TOL {
                continue;
            }
            // confirm with actual flows from (0, v₀)
            let v1 = run(&sys, e, v0).v;
            let back = run(&sys, f, v1).v;
            if (back - v0).norm() >= PAIR_TOL {
                continue;
            }
            report.mutual_pairs += 1;
            let offset = (v0 - v1).dot(txi).abs();
            report.max_pair_offset = report.max_pair_offset.max(offset);
            if offset >= LINE_TOL {
                report.pair_violations += 1;
                report.counterexamples.push(DegenerateCounterexample {
                    kind: "mutual pair off the line".into(),
                    detail: format!("excursions {a}, {b}: |⟨v₀ − v₁, θξ⟩| = {offset:e}"),
                });
            }
        }
    }
    Ok(report)
}

fn run(sys: &DegenerateSystem, control: &PiecewiseControl, v: Vec2) -> GroupElement {
    let mut g = GroupElement::new(0.0, v);
    for seg in &control.segments {
        g = crate::flow::flow_det_a0(sys.xi, seg.duration, &g, seg.u);
    }
    g
}
