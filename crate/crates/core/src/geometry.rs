//! Log-polar rasterization of paths and the topological tests built on it.
//!
//! A grid covers the strip `u_min ≤ u ≤ u_max` of the cylinder with rows of
//! height `du` and periodic columns of width `dθ = 2π / ⌈2π/h⌉`. Intersection,
//! loop and disconnection events are all defined at this resolution: a path
//! occupies every cell its (resampled) trace touches.
//!
//! Free cells connect through their four edge neighbours; obstacles are
//! treated as 8-connected, so a diagonal pair of obstacle cells blocks the
//! free phase.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::path_sampler::{AnnulusSpec, CylPoint, SampledPath};

/// Coarsest admissible cell size.
pub const MAX_CELL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Free,
    Obstacle,
    InnerBoundary,
    OuterBoundary,
}

/// How the truncation row at `u_min` is closed off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerCap {
    /// Free cells of the lowest row share one floating auxiliary node,
    /// standing in for the obstacle-free disk below.
    SuperNode,
    /// The lowest row is an ordinary boundary.
    Absorb,
}

/// Cell layout shared by grids and domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub u_min: f64,
    pub u_max: f64,
    pub n_u: usize,
    pub n_theta: usize,
    pub du: f64,
    pub dtheta: f64,
    /// Angle of the left edge of column 0.
    pub theta0: f64,
    pub periodic: bool,
}

impl GridGeometry {
    /// Periodic annulus grid with `⌈2π/h⌉` columns.
    pub fn annulus(u_min: f64, u_max: f64, h: f64) -> Self {
        let n_u = (((u_max - u_min) / h) - 1e-9).ceil().max(1.0) as usize;
        let n_theta = ((TAU / h) - 1e-9).ceil() as usize;
        Self {
            u_min,
            u_max,
            n_u,
            n_theta,
            du: (u_max - u_min) / n_u as f64,
            dtheta: TAU / n_theta as f64,
            theta0: 0.0,
            periodic: true,
        }
    }

    /// Non-periodic rectangle `(0, length) × (0, height)`.
    pub fn rectangle(length: f64, height: f64, h: f64) -> Self {
        let n_u = (length / h).round().max(1.0) as usize;
        let n_theta = (height / h).round().max(1.0) as usize;
        Self {
            u_min: 0.0,
            u_max: length,
            n_u,
            n_theta,
            du: length / n_u as f64,
            dtheta: height / n_theta as f64,
            theta0: 0.0,
            periodic: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.n_theta + col
    }

    #[inline]
    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_theta, idx % self.n_theta)
    }

    /// Row containing `u`, with `u_max` itself in the top row.
    pub fn row_of(&self, u: f64) -> Option<usize> {
        if u < self.u_min - 1e-12 || u > self.u_max + 1e-12 {
            return None;
        }
        let r = ((u - self.u_min) / self.du).floor() as isize;
        Some(r.clamp(0, self.n_u as isize - 1) as usize)
    }

    pub fn col_of(&self, theta: f64) -> Option<usize> {
        let x = (theta - self.theta0) / self.dtheta;
        if self.periodic {
            Some((x.floor() as i64).rem_euclid(self.n_theta as i64) as usize)
        } else if x < 0.0 || x > self.n_theta as f64 {
            None
        } else {
            Some((x.floor() as usize).min(self.n_theta - 1))
        }
    }

    pub fn cell_of(&self, p: CylPoint) -> Option<usize> {
        Some(self.idx(self.row_of(p.u)?, self.col_of(p.theta)?))
    }

    pub fn center(&self, idx: usize) -> CylPoint {
        let (r, c) = self.row_col(idx);
        CylPoint::new(
            self.u_min + (r as f64 + 0.5) * self.du,
            self.theta0 + (c as f64 + 0.5) * self.dtheta,
        )
    }

    /// Edge neighbours `(below, above, left, right)`; `None` off the grid.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 4] {
        let (r, c) = self.row_col(idx);
        let below = (r > 0).then(|| idx - self.n_theta);
        let above = (r + 1 < self.n_u).then(|| idx + self.n_theta);
        let left = if c > 0 {
            Some(idx - 1)
        } else if self.periodic {
            Some(idx + self.n_theta - 1)
        } else {
            None
        };
        let right = if c + 1 < self.n_theta {
            Some(idx + 1)
        } else if self.periodic {
            Some(idx + 1 - self.n_theta)
        } else {
            None
        };
        [below, above, left, right]
    }

    /// Signed angular column offset `b - a`, wrapped to the shortest way.
    pub fn col_delta(&self, a: usize, b: usize) -> isize {
        let n = self.n_theta as isize;
        let mut d = b as isize - a as isize;
        if self.periodic {
            d = d.rem_euclid(n);
            if d > n / 2 {
                d -= n;
            }
        }
        d
    }

    /// Cylinder distance between cell centres.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ra, ca) = self.row_col(a);
        let (rb, cb) = self.row_col(b);
        let du = (ra as f64 - rb as f64) * self.du;
        let dth = self.col_delta(ca, cb) as f64 * self.dtheta;
        (du * du + dth * dth).sqrt()
    }

    /// Cylinder distance from a point to a cell centre.
    pub fn distance_to_point(&self, idx: usize, p: CylPoint) -> f64 {
        let c = self.center(idx);
        let mut dth = c.theta - p.theta;
        if self.periodic {
            dth = (dth + PI).rem_euclid(TAU) - PI;
        }
        ((c.u - p.u).powi(2) + dth * dth).sqrt()
    }
}

/// Log-polar raster with free/obstacle cells. Boundary labels are derived:
/// free cells of the lowest row are inner boundary, of the highest row outer.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub geom: GridGeometry,
    pub obstacle: Vec<bool>,
    pub inner_cap: InnerCap,
    /// Row from which disconnection and `Z` are evaluated (the row holding
    /// `C_0`); the lowest row unless set otherwise.
    pub source_row: usize,
}

impl OccupancyGrid {
    pub fn empty(geom: GridGeometry) -> Self {
        Self {
            obstacle: vec![false; geom.len()],
            geom,
            inner_cap: InnerCap::Absorb,
            source_row: 0,
        }
    }

    pub fn with_cap(mut self, cap: InnerCap) -> Self {
        self.inner_cap = cap;
        self
    }

    /// Evaluate connectivity from the row containing log-radius `u`.
    pub fn with_source_at(mut self, u: f64) -> Self {
        self.source_row = self.geom.row_of(u).unwrap_or(0);
        self
    }

    pub fn state(&self, idx: usize) -> CellState {
        if self.obstacle[idx] {
            return CellState::Obstacle;
        }
        let (r, _) = self.geom.row_col(idx);
        if r + 1 == self.geom.n_u {
            CellState::OuterBoundary
        } else if r == 0 {
            CellState::InnerBoundary
        } else {
            CellState::Free
        }
    }

    pub fn is_free(&self, idx: usize) -> bool {
        !self.obstacle[idx]
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacle.iter().filter(|&&o| o).count()
    }

    /// Mark every cell touched by `path`, resampling segments at cylinder
    /// arclength at most `max(du, dθ)/2`. Points outside the strip are
    /// skipped.
    pub fn stamp(&mut self, path: &SampledPath) {
        let g = self.geom;
        let step = 0.5 * g.du.min(g.dtheta);
        let pts = &path.points;
        let mark = |p: CylPoint, obstacle: &mut Vec<bool>| {
            if let Some(i) = g.cell_of(p) {
                obstacle[i] = true;
            }
        };
        if let Some(&p) = pts.first() {
            mark(p, &mut self.obstacle);
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.u < g.u_min && b.u < g.u_min) || (a.u > g.u_max && b.u > g.u_max) {
                continue;
            }
            let d = ((b.u - a.u).powi(2) + (b.theta - a.theta).powi(2)).sqrt();
            let n = (d / step).ceil().max(1.0) as usize;
            for k in 1..=n {
                let t = k as f64 / n as f64;
                mark(
                    CylPoint::new(a.u + t * (b.u - a.u), a.theta + t * (b.theta - a.theta)),
                    &mut self.obstacle,
                );
            }
        }
    }

    /// Indices of free cells in `row`.
    pub fn free_in_row(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        let g = self.geom;
        (0..g.n_theta).map(move |c| g.idx(row, c)).filter(|&i| !self.obstacle[i])
    }

    /// Cells reachable from the outer row through free cells; honours the
    /// super-node cap.
    pub fn reachable_from_outer(&self) -> Vec<bool> {
        let g = self.geom;
        let seeds: Vec<usize> = self.free_in_row(g.n_u - 1).collect();
        self.flood(&seeds)
    }

    fn flood(&self, seeds: &[usize]) -> Vec<bool> {
        let g = self.geom;
        let mut seen = vec![false; g.len()];
        let mut queue = VecDeque::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        let mut cap_opened = false;
        while let Some(i) = queue.pop_front() {
            let (r, _) = g.row_col(i);
            if r == 0 && self.inner_cap == InnerCap::SuperNode && !cap_opened {
                cap_opened = true;
                for j in self.free_in_row(0) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            for j in g.neighbors(i).into_iter().flatten() {
                if !seen[j] && !self.obstacle[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || h > MAX_CELL {
        return Err(Error::InvalidArgument(format!(
            "cell size {h} outside (0, {MAX_CELL}]"
        )));
    }
    Ok(())
}

/// Rasterize `paths` onto a fresh annulus grid.
pub fn rasterize(paths: &[SampledPath], u_min: f64, u_max: f64, h: f64) -> Result<OccupancyGrid> {
    check_h(h)?;
    if !(u_min < u_max) {
        return Err(Error::InvalidArgument(format!("need u_min < u_max, got {u_min}, {u_max}")));
    }
    let mut grid = OccupancyGrid::empty(GridGeometry::annulus(u_min, u_max, h));
    for p in paths {
        grid.stamp(p);
    }
    Ok(grid)
}

/// Default lower grid bound for a set of full paths: 0.2 below the deepest
/// point, clamped to `[-6, 0]`.
pub fn default_u_min(paths: &[SampledPath]) -> f64 {
    let m = paths.iter().map(SampledPath::min_u).fold(0.0f64, f64::min);
    (m - 0.2).clamp(-6.0, -0.2)
}

/// Whether the rasterizations of `a` and `b` share a cell.
pub fn paths_intersect(a: &SampledPath, b: &SampledPath, h: f64) -> Result<bool> {
    check_h(h)?;
    let lo = a.min_u().min(b.min_u());
    let hi = a.max_u().max(b.max_u());
    let hi = if hi - lo < h { lo + h } else { hi };
    let geom = GridGeometry::annulus(lo, hi, h);
    let mut ga = OccupancyGrid::empty(geom);
    ga.stamp(a);
    let mut gb = OccupancyGrid::empty(geom);
    gb.stamp(b);
    Ok(ga.obstacle.iter().zip(&gb.obstacle).any(|(&x, &y)| x && y))
}

/// Whether some excursion of `path` inside the closed annulus winds a full
/// turn about the origin before leaving it.
pub fn loop_in_annulus(path: &SampledPath, annulus: AnnulusSpec) -> bool {
    winds_in_band(&path.points, annulus.r_in, annulus.r_out)
}

pub(crate) fn winds_in_band(points: &[CylPoint], lo: f64, hi: f64) -> bool {
    let mut range: Option<(f64, f64)> = None;
    for p in points {
        if p.u >= lo && p.u <= hi {
            let (a, b) = range.unwrap_or((p.theta, p.theta));
            let (a, b) = (a.min(p.theta), b.max(p.theta));
            if b - a >= TAU {
                return true;
            }
            range = Some((a, b));
        } else {
            range = None;
        }
    }
    false
}

/// True iff no free 4-path joins the source row to the outer row.
pub fn disconnection_test(grid: &OccupancyGrid) -> bool {
    let g = grid.geom;
    let seeds: Vec<usize> = grid.free_in_row(grid.source_row).collect();
    if seeds.is_empty() {
        return true;
    }
    let seen = grid.flood(&seeds);
    !(0..g.n_theta).any(|c| seen[g.idx(g.n_u - 1, c)])
}

/// A connected component of free cells with its four boundary arcs.
///
/// `d1` cells carry a Dirichlet-0 link on their lower edge and `d2` cells a
/// Dirichlet-1 link on their upper edge. `d3`/`d4` are the obstacle-adjacent
/// sides: `d3` runs along the path bounding the clockwise end of `d2`, `d4`
/// along the other.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDomainSpec {
    pub geom: GridGeometry,
    pub mask: Vec<bool>,
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
    pub d3: Vec<usize>,
    pub d4: Vec<usize>,
    /// Free lowest-row cells tied to a floating node (super-node cap).
    pub floating: Vec<usize>,
    /// Number of inner arcs dropped when keeping only the largest one.
    pub extra_inner_arcs: usize,
}

impl PathDomainSpec {
    /// Whole non-periodic rectangle with the left side as `d1` and the right
    /// side as `d2`; `u` plays the role of the horizontal axis.
    pub fn rectangle(length: f64, height: f64, h: f64) -> Self {
        let geom = GridGeometry::rectangle(length, height, h);
        let mask = vec![true; geom.len()];
        Self::from_mask(geom, mask)
    }

    /// Domain from a cell mask: `d1` is the mask's lowest row, `d2` its
    /// highest, sides are the remaining boundary cells.
    pub fn from_mask(geom: GridGeometry, mask: Vec<bool>) -> Self {
        let d1: Vec<usize> = (0..geom.n_theta).map(|c| geom.idx(0, c)).filter(|&i| mask[i]).collect();
        let d2: Vec<usize> = (0..geom.n_theta)
            .map(|c| geom.idx(geom.n_u - 1, c))
            .filter(|&i| mask[i])
            .collect();
        let mut dom = Self {
            geom,
            mask,
            d1,
            d2,
            d3: Vec::new(),
            d4: Vec::new(),
            floating: Vec::new(),
            extra_inner_arcs: 0,
        };
        dom.label_sides();
        dom
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    /// Cells of the mask touching a non-mask cell or the side of a
    /// non-periodic grid (excluding inner/outer rows).
    fn side_cells(&self) -> Vec<usize> {
        let g = self.geom;
        self.cells()
            .filter(|&i| {
                let (r, _) = g.row_col(i);
                let n = g.neighbors(i);
                let lr_open = n[2].is_none_or(|j| !self.mask[j]) || n[3].is_none_or(|j| !self.mask[j]);
                let ud_open = (r > 0 && !self.mask[n[0].unwrap()])
                    || (r + 1 < g.n_u && !self.mask[n[1].unwrap()]);
                lr_open || ud_open
            })
            .collect()
    }

    /// Split side cells into `d3`/`d4` by geodesic distance (within the side
    /// set, 8-adjacency) from the two ends of `d2`.
    pub(crate) fn label_sides(&mut self) {
        let g = self.geom;
        let sides = self.side_cells();
        if sides.is_empty() || self.d2.is_empty() {
            self.d3 = sides;
            self.d4.clear();
            return;
        }
        let mut in_side = vec![false; g.len()];
        for &i in &sides {
            in_side[i] = true;
        }
        let (start, end) = arc_ends(&g, &self.d2);
        let da = side_distances(&g, &in_side, start);
        let db = side_distances(&g, &in_side, end);
        self.d3.clear();
        self.d4.clear();
        for &i in &sides {
            if da[i] <= db[i] {
                self.d3.push(i);
            } else {
                self.d4.push(i);
            }
        }
    }

    /// Inner corner points: the two ends of `d1`, as cylinder points at the
    /// inner edge (`z1` at the clockwise end).
    pub fn inner_corners(&self) -> Option<(CylPoint, CylPoint)> {
        if self.d1.is_empty() {
            return None;
        }
        let g = self.geom;
        let (a, b) = arc_ends(&g, &self.d1);
        let ca = g.center(a);
        let cb = g.center(b);
        Some((
            CylPoint::new(g.u_min, ca.theta - 0.5 * g.dtheta),
            CylPoint::new(g.u_min, cb.theta + 0.5 * g.dtheta),
        ))
    }
}

/// Clockwise and counterclockwise end cells of a row arc. For a periodic
/// full ring the first cell is returned twice.
fn arc_ends(g: &GridGeometry, arc: &[usize]) -> (usize, usize) {
    let mut cols: Vec<usize> = arc.iter().map(|&i| g.row_col(i).1).collect();
    cols.sort_unstable();
    let row = g.row_col(arc[0]).0;
    if !g.periodic || cols.len() == g.n_theta {
        return (g.idx(row, cols[0]), g.idx(row, *cols.last().unwrap()));
    }
    // Largest gap between consecutive (cyclic) columns marks the outside.
    let n = cols.len();
    let mut best = (0usize, 0usize);
    for k in 0..n {
        let a = cols[k];
        let b = cols[(k + 1) % n];
        let gap = (b + g.n_theta - a) % g.n_theta;
        let gap = if n == 1 { g.n_theta } else { gap };
        if gap > best.0 {
            best = (gap, k);
        }
    }
    let end = cols[best.1];
    let start = cols[(best.1 + 1) % n];
    (g.idx(row, start), g.idx(row, end))
}

fn side_distances(g: &GridGeometry, in_side: &[bool], from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.len()];
    let mut q = VecDeque::new();
    // Seed with the side cell nearest to `from` (it may itself be a side cell).
    let seed = if in_side[from] {
        Some(from)
    } else {
        (0..g.len()).filter(|&i| in_side[i]).min_by(|&a, &b| {
            g.distance(a, from).total_cmp(&g.distance(b, from))
        })
    };
    let Some(seed) = seed else { return dist };
    dist[seed] = 0;
    q.push_back(seed);
    while let Some(i) = q.pop_front() {
        for j in neighbors8(g, i) {
            if in_side[j] && dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                q.push_back(j);
            }
        }
    }
    dist
}

pub(crate) fn neighbors8(g: &GridGeometry, i: usize) -> impl Iterator<Item = usize> + '_ {
    let (r, c) = g.row_col(i);
    let (r, c) = (r as isize, c as isize);
    (-1isize..=1)
        .flat_map(move |dr| (-1isize..=1).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| dr != 0 || dc != 0)
        .filter_map(move |(dr, dc)| {
            let rr = r + dr;
            let mut cc = c + dc;
            if rr < 0 || rr >= g.n_u as isize {
                return None;
            }
            if cc < 0 || cc >= g.n_theta as isize {
                if !g.periodic {
                    return None;
                }
                cc = cc.rem_euclid(g.n_theta as isize);
            }
            Some(g.idx(rr as usize, cc as usize))
        })
}

/// The two outer domains cut out by a pair of upcrossings.
#[derive(Debug, Clone)]
pub struct DomainPair {
    /// Domain whose outer arc runs counterclockwise from `end1` to `end2`.
    pub first: Option<PathDomainSpec>,
    pub second: Option<PathDomainSpec>,
}

/// Extract `O¹`, `O²` from a grid holding two upcrossing rasterizations whose
/// endpoints on the outer circle are at angles `end1`, `end2`.
pub fn extract_domains(grid: &OccupancyGrid, end1: f64, end2: f64) -> Result<DomainPair> {
    let g = grid.geom;
    let top = g.n_u - 1;
    if grid.free_in_row(top).next().is_none() {
        return Err(Error::MalformedInput("outer circle fully covered".into()));
    }
    let c1 = g.col_of(end1).unwrap();
    let c2 = g.col_of(end2).unwrap();
    let labels = component_labels(grid);
    let first = domain_ccw_of(grid, &labels, c1, c2)?;
    let second = domain_ccw_of(grid, &labels, c2, c1)?;
    Ok(DomainPair { first, second })
}

/// Free-cell component labels (4-adjacency); `usize::MAX` for obstacles.
fn component_labels(grid: &OccupancyGrid) -> Vec<usize> {
    let g = grid.geom;
    let mut label = vec![usize::MAX; g.len()];
    let mut next = 0;
    let mut q = VecDeque::new();
    for s in 0..g.len() {
        if grid.obstacle[s] || label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        q.push_back(s);
        while let Some(i) = q.pop_front() {
            for j in g.neighbors(i).into_iter().flatten() {
                if !grid.obstacle[j] && label[j] == usize::MAX {
                    label[j] = next;
                    q.push_back(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Component of the first free outer cell met going counterclockwise from
/// column `from`, provided it is met before column `to`.
fn domain_ccw_of(
    grid: &OccupancyGrid,
    labels: &[usize],
    from: usize,
    to: usize,
) -> Result<Option<PathDomainSpec>> {
    let g = grid.geom;
    let top = g.n_u - 1;
    let n = g.n_theta;
    let span = if from == to { 0 } else { (to + n - from) % n };
    let mut found = None;
    for k in 0..span {
        let c = (from + k) % n;
        let i = g.idx(top, c);
        if !grid.obstacle[i] {
            found = Some(i);
            break;
        }
    }
    if span == 0 {
        // Coincident endpoint columns: the arc is the whole circle only if
        // nothing else blocks it; treat as empty.
        let adjacent = [g.idx(top, (from + 1) % n), g.idx(top, (from + n - 1) % n)];
        if adjacent.iter().all(|&i| grid.obstacle[i]) && grid.free_in_row(top).next().is_none() {
            return Err(Error::MalformedInput("endpoint not adjacent to a free outer arc".into()));
        }
        return Ok(None);
    }
    let Some(seed) = found else { return Ok(None) };
    let lab = labels[seed];
    let mask: Vec<bool> = labels.iter().map(|&l| l == lab).collect();
    Ok(Some(domain_from_component(grid, mask)))
}

/// Label arcs of a component; keep the largest contiguous inner and outer
/// arcs.
pub(crate) fn domain_from_component(grid: &OccupancyGrid, mask: Vec<bool>) -> PathDomainSpec {
    let g = grid.geom;
    let (d1, extra1) = largest_arc(&g, &mask, 0);
    let (d2, _) = largest_arc(&g, &mask, g.n_u - 1);
    let floating = if grid.inner_cap == InnerCap::SuperNode {
        (0..g.n_theta)
            .map(|c| g.idx(0, c))
            .filter(|&i| mask[i] && !d1.contains(&i))
            .collect()
    } else {
        Vec::new()
    };
    let mut dom = PathDomainSpec {
        geom: g,
        mask,
        d1,
        d2,
        d3: Vec::new(),
        d4: Vec::new(),
        floating,
        extra_inner_arcs: extra1,
    };
    dom.label_sides();
    dom
}

/// Largest contiguous (cyclic when periodic) run of mask cells in `row`, and
/// the number of other runs.
fn largest_arc(g: &GridGeometry, mask: &[bool], row: usize) -> (Vec<usize>, usize) {
    let n = g.n_theta;
    let cols: Vec<bool> = (0..n).map(|c| mask[g.idx(row, c)]).collect();
    if cols.iter().all(|&b| b) {
        return ((0..n).map(|c| g.idx(row, c)).collect(), 0);
    }
    if !cols.iter().any(|&b| b) {
        return (Vec::new(), 0);
    }
    // Start scanning just after a gap so cyclic runs are not split.
    let start = if g.periodic {
        (0..n).find(|&c| !cols[c]).unwrap() + 1
    } else {
        0
    };
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for k in 0..n {
        let c = (start + k) % n;
        if cols[c] {
            cur.push(g.idx(row, c));
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    let extra = runs.len() - 1;
    let best = runs.into_iter().max_by_key(|r| r.len()).unwrap();
    (best, extra)
}
