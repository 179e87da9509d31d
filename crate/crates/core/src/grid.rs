//! Planar windows, cell grids and the raster algorithms used on them:
//! connected-component labeling, grid interior, and bottleneck (widest-path)
//! propagation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("window half width must be positive, got {0}")]
    NonPositiveHalfWidth(f64),
    #[error("window resolution must be at least 16 cells per side, got {0}")]
    ResolutionTooSmall(usize),
    #[error("grid shapes differ: {0}x{0} vs {1}x{1}")]
    ShapeMismatch(usize, usize),
}

/// Square planar window `center + [−W, W]²` split into `resolution²` cells.
/// Cell `(i, j)` has center `center + h·(i+½, j+½) − (W, W)` and index
/// `j·resolution + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Vec2,
    pub half_width: f64,
    pub resolution: usize,
}

impl Window {
    pub fn new(center: Vec2, half_width: f64, resolution: usize) -> Result<Self, GridError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(GridError::NonPositiveHalfWidth(half_width));
        }
        if resolution < 16 {
            return Err(GridError::ResolutionTooSmall(resolution));
        }
        Ok(Window { center, half_width, resolution })
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        let h = self.cell_size();
        Vec2::new(self.center.x - self.half_width + h * (i as f64 + 0.5), self.center.y - self.half_width + h * (j as f64 + 0.5))
    }

    pub fn cell_center_at(&self, idx: usize) -> Vec2 {
        self.cell_center(idx % self.resolution, idx / self.resolution)
    }

    pub fn translated(&self, p: Vec2) -> Window {
        Window { center: self.center + p, ..*self }
    }

    /// Cell containing `z`, if inside the window.
    pub fn locate(&self, z: Vec2) -> Option<(usize, usize)> {
        let h = self.cell_size();
        let fx = ((z.x - (self.center.x - self.half_width)) / h).floor();
        let fy = ((z.y - (self.center.y - self.half_width)) / h).floor();
        let n = self.resolution as f64;
        if fx >= 0.0 && fy >= 0.0 && fx < n && fy < n {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    pub fn contains(&self, z: Vec2) -> bool {
        (z.x - self.center.x).abs() <= self.half_width && (z.y - self.center.y).abs() <= self.half_width
    }

    /// Range of `⟨z, v⟩` over cell centers.
    pub fn projection_range(&self, v: Vec2) -> (f64, f64) {
        let n = self.resolution - 1;
        let corners = [self.cell_center(0, 0), self.cell_center(n, 0), self.cell_center(0, n), self.cell_center(n, n)];
        corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let p = c.dot(v);
            (lo.min(p), hi.max(p))
        })
    }
}

/// Square row-major grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    size: usize,
    data: Vec<T>,
}

pub type BoolGrid = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn filled(size: usize, value: T) -> Self {
        Grid { size, data: vec![value; size * size] }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(size: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), size * size, "grid data length");
        Grid { size, data }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(size * size);
        for j in 0..size {
            for i in 0..size {
                data.push(f(i, j));
            }
        }
        Grid { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.size + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.size + i] = v;
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { size: self.size, data: self.data.iter().map(f).collect() }
    }
}

impl BoolGrid {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn and(&self, other: &BoolGrid) -> BoolGrid {
        Grid { size: self.size, data: self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect() }
    }

    pub fn and_not(&self, other: &BoolGrid) -> BoolGrid {
        Grid { size: self.size, data: self.data.iter().zip(&other.data).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn symmetric_difference_count(&self, other: &BoolGrid) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count()
    }

    pub fn is_subset_of(&self, other: &BoolGrid) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }

    /// Cells of the set with a 4-neighbor (inside the grid) outside the set.
    pub fn boundary_count(&self) -> usize {
        let n = self.size;
        let mut count = 0;
        for j in 0..n {
            for i in 0..n {
                if !*self.get(i, j) {
                    continue;
                }
                let edge = (i > 0 && !*self.get(i - 1, j))
                    || (i + 1 < n && !*self.get(i + 1, j))
                    || (j > 0 && !*self.get(i, j - 1))
                    || (j + 1 < n && !*self.get(i, j + 1));
                if edge {
                    count += 1;
                }
            }
        }
        count
    }

    /// Grid interior: cells whose full 3×3 neighborhood lies in the set.
    /// Border cells never qualify.
    pub fn interior(&self) -> BoolGrid {
        let n = self.size;
        Grid::from_fn(n, |i, j| {
            if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
                return false;
            }
            (j - 1..=j + 1).all(|jj| (i - 1..=i + 1).all(|ii| *self.get(ii, jj)))
        })
    }

    /// Union of the 3×3 blocks contained in the set (dilation of
    /// [`BoolGrid::interior`]). Removes filaments thinner than three cells.
    pub fn opening(&self) -> BoolGrid {
        let inner = self.interior();
        let n = self.size;
        Grid::from_fn(n, |i, j| {
            (j.saturating_sub(1)..=(j + 1).min(n - 1)).any(|jj| (i.saturating_sub(1)..=(i + 1).min(n - 1)).any(|ii| *inner.get(ii, jj)))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

#[inline]
fn neighbors(size: usize, idx: usize, conn: Connectivity) -> impl Iterator<Item = usize> {
    let (i, j) = ((idx % size) as isize, (idx / size) as isize);
    let n = size as isize;
    conn.offsets().iter().filter_map(move |&(di, dj)| {
        let (a, b) = (i + di, j + dj);
        (a >= 0 && b >= 0 && a < n && b < n).then_some((b * n + a) as usize)
    })
}

/// Component labels (`0` = background, components numbered from 1 in
/// row-major order of their first cell).
#[derive(Clone, Debug)]
pub struct Labels {
    pub labels: Grid<u32>,
    pub count: u32,
}

impl Labels {
    pub fn mask_of(&self, selected: impl Fn(u32) -> bool) -> BoolGrid {
        self.labels.map(|&l| l != 0 && selected(l))
    }
}

pub fn label_components(mask: &BoolGrid, conn: Connectivity) -> Labels {
    let n = mask.size();
    let mut labels = vec![0u32; n * n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n * n {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            for nb in neighbors(n, idx, conn) {
                if mask.data[nb] && labels[nb] == 0 {
                    labels[nb] = count;
                    queue.push_back(nb);
                }
            }
        }
    }
    Labels { labels: Grid::from_vec(n, labels), count }
}

/// Union of the components of `mask` that meet `seed`.
pub fn components_touching(mask: &BoolGrid, seed: &BoolGrid, conn: Connectivity) -> (BoolGrid, usize) {
    let labels = label_components(mask, conn);
    let mut hit = vec![false; labels.count as usize + 1];
    for (l, s) in labels.labels.as_slice().iter().zip(seed.as_slice()) {
        if *s && *l != 0 {
            hit[*l as usize] = true;
        }
    }
    let touched = hit.iter().filter(|&&h| h).count();
    (labels.mask_of(|l| hit[l as usize]), touched)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    value: f64,
    idx: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bottleneck propagation: for every cell `z`, the largest `r` such that `z`
/// is joined to a source `y` with `source(y) ≥ r` by a path of cells with
/// `value ≥ r` (both ends included). Unreachable cells get `−∞`.
///
/// Equivalently, `{result ≥ r}` is the union of the components of
/// `{value ≥ r}` meeting `{source ≥ r}`, for every `r` simultaneously.
pub fn bottleneck_fill(value: &Grid<f64>, source: &Grid<f64>, conn: Connectivity) -> Grid<f64> {
    let n = value.size();
    let mut out = vec![f64::NEG_INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for (idx, slot) in out.iter_mut().enumerate() {
        let start = source.data[idx].min(value.data[idx]);
        if start > f64::NEG_INFINITY {
            *slot = start;
            heap.push(HeapItem { value: start, idx });
        }
    }
    while let Some(HeapItem { value: cur, idx }) = heap.pop() {
        if cur < out[idx] {
            continue;
        }
        for nb in neighbors(n, idx, conn) {
            let cand = cur.min(value.data[nb]);
            if cand > out[nb] {
                out[nb] = cand;
                heap.push(HeapItem { value: cand, idx: nb });
            }
        }
    }
    Grid::from_vec(n, out)
}

/// `min` over the 3×3 neighborhood; border cells get `−∞` (they have no full
/// neighborhood). Thresholding commutes with [`BoolGrid::interior`].
pub fn neighborhood_min(values: &Grid<f64>) -> Grid<f64> {
    let n = values.size();
    Grid::from_fn(n, |i, j| {
        if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
            return f64::NEG_INFINITY;
        }
        let mut m = f64::INFINITY;
        for jj in j - 1..=j + 1 {
            for ii in i - 1..=i + 1 {
                m = m.min(*values.get(ii, jj));
            }
        }
        m
    })
}

/// Grayscale counterpart of [`BoolGrid::opening`]: thresholding commutes
/// with it.
pub fn neighborhood_open(values: &Grid<f64>) -> Grid<f64> {
    let inner = neighborhood_min(values);
    let n = values.size();
    Grid::from_fn(n, |i, j| {
        let mut m = f64::NEG_INFINITY;
        for jj in j.saturating_sub(1)..=(j + 1).min(n - 1) {
            for ii in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                m = m.max(*inner.get(ii, jj));
            }
        }
        m
    })
}
