//! Rank-`k` bases when `k ∤ d·d'`.
//!
//! With `d = s·k + r` and `d' = s'·k + r'` the `d x d'` grid splits into a
//! `d x (s'−1)k` column block, an `(s−1)k x (k+r')` block under the corner,
//! and a `(k+r) x (k+r')` corner. The first two have a side divisible by
//! `k` and are filled cyclically. The corner is tiled by generalized
//! `k`-diagonals (`k` cells, distinct rows and columns) and L-patterns: `k−1`
//! singleton cells plus `s+1` cells sharing one line, all other rows and
//! columns distinct. An L-pattern of `k+s` cells carries `k+s` orthonormal
//! rank-`k` matrices taken from the columns of a `(k+s) x (k+s)` isometry.

use serde::Serialize;

use crate::construct::{cyclic_cells, field_name, COEFF_ZERO_TOL};
use crate::error::{Error, Result};
use crate::isometry::{CoefficientSource, Field, Isometry};
use crate::model::{BipartiteState, Cell, EntangledBasis, Family, Provenance};
use crate::numerics::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Cyclic,
    Corner,
}

/// Axis-aligned sub-grid `[row0, row0 + rows) x [col0, col0 + cols)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn contains(&self, (r, c): Cell) -> bool {
        r >= self.row0 && r < self.row0 + self.rows && c >= self.col0 && c < self.col0 + self.cols
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockDecomposition {
    pub d: usize,
    pub dprime: usize,
    pub k: usize,
    pub s: usize,
    pub r: usize,
    pub sprime: usize,
    pub rprime: usize,
    pub blocks: Vec<Block>,
}

impl BlockDecomposition {
    pub fn corner(&self) -> &Block {
        self.blocks.iter().find(|b| b.kind == BlockKind::Corner).expect("decomposition always has a corner")
    }
}

/// Splits the `d x d'` grid into cyclic blocks and one corner.
pub fn block_decompose(d: usize, dprime: usize, k: usize) -> Result<BlockDecomposition> {
    if k < 2 || k > d || d > dprime {
        return Err(Error::InvalidInput(format!("block decomposition needs 2 <= k <= d <= d' (got k={k}, {d}x{dprime})")));
    }
    if (d * dprime) % k == 0 {
        return Err(Error::WrongPath { rows: d, cols: dprime, k });
    }
    let (s, r) = (d / k, d % k);
    let (sprime, rprime) = (dprime / k, dprime % k);
    let left = (sprime - 1) * k;
    let corner_rows = k + r;
    let mut blocks = Vec::with_capacity(3);
    if sprime >= 2 {
        blocks.push(Block { kind: BlockKind::Cyclic, row0: 0, col0: 0, rows: d, cols: left });
    }
    if s >= 2 {
        blocks.push(Block { kind: BlockKind::Cyclic, row0: corner_rows, col0: left, rows: (s - 1) * k, cols: k + rprime });
    }
    blocks.push(Block { kind: BlockKind::Corner, row0: 0, col0: left, rows: corner_rows, cols: k + rprime });
    Ok(BlockDecomposition { d, dprime, k, s, r, sprime, rprime, blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// The `s+1` shared cells lie in one column.
    Column,
    /// The `s+1` shared cells lie in one row.
    Row,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LPattern {
    pub k: usize,
    pub s: usize,
    pub orientation: Orientation,
    /// `k−1` cells, row-major order.
    pub singletons: Vec<Cell>,
    /// `s+1` cells on one line, row-major order.
    pub line: Vec<Cell>,
}

impl LPattern {
    /// Cells in coefficient order: singletons first, then the shared line.
    pub fn positions(&self) -> Vec<Cell> {
        self.singletons.iter().chain(&self.line).copied().collect()
    }

    /// Structural invariant: sizes, a genuine shared line, and every other
    /// row and column used once.
    pub fn is_valid(&self) -> bool {
        if self.k < 2 || self.s == 0 || self.s >= self.k {
            return false;
        }
        if self.singletons.len() != self.k - 1 || self.line.len() != self.s + 1 {
            return false;
        }
        let (line_rows, line_cols): (Vec<usize>, Vec<usize>) = self.line.iter().copied().unzip();
        let shared_ok = match self.orientation {
            Orientation::Column => line_cols.iter().all(|&c| c == line_cols[0]) && all_distinct(&line_rows),
            Orientation::Row => line_rows.iter().all(|&r| r == line_rows[0]) && all_distinct(&line_cols),
        };
        let mut rows: Vec<usize> = self.singletons.iter().map(|c| c.0).collect();
        let mut cols: Vec<usize> = self.singletons.iter().map(|c| c.1).collect();
        match self.orientation {
            Orientation::Column => {
                rows.extend(&line_rows);
                cols.push(line_cols[0]);
            }
            Orientation::Row => {
                rows.push(line_rows[0]);
                cols.extend(&line_cols);
            }
        }
        shared_ok && all_distinct(&rows) && all_distinct(&cols)
    }
}

fn all_distinct(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).all(|w| w[0] != w[1])
}

/// Exact cover of a corner grid (local coordinates).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tiling {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub diagonals: Vec<Vec<Cell>>,
    pub l_patterns: Vec<LPattern>,
}

impl Tiling {
    /// Checks coverage and the structure of every piece.
    pub fn is_valid(&self) -> bool {
        let mut hits = vec![0u8; self.rows * self.cols];
        for cell in self.diagonals.iter().flatten().chain(self.l_patterns.iter().flat_map(|l| l.singletons.iter().chain(&l.line))) {
            if cell.0 >= self.rows || cell.1 >= self.cols {
                return false;
            }
            hits[cell.0 * self.cols + cell.1] += 1;
        }
        let diagonals_ok = self.diagonals.iter().all(|dg| {
            dg.len() == self.k
                && all_distinct(&dg.iter().map(|c| c.0).collect::<Vec<_>>())
                && all_distinct(&dg.iter().map(|c| c.1).collect::<Vec<_>>())
        });
        let area: usize = self.l_patterns.iter().map(|l| l.k + l.s).sum::<usize>() + self.k * self.diagonals.len();
        hits.iter().all(|&h| h == 1)
            && diagonals_ok
            && self.l_patterns.iter().all(|l| l.is_valid() && l.k == self.k)
            && area == self.rows * self.cols
    }
}

/// Rank-`k` orthonormal basis of the L-shaped `(k+s) x k` matrices: column
/// `i` of `coeffs` fills matrix `i`, entry `p < k−1` at `(p, p)` and entry
/// `p ≥ k−1` at `(p, k−1)`.
pub fn l_pattern_basis(k: usize, s: usize, coeffs: &Isometry) -> Result<Vec<CMatrix>> {
    check_l_coefficients(k, s, coeffs)?;
    let n = k + s;
    Ok((0..n)
        .map(|i| {
            let mut m = CMatrix::zeros(n, k);
            for p in 0..n {
                m.set(p, p.min(k - 1), coeffs.get(p, i));
            }
            m
        })
        .collect())
}

fn check_l_coefficients(k: usize, s: usize, coeffs: &Isometry) -> Result<()> {
    if k < 2 || s == 0 || s >= k {
        return Err(Error::InvalidInput(format!("L-pattern needs k >= 2 and 1 <= s <= k-1 (k={k}, s={s})")));
    }
    let n = k + s;
    if !coeffs.is_square() || coeffs.rows() != n {
        return Err(Error::InvalidInput(format!("L-pattern with k={k}, s={s} needs a {n}x{n} isometry, got {coeffs}")));
    }
    for i in 0..n {
        if (0..k - 1).any(|p| coeffs.get(p, i).norm() <= COEFF_ZERO_TOL) {
            return Err(Error::DegenerateCoefficients(format!(
                "column {i} of {coeffs} has a zero among its first {} entries",
                k - 1
            )));
        }
        let tail: f64 = (k - 1..n).map(|p| coeffs.get(p, i).norm_sqr()).sum();
        if tail.sqrt() <= COEFF_ZERO_TOL {
            return Err(Error::DegenerateCoefficients(format!("column {i} of {coeffs} has a zero tail")));
        }
    }
    Ok(())
}

/// Deterministic tiling of an `m x n` corner into `k`-diagonals and
/// L-patterns.
///
/// The L-pattern excesses are fixed first: partitions of `m·n mod k` (then
/// of that plus `k`) into parts in `1..k`, largest parts first. Each
/// L-pattern is laid out as `k−1` diagonal singletons followed by a shared
/// column (or row, when the column is too short), at the first cyclic
/// offset where it is disjoint from the ones already placed. The remaining
/// cells form a bipartite graph between rows and columns; when no row or
/// column keeps more than `q = remaining/k` cells it splits into `q`
/// matchings of exactly `k` cells, found by an edge colouring that is then
/// balanced along alternating paths.
pub fn tile_corner(m: usize, n: usize, k: usize) -> Result<Tiling> {
    if k < 2 || m < k || n < k {
        return Err(Error::InvalidInput(format!("corner {m}x{n} too small for k = {k}")));
    }
    let excess = (m * n) % k;
    let mut plans: Vec<Vec<usize>> = Vec::new();
    for total in [excess, excess + k] {
        if total == 0 {
            plans.push(Vec::new());
            continue;
        }
        let mut parts = Vec::new();
        partitions(total, k - 1, &mut parts, &mut plans);
    }
    plans.retain(|p| p.iter().all(|&s| m.max(n) >= k + s));

    for plan in plans {
        let Some(l_patterns) = place_l_patterns(m, n, k, &plan) else {
            continue;
        };
        let mut used = vec![false; m * n];
        for cell in l_patterns.iter().flat_map(LPattern::positions) {
            used[cell.0 * n + cell.1] = true;
        }
        let rest: Vec<Cell> = (0..m * n).filter(|&i| !used[i]).map(|i| (i / n, i % n)).collect();
        if let Some(diagonals) = split_into_diagonals(m, n, k, &rest) {
            return Ok(Tiling { rows: m, cols: n, k, diagonals, l_patterns });
        }
    }
    Err(Error::TilingNotFound { rows: m, cols: n, k })
}

/// Partitions of `total` into non-increasing parts `<= max_part`, in
/// descending lexicographic order.
fn partitions(total: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if total == 0 {
        out.push(current.clone());
        return;
    }
    for part in (1..=max_part.min(total)).rev() {
        current.push(part);
        partitions(total - part, part, current, out);
        current.pop();
    }
}

fn place_l_patterns(m: usize, n: usize, k: usize, plan: &[usize]) -> Option<Vec<LPattern>> {
    let mut used = vec![false; m * n];
    let mut placed = Vec::with_capacity(plan.len());
    for &s in plan {
        let orientation = if m >= k + s { Orientation::Column } else { Orientation::Row };
        let pattern = (0..m * n).find_map(|t| {
            let p = l_layout(m, n, k, s, orientation, t / n, t % n);
            p.positions().iter().all(|c| !used[c.0 * n + c.1]).then_some(p)
        })?;
        for c in pattern.positions() {
            used[c.0 * n + c.1] = true;
        }
        placed.push(pattern);
    }
    Some(placed)
}

/// L-pattern with singletons `(p, p)`, `p < k−1`, and the shared line at
/// index `k−1`, shifted cyclically by `(dr, dc)`.
fn l_layout(m: usize, n: usize, k: usize, s: usize, orientation: Orientation, dr: usize, dc: usize) -> LPattern {
    let at = |r: usize, c: usize| ((r + dr) % m, (c + dc) % n);
    let mut singletons: Vec<Cell> = (0..k - 1).map(|p| at(p, p)).collect();
    let mut line: Vec<Cell> = (k - 1..k + s)
        .map(|p| match orientation {
            Orientation::Column => at(p, k - 1),
            Orientation::Row => at(k - 1, p),
        })
        .collect();
    singletons.sort_unstable();
    line.sort_unstable();
    LPattern { k, s, orientation, singletons, line }
}

/// Splits `cells` into matchings of exactly `k` cells, or `None` if some
/// row or column holds more cells than there are matchings.
fn split_into_diagonals(m: usize, n: usize, k: usize, cells: &[Cell]) -> Option<Vec<Vec<Cell>>> {
    if cells.len() % k != 0 {
        return None;
    }
    let q = cells.len() / k;
    let mut row_deg = vec![0; m];
    let mut col_deg = vec![0; n];
    for &(r, c) in cells {
        row_deg[r] += 1;
        col_deg[c] += 1;
    }
    if row_deg.iter().chain(&col_deg).any(|&deg| deg > q) {
        return None;
    }
    let mut coloring = EdgeColoring::new(m, n, q);
    for &(r, c) in cells {
        coloring.insert(r, c);
    }
    coloring.balance(k);
    let mut classes: Vec<Vec<Cell>> = (0..q)
        .map(|col| {
            let mut v: Vec<Cell> = (0..m).filter_map(|r| coloring.row_nb[r][col].map(|c| (r, c))).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort_unstable();
    Some(classes)
}

/// Proper edge colouring of a bipartite row/column graph with `q` colours.
struct EdgeColoring {
    q: usize,
    row_nb: Vec<Vec<Option<usize>>>,
    col_nb: Vec<Vec<Option<usize>>>,
}

#[derive(Clone, Copy)]
enum Node {
    Row(usize),
    Col(usize),
}

impl EdgeColoring {
    fn new(m: usize, n: usize, q: usize) -> Self {
        Self { q, row_nb: vec![vec![None; q]; m], col_nb: vec![vec![None; q]; n] }
    }

    fn neighbor(&self, node: Node, color: usize) -> Option<Node> {
        match node {
            Node::Row(r) => self.row_nb[r][color].map(Node::Col),
            Node::Col(c) => self.col_nb[c][color].map(Node::Row),
        }
    }

    fn set(&mut self, r: usize, c: usize, color: usize, on: bool) {
        self.row_nb[r][color] = on.then_some(c);
        self.col_nb[c][color] = on.then_some(r);
    }

    /// Alternating path from `start` that begins with colour `a`.
    fn path(&self, start: Node, a: usize, b: usize) -> Vec<(usize, usize, usize)> {
        let mut edges = Vec::new();
        let (mut cur, mut color) = (start, a);
        while let Some(next) = self.neighbor(cur, color) {
            let (r, c) = match (cur, next) {
                (Node::Row(r), Node::Col(c)) | (Node::Col(c), Node::Row(r)) => (r, c),
                _ => unreachable!("bipartite"),
            };
            edges.push((r, c, color));
            cur = next;
            color = if color == a { b } else { a };
        }
        edges
    }

    fn swap(&mut self, edges: &[(usize, usize, usize)], a: usize, b: usize) {
        for &(r, c, color) in edges {
            self.set(r, c, color, false);
        }
        for &(r, c, color) in edges {
            self.set(r, c, if color == a { b } else { a }, true);
        }
    }

    fn insert(&mut self, r: usize, c: usize) {
        let a = (0..self.q).find(|&x| self.row_nb[r][x].is_none()).expect("row degree within q");
        if self.col_nb[c][a].is_some() {
            let b = (0..self.q).find(|&x| self.col_nb[c][x].is_none()).expect("column degree within q");
            let edges = self.path(Node::Col(c), a, b);
            self.swap(&edges, a, b);
        }
        self.set(r, c, a, true);
    }

    fn class_size(&self, color: usize) -> usize {
        self.row_nb.iter().filter(|nb| nb[color].is_some()).count()
    }

    /// Moves edges between colour classes until every class has `k` edges.
    fn balance(&mut self, k: usize) {
        loop {
            let sizes: Vec<usize> = (0..self.q).map(|x| self.class_size(x)).collect();
            let Some(a) = (0..self.q).find(|&x| sizes[x] > k) else {
                return;
            };
            let b = (0..self.q).find(|&x| sizes[x] < k).expect("total is q·k");
            let ends = (0..self.row_nb.len())
                .map(Node::Row)
                .chain((0..self.col_nb.len()).map(Node::Col))
                .filter(|&v| self.neighbor(v, a).is_some() && self.neighbor(v, b).is_none());
            let mut flipped = false;
            for v in ends.collect::<Vec<_>>() {
                let edges = self.path(v, a, b);
                if edges.len() % 2 == 1 {
                    self.swap(&edges, a, b);
                    flipped = true;
                    break;
                }
            }
            assert!(flipped, "a larger class always has an odd alternating path");
        }
    }
}

/// Rank-`k` basis of `C^d ⊗ C^d'` for `k ∤ d·d'` (`2 ≤ k ≤ d ≤ d'`).
///
/// State order: column block, lower block, then the corner's diagonals and
/// L-patterns in tiling order.
pub fn assemble(d: usize, dprime: usize, k: usize, coeffs: &CoefficientSource, field: Field) -> Result<EntangledBasis> {
    let dec = block_decompose(d, dprime, k)?;
    let corner = *dec.corner();
    let tiling = tile_corner(corner.rows, corner.cols, k)?;
    let diag_coeffs = coeffs.resolve(k, field)?;

    let mut cell_lists: Vec<Vec<(Cell, C64)>> = Vec::with_capacity(d * dprime);
    for block in dec.blocks.iter().filter(|b| b.kind == BlockKind::Cyclic) {
        for cells in cyclic_cells(block.rows, block.cols, k, &diag_coeffs)? {
            cell_lists.push(cells.into_iter().map(|((r, c), a)| ((r + block.row0, c + block.col0), a)).collect());
        }
    }
    let shift = |(r, c): Cell| (r + corner.row0, c + corner.col0);
    for diag in &tiling.diagonals {
        for m in 0..k {
            cell_lists.push(diag.iter().enumerate().map(|(l, &cell)| (shift(cell), diag_coeffs.get(l, m))).collect());
        }
    }
    let mut l_sources = Vec::new();
    for pattern in &tiling.l_patterns {
        let x = coeffs.resolve(k + pattern.s, field)?;
        check_l_coefficients(k, pattern.s, &x)?;
        let cells = pattern.positions();
        for i in 0..k + pattern.s {
            cell_lists.push(cells.iter().enumerate().map(|(p, &cell)| (shift(cell), x.get(p, i))).collect());
        }
        l_sources.push(x.to_string());
    }

    let states = cell_lists
        .into_iter()
        .map(|cells| BipartiteState::new(d, dprime, cells.into_iter().map(|((r, c), a)| (r, c, a)).collect()))
        .collect::<Result<Vec<_>>>()?;

    let blocks: Vec<String> = dec
        .blocks
        .iter()
        .map(|b| format!("{:?}@({},{}):{}x{}", b.kind, b.row0, b.col0, b.rows, b.cols).to_lowercase())
        .collect();
    let excesses: Vec<String> = tiling.l_patterns.iter().map(|l| l.s.to_string()).collect();
    let provenance = Provenance::new()
        .with("construction", "block-tiling")
        .with("blocks", blocks.join(" "))
        .with("tiling", format!("{} diagonals, L-pattern excesses [{}]", tiling.diagonals.len(), excesses.join(",")))
        .with("coefficients", format!("diagonals {diag_coeffs}; L-patterns {}", l_sources.join(",")))
        .with("field", field_name(field))
        .with("ordering", "cyclic blocks, then corner diagonals, then corner L-patterns");
    EntangledBasis::new([d, dprime], k, states, Family::Ebk, provenance)
}
