use serde::{Deserialize, Serialize};

use crate::maze::{Cell, MazeTask, Pos, SimState};

/// What an observer learns about one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Free,
    Wall,
    Pnt(u8),
}

impl CellClass {
    pub fn of(task: &MazeTask, p: Pos) -> CellClass {
        match task.cell(p) {
            Cell::Wall => CellClass::Wall,
            Cell::Free => match task.pnt_at(p) {
                Some(i) => CellClass::Pnt(task.pnts[i].color),
                None => CellClass::Free,
            },
        }
    }

    pub fn passable(self) -> bool {
        !matches!(self, CellClass::Wall)
    }
}

/// Cells in line of sight, sorted by position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleSet {
    pub cells: Vec<(Pos, CellClass)>,
}

impl VisibleSet {
    pub fn contains(&self, p: Pos) -> bool {
        self.cells.binary_search_by(|(q, _)| q.cmp(&p)).is_ok()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Pos, CellClass)> {
        self.cells.iter()
    }
}

/// Whether the segment between the centers of `a` and `b` stays clear of
/// WALL interiors other than `b` itself.
///
/// The segment is sampled at `m = ceil(4·length)` evenly spaced points
/// (quarter-cell steps). Coordinates are kept as exact integers in units of
/// 1/(2m) cell, so the test is symmetric in `a` and `b`; samples that land
/// exactly on a grid line lie in no cell interior and are skipped.
pub fn line_of_sight(task: &MazeTask, a: Pos, b: Pos) -> bool {
    let (dr, dc) = (b.row as i64 - a.row as i64, b.col as i64 - a.col as i64);
    let len = ((dr * dr + dc * dc) as f64).sqrt();
    let m = (4.0 * len).ceil().max(1.0) as i64;
    let denom = 2 * m;
    for k in 1..m {
        let nr = (2 * a.row as i64 + 1) * m + 2 * k * dr;
        let nc = (2 * a.col as i64 + 1) * m + 2 * k * dc;
        if nr % denom == 0 || nc % denom == 0 {
            continue;
        }
        let p = Pos::new((nr / denom) as usize, (nc / denom) as usize);
        if p != a && p != b && task.cell(p) == Cell::Wall {
            return false;
        }
    }
    true
}

/// All cells whose center lies within `view_range` of the agent and is in
/// line of sight. Field of view is 360°; the agent's cell is always included.
pub fn visible_cells(task: &MazeTask, state: &SimState) -> VisibleSet {
    visible_from(task, state.cell)
}

pub fn visible_from(task: &MazeTask, at: Pos) -> VisibleSet {
    let n = task.size() as i64;
    let reach = task.config.view_range / task.config.cell_size;
    let r2 = reach * reach;
    let span = reach.floor() as i64;
    let mut cells = Vec::new();
    for r in (at.row as i64 - span).max(0)..=(at.row as i64 + span).min(n - 1) {
        for c in (at.col as i64 - span).max(0)..=(at.col as i64 + span).min(n - 1) {
            let (dr, dc) = (r - at.row as i64, c - at.col as i64);
            if ((dr * dr + dc * dc) as f64) > r2 {
                continue;
            }
            let p = Pos::new(r as usize, c as usize);
            if p == at || line_of_sight(task, at, p) {
                cells.push((p, CellClass::of(task, p)));
            }
        }
    }
    VisibleSet { cells }
}
