use serde::{Deserialize, Serialize};

use crate::maze::{MazeTask, Pos, SimState};

use super::visibility::CellClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopDownClass {
    OutOfRange,
    Cell(CellClass),
}

impl TopDownClass {
    /// Byte code: 0 out of range, 1 free, 2 wall, 16 + color for a PNT.
    pub fn code(self) -> u8 {
        match self {
            TopDownClass::OutOfRange => 0,
            TopDownClass::Cell(CellClass::Free) => 1,
            TopDownClass::Cell(CellClass::Wall) => 2,
            TopDownClass::Cell(CellClass::Pnt(c)) => 16 + c,
        }
    }
}

/// Egocentric `(2k+1)²` crop, row-major, agent at the centre facing up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopDownObs {
    pub k: usize,
    pub cells: Vec<TopDownClass>,
}

impl TopDownObs {
    pub fn side(&self) -> usize {
        2 * self.k + 1
    }

    pub fn get(&self, i: usize, j: usize) -> TopDownClass {
        self.cells[i * self.side() + j]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.cells.iter().map(|c| c.code()).collect()
    }

    /// The crop rotated 90° clockwise.
    pub fn rotated_cw(&self) -> TopDownObs {
        let s = self.side();
        let cells = (0..s * s).map(|idx| self.get(s - 1 - idx % s, idx / s)).collect();
        TopDownObs { k: self.k, cells }
    }
}

pub fn render_topdown(task: &MazeTask, state: &SimState, k: usize) -> TopDownObs {
    assert!(k >= 1, "k must be at least 1");
    let n = task.size() as i64;
    let (fr, fc) = state.heading.delta();
    let (rr, rc) = state.heading.right().delta();
    let s = 2 * k + 1;
    let mut cells = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s {
            let fwd = k as i64 - i as i64;
            let right = j as i64 - k as i64;
            let r = state.cell.row as i64 + fwd * fr as i64 + right * rr as i64;
            let c = state.cell.col as i64 + fwd * fc as i64 + right * rc as i64;
            cells.push(if r < 0 || c < 0 || r >= n || c >= n {
                TopDownClass::OutOfRange
            } else {
                TopDownClass::Cell(CellClass::of(task, Pos::new(r as usize, c as usize)))
            });
        }
    }
    TopDownObs { k, cells }
}
