#![allow(dead_code)]

use icbench_core::maze::{generate_task, Cell, Heading, MazeConfig, MazeTask, Pnt, Pos, SimState};

/// A `size`×`size` task whose interior is one open room, with a single PNT
/// (color `color`) at `pnt` if given. Walls use texture `tex`.
pub fn open_room(size: usize, pnt: Option<(Pos, u8)>, tex: u8) -> MazeTask {
    let cfg = MazeConfig { num_pnts: 1, ..MazeConfig::with_reward(size, 1.0) };
    let mut task = generate_task(&cfg, 0).unwrap();
    let n = size;
    for r in 0..n {
        for c in 0..n {
            let boundary = r == 0 || c == 0 || r == n - 1 || c == n - 1;
            task.grid[r * n + c] = if boundary { Cell::Wall } else { Cell::Free };
            task.wall_texture[r * n + c] = tex;
        }
    }
    task.pnts = match pnt {
        Some((pos, color)) => vec![Pnt { pos, color, hidden_reward: 0.0 }],
        None => vec![Pnt { pos: Pos::new(n - 2, n - 2), color: 0, hidden_reward: 0.0 }],
    };
    let color = task.pnts[0].color;
    task.commands = vec![color; cfg.episode_len + 1];
    task
}

pub fn at(task: &MazeTask, row: usize, col: usize, heading: Heading) -> SimState {
    SimState { cell: Pos::new(row, col), heading, ..SimState::initial(task) }
}

pub fn free_cells(task: &MazeTask) -> Vec<Pos> {
    let n = task.size();
    (0..n * n).map(|i| Pos::new(i / n, i % n)).filter(|&p| task.is_free(p)).collect()
}
