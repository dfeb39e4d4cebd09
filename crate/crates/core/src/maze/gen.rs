use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Cell, Heading, MazeConfig, MazeError, MazeTask, Pnt, Pos, TaskType, NUM_COLORS, NUM_TEXTURES};
use crate::rng::{self, streams};

/// Builds the task for `(config, seed)`.
///
/// Layout: a recursive-backtracker perfect maze over the odd-coordinate
/// rooms, then interior walls touching a FREE cell are opened one at a time
/// until the interior WALL count reaches `round(density · interior)`. Opening
/// a wall next to a FREE cell only adds edges, so connectivity is preserved.
/// Densities above the perfect-maze fraction stop at the tree.
pub fn generate_task(config: &MazeConfig, seed: u64) -> Result<MazeTask, MazeError> {
    config.validate()?;
    let n = config.size;
    let mut grid = carve_perfect(n, &mut rng::stream(seed, streams::MAZE_LAYOUT));
    open_walls(&mut grid, n, config.obstacle_density, &mut rng::stream(seed, streams::MAZE_LAYOUT ^ 0x100));

    let interior_walls = interior_wall_count(&grid, n);
    let actual_density = interior_walls as f64 / config.interior_cells() as f64;

    let mut tex_rng = rng::stream(seed, streams::MAZE_TEXTURE);
    let wall_texture = grid
        .iter()
        .map(|&c| match c {
            Cell::Wall => tex_rng.random_range(0..NUM_TEXTURES as u8),
            Cell::Free => 0,
        })
        .collect();

    let free: Vec<Pos> = (0..n * n)
        .filter(|&i| grid[i] == Cell::Free)
        .map(|i| Pos::new(i / n, i % n))
        .collect();
    if config.num_pnts >= free.len() {
        return Err(MazeError::Config(format!(
            "num_pnts {} needs more than {} free cells",
            config.num_pnts,
            free.len()
        )));
    }

    let mut pnt_rng = rng::stream(seed, streams::MAZE_PNT);
    let mut cells = free.clone();
    cells.shuffle(&mut pnt_rng);
    let mut colors: Vec<u8> = (0..NUM_COLORS as u8).collect();
    colors.shuffle(&mut pnt_rng);
    let pnts: Vec<Pnt> = cells[..config.num_pnts]
        .iter()
        .zip(&colors)
        .map(|(&pos, &color)| Pnt {
            pos,
            color,
            hidden_reward: match config.task_type {
                TaskType::Survival => pnt_rng.random_range(-1.0..=1.0),
                TaskType::Navigation => 0.0,
            },
        })
        .collect();

    let mut cmd_rng = rng::stream(seed, streams::MAZE_COMMAND);
    let palette: Vec<u8> = pnts.iter().map(|p| p.color).collect();
    let mut commands = Vec::with_capacity(config.episode_len + 1);
    let mut prev: Option<u8> = None;
    for _ in 0..=config.episode_len {
        let choices: Vec<u8> = palette.iter().copied().filter(|&c| Some(c) != prev || palette.len() == 1).collect();
        let c = *choices.choose(&mut cmd_rng).expect("at least one PNT");
        commands.push(c);
        prev = Some(c);
    }

    let mut start_rng = rng::stream(seed, streams::MAZE_START);
    let candidates: Vec<Pos> = free.iter().copied().filter(|p| !pnts.iter().any(|q| q.pos == *p)).collect();
    let start = *candidates.choose(&mut start_rng).expect("free cell without PNT");
    let start_heading = Heading::ALL[start_rng.random_range(0..4)];

    Ok(MazeTask {
        config: config.clone(),
        seed,
        grid,
        wall_texture,
        pnts,
        commands,
        start,
        start_heading,
        actual_density,
    })
}

fn carve_perfect(n: usize, rng: &mut impl Rng) -> Vec<Cell> {
    let mut grid = vec![Cell::Wall; n * n];
    let rooms = (n - 1) / 2;
    let room_pos = |i: usize, j: usize| Pos::new(2 * i + 1, 2 * j + 1);
    let mut visited = vec![false; rooms * rooms];
    let (si, sj) = (rng.random_range(0..rooms), rng.random_range(0..rooms));
    let mut stack = vec![(si, sj)];
    visited[si * rooms + sj] = true;
    let p = room_pos(si, sj);
    grid[p.row * n + p.col] = Cell::Free;

    while let Some(&(i, j)) = stack.last() {
        let mut options = Vec::with_capacity(4);
        if i > 0 && !visited[(i - 1) * rooms + j] {
            options.push((i - 1, j));
        }
        if i + 1 < rooms && !visited[(i + 1) * rooms + j] {
            options.push((i + 1, j));
        }
        if j > 0 && !visited[i * rooms + j - 1] {
            options.push((i, j - 1));
        }
        if j + 1 < rooms && !visited[i * rooms + j + 1] {
            options.push((i, j + 1));
        }
        match options.choose(rng) {
            Some(&(ni, nj)) => {
                visited[ni * rooms + nj] = true;
                let a = room_pos(i, j);
                let b = room_pos(ni, nj);
                let mid = Pos::new((a.row + b.row) / 2, (a.col + b.col) / 2);
                grid[mid.row * n + mid.col] = Cell::Free;
                grid[b.row * n + b.col] = Cell::Free;
                stack.push((ni, nj));
            }
            None => {
                stack.pop();
            }
        }
    }
    grid
}

fn interior_wall_count(grid: &[Cell], n: usize) -> usize {
    (1..n - 1)
        .flat_map(|r| (1..n - 1).map(move |c| (r, c)))
        .filter(|&(r, c)| grid[r * n + c] == Cell::Wall)
        .count()
}

fn open_walls(grid: &mut [Cell], n: usize, density: f64, rng: &mut impl Rng) {
    let interior = (n - 2) * (n - 2);
    let target = (density * interior as f64).round() as usize;
    let mut walls = interior_wall_count(grid, n);
    while walls > target {
        let candidates: Vec<usize> = (1..n - 1)
            .flat_map(|r| (1..n - 1).map(move |c| r * n + c))
            .filter(|&i| grid[i] == Cell::Wall)
            .filter(|&i| Pos::new(i / n, i % n).neighbors(n).any(|q| grid[q.row * n + q.col] == Cell::Free))
            .collect();
        let Some(&pick) = candidates.choose(rng) else { break };
        grid[pick] = Cell::Free;
        walls -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::super::{count_free_edges, free_cells_connected};
    use super::*;

    #[test]
    fn boundary_is_walled_and_free_cells_connected() {
        for seed in 0..50 {
            let task = generate_task(&MazeConfig::default(), seed).unwrap();
            let n = task.size();
            for i in 0..n {
                for p in [Pos::new(0, i), Pos::new(n - 1, i), Pos::new(i, 0), Pos::new(i, n - 1)] {
                    assert_eq!(task.cell(p), Cell::Wall);
                }
            }
            assert!(free_cells_connected(&task));
        }
    }

    #[test]
    fn density_target_is_hit_exactly() {
        let cfg = MazeConfig::default();
        let target = (0.36f64 * 169.0).round() / 169.0;
        for seed in 0..20 {
            let task = generate_task(&cfg, seed).unwrap();
            assert!((task.actual_density - target).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_configs_clamp_to_a_tree() {
        let cfg = MazeConfig { obstacle_density: 0.55, ..MazeConfig::default() };
        for seed in 0..20 {
            let task = generate_task(&cfg, seed).unwrap();
            assert_eq!(count_free_edges(&task), task.free_count() - 1);
            // 7×7 rooms, 48 passages
            assert!((task.actual_density - 72.0 / 169.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pnts_and_commands() {
        let task = generate_task(&MazeConfig::default(), 9).unwrap();
        assert_eq!(task.pnts.len(), 10);
        let mut cells: Vec<Pos> = task.pnts.iter().map(|p| p.pos).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 10);
        assert!(task.pnts.iter().all(|p| task.is_free(p.pos) && p.hidden_reward == 0.0));
        let mut colors: Vec<u8> = task.pnts.iter().map(|p| p.color).collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), 10);
        assert_eq!(task.commands.len(), 2049);
        assert!(task.commands.windows(2).all(|w| w[0] != w[1]));
        assert!(task.commands.iter().all(|c| colors.contains(c)));
        assert!(task.is_free(task.start) && task.pnt_at(task.start).is_none());
    }

    #[test]
    fn survival_rewards_in_range() {
        let cfg = MazeConfig { task_type: TaskType::Survival, ..MazeConfig::default() };
        let task = generate_task(&cfg, 2).unwrap();
        assert!(task.pnts.iter().all(|p| (-1.0..=1.0).contains(&p.hidden_reward)));
        assert!(task.pnts.iter().any(|p| p.hidden_reward != 0.0));
    }

    #[test]
    fn too_many_pnts_is_a_config_error() {
        let cfg = MazeConfig { num_pnts: 17, ..MazeConfig::default() };
        assert!(matches!(generate_task(&cfg, 0), Err(MazeError::Config(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_task(&MazeConfig::default(), 77).unwrap();
        let b = generate_task(&MazeConfig::default(), 77).unwrap();
        assert_eq!(a.archive_bytes(), b.archive_bytes());
        assert_ne!(a.grid, generate_task(&MazeConfig::default(), 78).unwrap().grid);
    }
}
