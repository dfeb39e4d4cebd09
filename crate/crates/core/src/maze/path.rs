use std::collections::VecDeque;

use super::{Cell, MazeError, MazeTask, Pos};

/// BFS distances over 4-adjacent FREE cells; `None` for WALL or unreachable.
pub fn bfs_distances(task: &MazeTask, from: Pos) -> Vec<Option<u32>> {
    let n = task.size();
    let mut dist = vec![None; n * n];
    if !task.is_free(from) {
        return dist;
    }
    dist[from.row * n + from.col] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        let d = dist[p.row * n + p.col].unwrap();
        for q in p.neighbors(n) {
            let slot = &mut dist[q.row * n + q.col];
            if slot.is_none() && task.is_free(q) {
                *slot = Some(d + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Length in moves of the shortest FREE path between two FREE cells.
pub fn shortest_path(task: &MazeTask, from: Pos, to: Pos) -> Result<usize, MazeError> {
    let n = task.size();
    for p in [from, to] {
        if p.row >= n || p.col >= n || !task.is_free(p) {
            return Err(MazeError::Argument(format!("({}, {}) is not a FREE cell", p.row, p.col)));
        }
    }
    bfs_distances(task, from)[to.row * n + to.col]
        .map(|d| d as usize)
        .ok_or_else(|| MazeError::Argument("cells are disconnected".into()))
}

/// Whether all FREE cells form one 4-connected component.
pub fn free_cells_connected(task: &MazeTask) -> bool {
    let Some(start) = task.grid.iter().position(|&c| c == Cell::Free) else { return true };
    let n = task.size();
    let reached = bfs_distances(task, Pos::new(start / n, start % n)).iter().filter(|d| d.is_some()).count();
    reached == task.free_count()
}

/// Number of 4-adjacent FREE–FREE pairs.
pub fn count_free_edges(task: &MazeTask) -> usize {
    let n = task.size();
    let mut edges = 0;
    for r in 0..n {
        for c in 0..n {
            let p = Pos::new(r, c);
            if !task.is_free(p) {
                continue;
            }
            if c + 1 < n && task.is_free(Pos::new(r, c + 1)) {
                edges += 1;
            }
            if r + 1 < n && task.is_free(Pos::new(r + 1, c)) {
                edges += 1;
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::super::{generate_task, MazeConfig};
    use super::*;

    #[test]
    fn trivial_distances() {
        let task = generate_task(&MazeConfig::default(), 1).unwrap();
        assert_eq!(shortest_path(&task, task.start, task.start).unwrap(), 0);
        let nb = task.start.neighbors(task.size()).find(|&q| task.is_free(q)).unwrap();
        assert_eq!(shortest_path(&task, task.start, nb).unwrap(), 1);
        assert!(shortest_path(&task, task.start, Pos::new(0, 0)).is_err());
    }

    /// Exhaustive simple-path enumeration: on a tree there is exactly one
    /// simple path between two cells and its length is the BFS distance.
    #[test]
    fn tree_paths_are_unique() {
        let cfg = MazeConfig { obstacle_density: 0.55, ..MazeConfig::with_reward(9, 1.0) };
        let task = generate_task(&cfg, 4).unwrap();
        let n = task.size();
        fn dfs(task: &MazeTask, at: Pos, goal: Pos, seen: &mut Vec<bool>, len: usize, found: &mut Vec<usize>) {
            if at == goal {
                found.push(len);
                return;
            }
            let n = task.size();
            for q in at.neighbors(n) {
                if task.is_free(q) && !seen[q.row * n + q.col] {
                    seen[q.row * n + q.col] = true;
                    dfs(task, q, goal, seen, len + 1, found);
                    seen[q.row * n + q.col] = false;
                }
            }
        }
        let free: Vec<Pos> = (0..n * n).map(|i| Pos::new(i / n, i % n)).filter(|&p| task.is_free(p)).collect();
        for &a in &free {
            for &b in &free {
                let mut seen = vec![false; n * n];
                seen[a.row * n + a.col] = true;
                let mut found = Vec::new();
                dfs(&task, a, b, &mut seen, 0, &mut found);
                assert_eq!(found.len(), 1);
                assert_eq!(found[0], shortest_path(&task, a, b).unwrap());
            }
        }
    }
}
