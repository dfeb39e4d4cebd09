use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::memory::OccupancyMemory;
use crate::maze::{ActionId, Heading, Pos};
use crate::render::{CellClass, VisibleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMode {
    Explore,
    Exploit,
    /// No reachable frontier and no known target: left-hand wall following.
    WallFollow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub mode: PlanMode,
    /// Cell the plan heads for (target PNT or frontier).
    pub goal: Option<Pos>,
    /// Next cell on the planned path.
    pub waypoint: Option<Pos>,
    /// Actions that reach `waypoint` from the current pose.
    pub queue: Vec<ActionId>,
}

/// Rule-based reference policy over [`OccupancyMemory`].
///
/// It reads only its own memory, its pose and the commanded color. Plans are
/// rebuilt every step because memory changes every step.
#[derive(Debug, Clone)]
pub struct PrivilegedAgent {
    memory: OccupancyMemory,
    plan: Option<AgentPlan>,
    just_turned_left: bool,
}

impl PrivilegedAgent {
    pub fn new(size: usize, p_transfer: f64) -> Self {
        PrivilegedAgent { memory: OccupancyMemory::new(size, p_transfer), plan: None, just_turned_left: false }
    }

    pub fn memory(&self) -> &OccupancyMemory {
        &self.memory
    }

    pub fn last_plan(&self) -> Option<&AgentPlan> {
        self.plan.as_ref()
    }

    pub fn observe(&mut self, visible: VisibleSet, rng: &mut impl Rng) {
        self.memory.observe(visible, rng);
    }

    pub fn act(&mut self, pose: Pos, heading: Heading, command: u8) -> ActionId {
        let n = self.memory.size();
        let known = self.memory.known_map();
        let passable = |p: Pos| known[p.row * n + p.col].is_some_and(CellClass::passable);

        // BFS over known-passable cells
        let mut parent: Vec<Option<Pos>> = vec![None; n * n];
        let mut dist: Vec<u32> = vec![u32::MAX; n * n];
        dist[pose.row * n + pose.col] = 0;
        let mut order = vec![pose];
        let mut queue = VecDeque::from([pose]);
        while let Some(p) = queue.pop_front() {
            for q in p.neighbors(n) {
                let i = q.row * n + q.col;
                if dist[i] == u32::MAX && passable(q) {
                    dist[i] = dist[p.row * n + p.col] + 1;
                    parent[i] = Some(p);
                    order.push(q);
                    queue.push_back(q);
                }
            }
        }

        let target = (0..n * n)
            .find(|&i| known[i] == Some(CellClass::Pnt(command)))
            .map(|i| Pos::new(i / n, i % n))
            .filter(|t| dist[t.row * n + t.col] != u32::MAX && *t != pose);

        let (mode, goal) = match target {
            Some(t) => (PlanMode::Exploit, Some(t)),
            None => {
                let is_frontier = |p: Pos| p.neighbors(n).any(|q| known[q.row * n + q.col].is_none());
                let frontier = order
                    .iter()
                    .copied()
                    .filter(|&p| is_frontier(p))
                    .min_by_key(|p| (dist[p.row * n + p.col], p.row, p.col));
                match frontier {
                    Some(f) => (PlanMode::Explore, Some(f)),
                    None => (PlanMode::WallFollow, None),
                }
            }
        };

        let action = match goal {
            Some(g) if g == pose => {
                // standing on the frontier: step into an unknown neighbour
                let dir = [heading, heading.left(), heading.right(), heading.reverse()]
                    .into_iter()
                    .find(|&h| pose.offset(h, n).is_some_and(|q| known[q.row * n + q.col].is_none()))
                    .expect("frontier cell has an unknown neighbour");
                let step = pose.offset(dir, n).unwrap();
                let queue = actions_toward(pose, heading, step, n);
                self.plan = Some(AgentPlan { mode, goal, waypoint: Some(step), queue: queue.clone() });
                self.just_turned_left = false;
                queue[0]
            }
            Some(g) => {
                let mut step = g;
                while let Some(prev) = parent[step.row * n + step.col] {
                    if prev == pose {
                        break;
                    }
                    step = prev;
                }
                let queue = actions_toward(pose, heading, step, n);
                self.plan = Some(AgentPlan { mode, goal, waypoint: Some(step), queue: queue.clone() });
                self.just_turned_left = false;
                queue[0]
            }
            None => {
                let open = |h: Heading| pose.offset(h, n).is_some_and(passable);
                let a = if !self.just_turned_left && open(heading.left()) {
                    ActionId::TurnLeft
                } else if open(heading) {
                    ActionId::Forward
                } else {
                    ActionId::TurnRight
                };
                self.just_turned_left = a == ActionId::TurnLeft;
                self.plan = Some(AgentPlan { mode, goal: None, waypoint: None, queue: vec![a] });
                a
            }
        };
        action
    }
}

/// Turn/move sequence that moves from `pose` into the adjacent cell `to`.
fn actions_toward(pose: Pos, heading: Heading, to: Pos, n: usize) -> Vec<ActionId> {
    let dir = Heading::ALL
        .into_iter()
        .find(|&h| pose.offset(h, n) == Some(to))
        .expect("waypoint is adjacent");
    if dir == heading {
        vec![ActionId::Forward]
    } else if dir == heading.reverse() {
        vec![ActionId::Backward]
    } else if dir == heading.left() {
        vec![ActionId::TurnLeft, ActionId::Forward]
    } else {
        vec![ActionId::TurnRight, ActionId::Forward]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{generate_task, MazeConfig, SimState};
    use crate::render::{visible_cells, VisibleSet};
    use crate::rng;

    #[test]
    fn initial_memory_explores_next_to_agent() {
        let mut agent = PrivilegedAgent::new(15, 1.0);
        let pose = Pos::new(7, 7);
        let only_self = VisibleSet { cells: vec![(pose, CellClass::Free)] };
        agent.observe(only_self, &mut rng::stream(0, 0));
        assert_eq!(agent.act(pose, Heading::N, 3), ActionId::Forward);
        let plan = agent.last_plan().unwrap();
        assert_eq!(plan.mode, PlanMode::Explore);
        assert_eq!(plan.goal, Some(pose));
        assert_eq!(plan.waypoint, Some(Pos::new(6, 7)));

        let mut agent = PrivilegedAgent::new(15, 1.0);
        let north = Pos::new(6, 7);
        let mut cells = vec![(north, CellClass::Free), (pose, CellClass::Free)];
        cells.extend([Pos::new(7, 6), Pos::new(7, 8), Pos::new(8, 7)].map(|p| (p, CellClass::Wall)));
        cells.sort_by_key(|c| c.0);
        let set = VisibleSet { cells };
        agent.observe(set, &mut rng::stream(0, 0));
        assert_eq!(agent.act(pose, Heading::N, 3), ActionId::Forward);
        let plan = agent.last_plan().unwrap();
        assert_eq!(plan.mode, PlanMode::Explore);
        assert_eq!(plan.goal, Some(north));
    }

    #[test]
    fn exploits_target_directly_ahead() {
        let task = generate_task(&MazeConfig::default(), 3).unwrap();
        let n = task.size();
        let pnt = &task.pnts[0];
        let (from, h) = Heading::ALL
            .into_iter()
            .filter_map(|h| pnt.pos.offset(h.reverse(), n).map(|p| (p, h)))
            .find(|(p, _)| task.is_free(*p))
            .unwrap();
        let mut agent = PrivilegedAgent::new(n, 1.0);
        let state = SimState { cell: from, heading: h, ..SimState::initial(&task) };
        agent.observe(visible_cells(&task, &state), &mut rng::stream(0, 0));
        assert_eq!(agent.act(from, h, pnt.color), ActionId::Forward);
        assert_eq!(agent.last_plan().unwrap().mode, PlanMode::Exploit);
    }

    #[test]
    fn toward_each_direction() {
        let p = Pos::new(3, 3);
        assert_eq!(actions_toward(p, Heading::N, Pos::new(2, 3), 7), vec![ActionId::Forward]);
        assert_eq!(actions_toward(p, Heading::N, Pos::new(4, 3), 7), vec![ActionId::Backward]);
        assert_eq!(actions_toward(p, Heading::N, Pos::new(3, 2), 7)[0], ActionId::TurnLeft);
        assert_eq!(actions_toward(p, Heading::N, Pos::new(3, 4), 7)[0], ActionId::TurnRight);
    }
}
