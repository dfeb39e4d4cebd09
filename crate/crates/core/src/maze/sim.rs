use serde::{Deserialize, Serialize};

use super::{ActionId, Heading, MazeError, MazeTask, Pos, TaskType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub cell: Pos,
    pub heading: Heading,
    pub step_index: usize,
    pub command_index: usize,
    pub accumulated_reward: f64,
    pub done: bool,
}

impl SimState {
    pub fn initial(task: &MazeTask) -> Self {
        SimState {
            cell: task.start,
            heading: task.start_heading,
            step_index: 0,
            command_index: 0,
            accumulated_reward: 0.0,
            done: false,
        }
    }

    pub fn command(&self, task: &MazeTask) -> u8 {
        task.command(self.command_index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub moved: bool,
    pub blocked: bool,
    /// Color of the commanded PNT reached this step (NAVIGATION).
    pub reached: Option<u8>,
    /// Index of the PNT entered this step, if any.
    pub entered_pnt: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    pub reward: f64,
    pub events: StepEvents,
}

/// Advances one step. Entering a PNT cell means arriving from another cell,
/// so staying put never re-triggers a reward.
pub fn step(task: &MazeTask, state: &SimState, action: ActionId) -> Result<StepOutcome, MazeError> {
    if state.done {
        return Err(MazeError::Finished(state.step_index));
    }
    let n = task.size();
    let mut next = state.clone();
    let mut events = StepEvents::default();

    let move_dir = match action {
        ActionId::Forward => Some(state.heading),
        ActionId::Backward => Some(state.heading.reverse()),
        ActionId::TurnLeft => {
            next.heading = state.heading.left();
            None
        }
        ActionId::TurnRight => {
            next.heading = state.heading.right();
            None
        }
        ActionId::Stop => None,
    };
    if let Some(dir) = move_dir {
        match state.cell.offset(dir, n).filter(|&p| task.is_free(p)) {
            Some(p) => {
                next.cell = p;
                events.moved = true;
            }
            None => events.blocked = true,
        }
    }

    let mut reward = -task.config.step_cost;
    if events.moved {
        if let Some(idx) = task.pnt_at(next.cell) {
            events.entered_pnt = Some(idx);
            let pnt = &task.pnts[idx];
            match task.config.task_type {
                TaskType::Navigation => {
                    if pnt.color == state.command(task) {
                        reward += task.config.reach_reward;
                        events.reached = Some(pnt.color);
                        next.command_index += 1;
                    }
                }
                TaskType::Survival => reward += pnt.hidden_reward,
            }
        }
    }

    next.step_index += 1;
    next.accumulated_reward += reward;
    next.done = next.step_index >= task.config.episode_len;
    Ok(StepOutcome { state: next, reward, events })
}

#[cfg(test)]
mod tests {
    use super::super::{generate_task, path::bfs_distances, Cell, MazeConfig};
    use super::*;
    use proptest::prelude::*;

    fn task() -> MazeTask {
        generate_task(&MazeConfig::default(), 5).unwrap()
    }

    fn facing_wall(task: &MazeTask) -> SimState {
        let n = task.size();
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                let p = Pos::new(r, c);
                if !task.is_free(p) {
                    continue;
                }
                for h in Heading::ALL {
                    if task.cell(p.offset(h, n).unwrap()) == Cell::Wall {
                        return SimState { cell: p, heading: h, ..SimState::initial(task) };
                    }
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn blocked_forward_is_a_no_op() {
        let t = task();
        let s = facing_wall(&t);
        let out = step(&t, &s, ActionId::Forward).unwrap();
        assert_eq!(out.state.cell, s.cell);
        assert_eq!(out.reward, 0.0);
        assert!(out.events.blocked);
    }

    #[test]
    fn stop_only_advances_the_clock() {
        let t = task();
        let s = SimState::initial(&t);
        let out = step(&t, &s, ActionId::Stop).unwrap();
        assert_eq!(out.state, SimState { step_index: 1, ..s });
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn reaching_commanded_pnt_pays_and_advances() {
        let t = task();
        let color = t.command(0);
        let target = t.pnt_by_color(color).unwrap().pos;
        let n = t.size();
        // approach from any free neighbour, facing the target
        let (from, h) = Heading::ALL
            .into_iter()
            .filter_map(|h| target.offset(h.reverse(), n).map(|p| (p, h)))
            .find(|(p, _)| t.is_free(*p) && t.pnt_at(*p).is_none())
            .unwrap();
        let s = SimState { cell: from, heading: h, ..SimState::initial(&t) };
        let out = step(&t, &s, ActionId::Forward).unwrap();
        assert_eq!(out.reward, 0.57);
        assert_eq!(out.events.reached, Some(color));
        assert_eq!(out.state.command_index, 1);
        assert_ne!(out.state.command(&t), color);
    }

    #[test]
    fn step_cost_is_charged() {
        let cfg = MazeConfig { step_cost: 0.01, ..MazeConfig::default() };
        let t = generate_task(&cfg, 5).unwrap();
        let out = step(&t, &SimState::initial(&t), ActionId::Stop).unwrap();
        assert_eq!(out.reward, -0.01);
    }

    #[test]
    fn survival_rewards_fire_on_entry_only() {
        let cfg = MazeConfig { task_type: TaskType::Survival, ..MazeConfig::default() };
        let t = generate_task(&cfg, 5).unwrap();
        let p = &t.pnts[0];
        let n = t.size();
        let (from, h) = Heading::ALL
            .into_iter()
            .filter_map(|h| p.pos.offset(h.reverse(), n).map(|q| (q, h)))
            .find(|(q, _)| t.is_free(*q) && t.pnt_at(*q).is_none())
            .unwrap();
        let s = SimState { cell: from, heading: h, ..SimState::initial(&t) };
        let enter = step(&t, &s, ActionId::Forward).unwrap();
        assert_eq!(enter.reward, p.hidden_reward);
        let stay = step(&t, &enter.state, ActionId::Stop).unwrap();
        assert_eq!(stay.reward, 0.0);
        let leave = step(&t, &stay.state, ActionId::Backward).unwrap();
        let again = step(&t, &leave.state, ActionId::Forward).unwrap();
        assert_eq!(again.reward, p.hidden_reward);
        assert_eq!(again.state.command_index, 0);
    }

    #[test]
    fn episode_ends_and_rejects_further_steps() {
        let cfg = MazeConfig { episode_len: 3, ..MazeConfig::default() };
        let t = generate_task(&cfg, 1).unwrap();
        let mut s = SimState::initial(&t);
        for _ in 0..3 {
            s = step(&t, &s, ActionId::Stop).unwrap().state;
        }
        assert!(s.done);
        assert_eq!(step(&t, &s, ActionId::Stop), Err(MazeError::Finished(3)));
    }

    proptest! {
        #[test]
        fn replay_accounting_and_invariants(seed in 0u64..200, actions in prop::collection::vec(0u8..5, 1..300)) {
            let t = generate_task(&MazeConfig::default(), seed).unwrap();
            let dist = bfs_distances(&t, t.start);
            let mut s = SimState::initial(&t);
            let mut total = 0.0;
            let mut last_reach = None;
            for a in actions {
                let out = step(&t, &s, ActionId::try_from(a).unwrap()).unwrap();
                total += out.reward;
                prop_assert!(t.is_free(out.state.cell));
                prop_assert!(dist[out.state.cell.row * t.size() + out.state.cell.col].is_some());
                if let Some(c) = out.events.reached {
                    prop_assert_ne!(Some(c), last_reach);
                    prop_assert_ne!(out.state.command(&t), c);
                    last_reach = Some(c);
                }
                s = out.state;
            }
            prop_assert_eq!(s.accumulated_reward, total);
        }

        #[test]
        fn forward_then_backward_restores_pose(seed in 0u64..100, turns in 0usize..4) {
            let t = generate_task(&MazeConfig::default(), seed).unwrap();
            let mut s = SimState::initial(&t);
            for _ in 0..turns {
                s = step(&t, &s, ActionId::TurnLeft).unwrap().state;
            }
            let fwd = step(&t, &s, ActionId::Forward).unwrap();
            prop_assume!(fwd.events.moved);
            let back = step(&t, &fwd.state, ActionId::Backward).unwrap();
            prop_assert_eq!(back.state.cell, s.cell);
            prop_assert_eq!(back.state.heading, s.heading);
        }
    }
}
