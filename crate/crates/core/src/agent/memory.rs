use std::collections::VecDeque;

use rand::Rng;

use crate::maze::Pos;
use crate::render::{CellClass, VisibleSet};

/// Number of recent observations held in short-term memory.
pub const STM_SLOTS: usize = 3;

/// Map knowledge of a privileged agent.
///
/// STM keeps the last [`STM_SLOTS`] visible sets verbatim. Each time a set
/// enters STM, every cell in it is copied into LTM independently with
/// probability `p_transfer`; LTM entries are never forgotten.
#[derive(Debug, Clone)]
pub struct OccupancyMemory {
    size: usize,
    p_transfer: f64,
    ltm: Vec<Option<CellClass>>,
    ltm_known: usize,
    stm: VecDeque<VisibleSet>,
}

impl OccupancyMemory {
    pub fn new(size: usize, p_transfer: f64) -> Self {
        assert!((0.0..=1.0).contains(&p_transfer), "p_transfer must lie in [0, 1]");
        OccupancyMemory { size, p_transfer, ltm: vec![None; size * size], ltm_known: 0, stm: VecDeque::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn p_transfer(&self) -> f64 {
        self.p_transfer
    }

    pub fn observe(&mut self, visible: VisibleSet, rng: &mut impl Rng) {
        for &(p, class) in visible.iter() {
            // draw for every cell so the stream position does not depend on LTM contents
            let transfer = rng.random::<f64>() < self.p_transfer;
            let slot = &mut self.ltm[p.row * self.size + p.col];
            if transfer && slot.is_none() {
                *slot = Some(class);
                self.ltm_known += 1;
            }
        }
        self.stm.push_back(visible);
        while self.stm.len() > STM_SLOTS {
            self.stm.pop_front();
        }
    }

    pub fn stm(&self) -> impl Iterator<Item = &VisibleSet> {
        self.stm.iter()
    }

    pub fn ltm(&self, p: Pos) -> Option<CellClass> {
        self.ltm[p.row * self.size + p.col]
    }

    pub fn ltm_known_count(&self) -> usize {
        self.ltm_known
    }

    /// STM ∪ LTM as a dense row-major map.
    pub fn known_map(&self) -> Vec<Option<CellClass>> {
        let mut map = self.ltm.clone();
        for set in &self.stm {
            for &(p, class) in set.iter() {
                map[p.row * self.size + p.col] = Some(class);
            }
        }
        map
    }
}
