// SPDX-License-Identifier: Apache-2.0

use crate::model::{FnRegistry, ModelError};

use super::exec::{FsmEnv, FsmRun, Step};
use super::fsm::{ApiLevel, TaskFsm};
use super::lower::AddressMap;

/// Tasks of one processor merged under a round-robin scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftwareImage {
    /// In scheduler (declaration) order.
    pub fsms: Vec<TaskFsm>,
    pub level: ApiLevel,
    pub address_map: Option<AddressMap>,
}

pub fn merge_schedule(fsms: Vec<TaskFsm>) -> SoftwareImage {
    let level = if !fsms.is_empty() && fsms.iter().all(|f| f.level == ApiLevel::Micro) {
        ApiLevel::Micro
    } else {
        ApiLevel::Macro
    };
    SoftwareImage { fsms, level, address_map: None }
}

impl SoftwareImage {
    pub fn with_address_map(mut self, m: AddressMap) -> Self {
        self.address_map = Some(m);
        self
    }
}

/// Running scheduler state.
#[derive(Debug, Clone)]
pub struct ImageRun {
    pub runs: Vec<FsmRun>,
    /// Next task the scheduler will offer the processor to.
    pub cursor: usize,
}

impl ImageRun {
    pub fn new(image: &SoftwareImage, limit: Option<u64>) -> ImageRun {
        ImageRun { runs: image.fsms.iter().map(|f| FsmRun::new(f, limit)).collect(), cursor: 0 }
    }

    /// One scheduler round: every task gets one transition, blocked tasks
    /// are skipped.
    pub fn round(
        &mut self,
        image: &SoftwareImage,
        env: &mut dyn FsmEnv,
        registry: &FnRegistry,
    ) -> Result<Vec<Step>, ModelError> {
        let mut out = Vec::with_capacity(self.runs.len());
        for (run, fsm) in self.runs.iter_mut().zip(&image.fsms) {
            out.push(run.step(fsm, env, registry)?);
        }
        Ok(out)
    }

    /// Next task in round-robin order with an enabled transition, advancing
    /// the cursor past it.
    pub fn next_enabled(&mut self, image: &SoftwareImage, env: &dyn FsmEnv) -> Option<(usize, usize)> {
        let n = self.runs.len();
        for k in 0..n {
            let task = (self.cursor + k) % n;
            if let Some(t) = self.runs[task].select(&image.fsms[task], env) {
                self.cursor = (task + 1) % n;
                return Some((task, t));
            }
        }
        None
    }

    pub fn all_done(&self) -> bool {
        self.runs.iter().all(FsmRun::done)
    }
}
