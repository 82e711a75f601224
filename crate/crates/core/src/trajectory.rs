use crate::State;

/// How a sampled path ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Completed,
    /// The path stopped at an estimated singular time `t_est`.
    HitSingularity { t_est: f64 },
    /// The integrator used up its step budget at time `t`.
    StepLimit { t: f64 },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::HitSingularity { .. } => "hit_singularity",
            Status::StepLimit { .. } => "step_limit",
        }
    }
}

/// Sampled states at strictly increasing real times. When the path ends
/// early, only the samples reached before the stop are recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub status: Status,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
