use super::{StreamError, StreamState};
use crate::model::WaitK;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Read,
    Write,
}

/// WRITE when enough source has been read for the next target step
/// (src_read >= k + t - 1) or when there is nothing left to read.
pub fn policy_action(state: &StreamState, k: WaitK) -> Result<Action, StreamError> {
    if state.finished {
        return Err(StreamError::Finished);
    }
    if state.src_exhausted {
        return Ok(Action::Write);
    }
    let t = state.next_target_step();
    let needed = match k {
        WaitK::Unbounded => usize::MAX,
        WaitK::Bounded(k) => k.saturating_add(t - 1),
    };
    Ok(if state.src_read.len() >= needed {
        Action::Write
    } else {
        Action::Read
    })
}
