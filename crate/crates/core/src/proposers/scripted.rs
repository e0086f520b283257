//! A source that replays fixed candidate lists.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::{ProposalError, ProposalRequest, ProposalSource};

/// `lines[i][k]` is offered as attempt `k` of line `i`. A line with no more
/// candidates ends that line's sampling; asking for a line past the script
/// yields nothing, so run it with `max_lines = lines.len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedSource {
    pub lines: Vec<Vec<String>>,
}

impl ScriptedSource {
    pub fn new<I, L, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            lines: lines
                .into_iter()
                .map(|l| l.into_iter().map(Into::into).collect())
                .collect(),
        }
    }
}

impl ProposalSource for ScriptedSource {
    fn next_candidate(
        &mut self,
        request: &ProposalRequest<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<String>, ProposalError> {
        Ok(self
            .lines
            .get(request.line_index)
            .and_then(|l| l.get(request.attempt))
            .cloned())
    }
}
