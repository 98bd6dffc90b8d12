use std::collections::{BTreeSet, VecDeque};

use crate::data_layer::StatementId;
use crate::ledger::AccountId;
use crate::Tick;

use super::{Action, AgentSpec, World};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentKind {
    /// Executes queued directives, one per step.
    Human,
    /// Tries every open statement under its watched targets and closes the
    /// ones in `solvable`.
    Ai {
        watch: Vec<StatementId>,
        solvable: BTreeSet<StatementId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub tick: Tick,
    pub statement: StatementId,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub account: AccountId,
    pub kind: AgentKind,
    /// Pending directives: action, raw name and raw args.
    pub directives: VecDeque<(Action, String, String)>,
    pub attempts: Vec<Attempt>,
}

impl Agent {
    pub fn new(account: AccountId, spec: &AgentSpec) -> Self {
        let kind = match spec {
            AgentSpec::Human => AgentKind::Human,
            AgentSpec::Ai { watch, solvable } => AgentKind::Ai {
                watch: watch.clone(),
                solvable: solvable.iter().cloned().collect(),
            },
        };
        Agent {
            account,
            kind,
            directives: VecDeque::new(),
            attempts: Vec::new(),
        }
    }
}

pub(super) enum Planned {
    Directive(Action, String, String),
    Close {
        statement: StatementId,
        name: String,
        text: String,
    },
    Fail {
        statement: StatementId,
    },
}

/// What `account` does when stepped in the current world. `closures`
/// numbers the contributions emitted so far in this step, for naming.
pub(super) fn plan(
    world: &World,
    account: &AccountId,
    id: Option<&str>,
    closures: &mut usize,
) -> Vec<Planned> {
    let Some(agent) = world.agent(account) else {
        return Vec::new();
    };
    match &agent.kind {
        AgentKind::Human => agent
            .directives
            .front()
            .map(|(a, n, r)| Planned::Directive(a.clone(), n.clone(), r.clone()))
            .into_iter()
            .collect(),
        AgentKind::Ai { watch, solvable } => {
            let mut seen = BTreeSet::new();
            let mut open = Vec::new();
            for target in watch {
                for s in world.dag.gap_frontier(target).unwrap_or_default() {
                    if seen.insert(s.clone()) {
                        open.push(s);
                    }
                }
            }
            open.into_iter()
                .map(|statement| {
                    if !solvable.contains(&statement) {
                        return Planned::Fail { statement };
                    }
                    let name = match (id, *closures) {
                        (Some(id), 0) => id.to_string(),
                        (Some(id), k) => format!("{id}.{k}"),
                        (None, k) => format!("{account}-{}-{k}", world.now),
                    };
                    *closures += 1;
                    let mut text = format!("target: {statement}\nkind: complete\n");
                    if let Some(addr) = world
                        .dag
                        .statement(&statement)
                        .and_then(|info| info.introduced_by)
                    {
                        text.push_str(&format!("imports: {addr}\n"));
                    }
                    text.push_str(&format!("# closed automatically by {account}\n"));
                    Planned::Close {
                        statement,
                        name,
                        text,
                    }
                })
                .collect()
        }
    }
}
