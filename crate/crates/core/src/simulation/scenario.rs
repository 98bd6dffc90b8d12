//! Scenario files.
//!
//! Line oriented. Event lines are `tick | actor | action | args`; `#` starts
//! a comment line. Blob bodies are declared verbatim between `blob <name>`
//! and `end`, and `include <path>` splices another scenario in place, with
//! paths relative to the including file.
//!
//! ```text
//! blob c0
//! target: goal
//! kind: conjecture
//! end
//! 0 | - | genesis | C=100 P=0
//! 1 | C | put | c0
//! 1 | C | submit | c0 file=@c0 filetype=conjecture
//! ```
//!
//! `@name` in blob text and arguments is replaced at execution time by the
//! address of the blob put under that name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data_layer::StatementId;
use crate::incentives::AllocationPolicy;
use crate::ledger::TokenAmount;
use crate::split::Share;
use crate::tcr::{TcrParams, VoteChoice};
use crate::Tick;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{source_name}:{line}: {message}")]
pub struct ScenarioError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MechanismSpec {
    Halving {
        target: StatementId,
        reward: TokenAmount,
        policy: AllocationPolicy,
    },
    Fixed {
        target: StatementId,
        prize: TokenAmount,
        signers: Vec<String>,
        threshold: usize,
        policy: AllocationPolicy,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentSpec {
    Human,
    Ai {
        watch: Vec<StatementId>,
        solvable: Vec<StatementId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Genesis(Vec<(String, TokenAmount)>),
    Tcr(TcrParams),
    Put(String),
    Submit {
        record_id: String,
        fields: Vec<(String, String)>,
    },
    Prelist(String),
    SetHosted {
        file: String,
        hosted: bool,
    },
    Bond(TokenAmount),
    Propose(String),
    Challenge(String),
    Vote(String, VoteChoice),
    Resolve(String),
    Deploy {
        name: String,
        spec: MechanismSpec,
    },
    Approve {
        name: String,
        tree: usize,
    },
    Award {
        name: String,
        tree: usize,
    },
    StakeBranch {
        file: String,
        amount: TokenAmount,
        rho: Option<Share>,
    },
    RegisterAgent(AgentSpec),
    /// Queues a directive for a human agent.
    Script {
        action: Box<Action>,
        name: String,
        args: String,
    },
    /// Steps one agent, or every agent in registration order when the actor
    /// is `*`. `id` names the first contribution an AI emits.
    Step {
        id: Option<String>,
    },
    Snapshot,
    #[cfg(feature = "fault-injection")]
    FaultMint(TokenAmount),
}

impl Action {
    pub fn parse(action: &str, args: &str) -> Result<Action, String> {
        let args = args.trim();
        let words: Vec<&str> = args.split_whitespace().collect();
        let one = |what: &str| -> Result<String, String> {
            match words.as_slice() {
                [w] => Ok(w.to_string()),
                _ => Err(format!("`{action}` takes one {what}")),
            }
        };
        Ok(match action {
            "genesis" => Action::Genesis(
                words
                    .iter()
                    .map(|w| {
                        let (k, v) = kv(w)?;
                        Ok((k.to_string(), num(k, v)?))
                    })
                    .collect::<Result<_, String>>()?,
            ),
            "tcr" => {
                let mut p = TcrParams::default();
                for w in &words {
                    let (k, v) = kv(w)?;
                    match k {
                        "min_bond" => p.min_bond = num(k, v)?,
                        "inclusion" => p.inclusion_stake = num(k, v)?,
                        "dispute" => p.dispute_stake = num(k, v)?,
                        "delay" => p.delay_period = num(k, v)?,
                        "vote" => p.vote_period = num(k, v)?,
                        "share" => p.challenger_share = v.parse().map_err(|e| format!("{e}"))?,
                        _ => return Err(format!("unknown tcr parameter `{k}`")),
                    }
                }
                p.validate().map_err(|e| e.to_string())?;
                Action::Tcr(p)
            }
            "put" => Action::Put(one("blob name")?),
            "submit" => {
                let (record_id, rest) = words.split_first().ok_or("`submit` needs a record id")?;
                let fields = rest
                    .iter()
                    .map(|w| kv(w).map(|(k, v)| (k.to_string(), v.to_string())))
                    .collect::<Result<_, _>>()?;
                Action::Submit {
                    record_id: record_id.to_string(),
                    fields,
                }
            }
            "prelist" => Action::Prelist(one("record id")?),
            "set_hosted" => match words.as_slice() {
                [file, flag] => Action::SetHosted {
                    file: file.to_string(),
                    hosted: flag.parse().map_err(|_| format!("bad flag `{flag}`"))?,
                },
                _ => return Err("`set_hosted` takes a file and true|false".into()),
            },
            "bond" => Action::Bond(num("bond", &one("amount")?)?),
            "propose" => Action::Propose(one("record id")?),
            "challenge" => Action::Challenge(one("record id")?),
            "vote" => match words.as_slice() {
                [rec, "include"] => Action::Vote(rec.to_string(), VoteChoice::Include),
                [rec, "exclude"] => Action::Vote(rec.to_string(), VoteChoice::Exclude),
                _ => return Err("`vote` takes a record id and include|exclude".into()),
            },
            "resolve" => Action::Resolve(one("record id")?),
            "deploy" => parse_deploy(&words)?,
            "approve" | "award" => {
                let (name, rest) = words
                    .split_first()
                    .ok_or_else(|| format!("`{action}` needs a mechanism name"))?;
                let mut tree = 0;
                for w in rest {
                    match kv(w)? {
                        ("tree", v) => tree = num("tree", v)? as usize,
                        (k, _) => return Err(format!("unknown `{action}` field `{k}`")),
                    }
                }
                let name = name.to_string();
                if action == "approve" {
                    Action::Approve { name, tree }
                } else {
                    Action::Award { name, tree }
                }
            }
            "stake_branch" => {
                let (file, rest) = words
                    .split_first()
                    .ok_or("`stake_branch` needs a contribution")?;
                let mut amount = None;
                let mut rho = None;
                for w in rest {
                    match kv(w)? {
                        ("amount", v) => amount = Some(num("amount", v)?),
                        ("rho", v) => rho = Some(v.parse().map_err(|e| format!("{e}"))?),
                        (k, _) => return Err(format!("unknown `stake_branch` field `{k}`")),
                    }
                }
                Action::StakeBranch {
                    file: file.to_string(),
                    amount: amount.ok_or("`stake_branch` needs amount=")?,
                    rho,
                }
            }
            "register_agent" => match words.split_first() {
                Some((&"human", [])) => Action::RegisterAgent(AgentSpec::Human),
                Some((&"ai", rest)) => {
                    let mut watch = Vec::new();
                    let mut solvable = Vec::new();
                    for w in rest {
                        match kv(w)? {
                            ("watch", v) => watch = statements(v)?,
                            ("solvable", v) => solvable = statements(v)?,
                            (k, _) => return Err(format!("unknown agent field `{k}`")),
                        }
                    }
                    Action::RegisterAgent(AgentSpec::Ai { watch, solvable })
                }
                _ => {
                    return Err(
                        "`register_agent` takes `human` or `ai watch=.. solvable=..`".into(),
                    )
                }
            },
            "script" => {
                let (inner, rest) = args.split_once(char::is_whitespace).unwrap_or((args, ""));
                if matches!(inner, "script" | "step" | "register_agent" | "") {
                    return Err(format!("`{inner}` cannot be scripted"));
                }
                Action::Script {
                    action: Box::new(Action::parse(inner, rest)?),
                    name: inner.to_string(),
                    args: rest.trim().to_string(),
                }
            }
            "step" => {
                let mut id = None;
                for w in &words {
                    match kv(w)? {
                        ("id", v) => id = Some(v.to_string()),
                        (k, _) => return Err(format!("unknown `step` field `{k}`")),
                    }
                }
                Action::Step { id }
            }
            "snapshot" if words.is_empty() => Action::Snapshot,
            #[cfg(feature = "fault-injection")]
            "fault" => match words.as_slice() {
                ["mint", n] => Action::FaultMint(num("mint", n)?),
                _ => return Err("`fault` takes `mint <amount>`".into()),
            },
            other => return Err(format!("unknown action `{other}`")),
        })
    }
}

fn parse_deploy(words: &[&str]) -> Result<Action, String> {
    let [name, kind, rest @ ..] = words else {
        return Err("`deploy` takes a name and a kind".into());
    };
    let mut fields = BTreeMap::new();
    for w in rest {
        let (k, v) = kv(w)?;
        fields.insert(k, v);
    }
    let mut take = |k: &str| {
        fields
            .remove(k)
            .ok_or_else(|| format!("`deploy` needs {k}="))
    };
    let target = StatementId::new(take("target")?).map_err(|e| e.to_string())?;
    let policy = match take("policy") {
        Ok(p) => p.parse()?,
        Err(_) => AllocationPolicy::default(),
    };
    let spec = match *kind {
        "halving" => MechanismSpec::Halving {
            target,
            reward: num("reward", take("reward")?)?,
            policy,
        },
        "fixed" => MechanismSpec::Fixed {
            target,
            prize: num("prize", take("prize")?)?,
            signers: take("signers")?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
            threshold: match take("threshold") {
                Ok(t) => num("threshold", t)? as usize,
                Err(_) => 1,
            },
            policy,
        },
        other => return Err(format!("unknown mechanism kind `{other}`")),
    };
    if let Some(k) = fields.keys().next() {
        return Err(format!("unknown `deploy` field `{k}`"));
    }
    Ok(Action::Deploy {
        name: name.to_string(),
        spec,
    })
}

fn kv(word: &str) -> Result<(&str, &str), String> {
    word.split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{word}`"))
}

fn num(key: &str, value: &str) -> Result<u64, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a non-negative integer, got `{value}`"))
}

fn statements(list: &str) -> Result<Vec<StatementId>, String> {
    list.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| StatementId::new(s).map_err(|e| e.to_string()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioEvent {
    pub tick: Tick,
    pub actor: String,
    /// Raw action name and arguments, kept for the event log.
    pub action_name: String,
    pub args: String,
    pub action: Action,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub blobs: BTreeMap<String, String>,
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    /// Reads a scenario file, following includes.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut scenario = Scenario {
            name,
            ..Scenario::default()
        };
        let mut stack = Vec::new();
        scenario.load_into(path, &mut stack)?;
        Ok(scenario)
    }

    /// Parses scenario text. `include` is not available without a file.
    pub fn parse(name: &str, text: &str) -> Result<Scenario, ScenarioError> {
        let mut scenario = Scenario {
            name: name.to_string(),
            ..Scenario::default()
        };
        scenario.parse_into(name, text, None, &mut Vec::new())?;
        Ok(scenario)
    }

    fn load_into(&mut self, path: &Path, stack: &mut Vec<PathBuf>) -> Result<(), ScenarioError> {
        let source_name = path.display().to_string();
        let err = |message: String| ScenarioError {
            source_name: source_name.clone(),
            line: 0,
            message,
        };
        let canonical = path.canonicalize().map_err(|e| err(e.to_string()))?;
        if stack.contains(&canonical) {
            return Err(err("include cycle".into()));
        }
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        stack.push(canonical);
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.parse_into(&source_name, &text, Some(&dir), stack)?;
        stack.pop();
        Ok(())
    }

    fn parse_into(
        &mut self,
        source_name: &str,
        text: &str,
        dir: Option<&Path>,
        stack: &mut Vec<PathBuf>,
    ) -> Result<(), ScenarioError> {
        let err = |line: usize, message: String| ScenarioError {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        while let Some((no, raw)) = lines.next() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix("blob ") {
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(no, format!("bad blob name `{name}`")));
                }
                let mut body = String::new();
                let mut closed = false;
                for (_, l) in lines.by_ref() {
                    if l.trim_end() == "end" {
                        closed = true;
                        break;
                    }
                    body.push_str(l);
                    body.push('\n');
                }
                if !closed {
                    return Err(err(no, format!("blob `{name}` has no `end`")));
                }
                if self.blobs.insert(name.to_string(), body).is_some() {
                    return Err(err(no, format!("blob `{name}` defined twice")));
                }
                continue;
            }
            if let Some(file) = line.strip_prefix("include ") {
                let dir = dir.ok_or_else(|| err(no, "include needs a file context".into()))?;
                self.load_into(&dir.join(file.trim()), stack)?;
                continue;
            }

            let parts: Vec<&str> = line.splitn(4, '|').map(str::trim).collect();
            let [tick, actor, action_name, rest @ ..] = parts.as_slice() else {
                return Err(err(no, "expected `tick | actor | action | args`".into()));
            };
            let args = rest.first().copied().unwrap_or("");
            let tick: Tick = tick
                .parse()
                .map_err(|_| err(no, format!("bad tick `{tick}`")))?;
            if let Some(last) = self.events.last() {
                if tick < last.tick {
                    return Err(err(no, format!("tick {tick} goes back from {}", last.tick)));
                }
            }
            if actor.is_empty() || actor.contains(char::is_whitespace) {
                return Err(err(no, format!("bad actor `{actor}`")));
            }
            let action = Action::parse(action_name, args).map_err(|m| err(no, m))?;
            self.events.push(ScenarioEvent {
                tick,
                actor: actor.to_string(),
                action_name: action_name.to_string(),
                args: args.to_string(),
                action,
            });
        }
        Ok(())
    }

    pub fn last_tick(&self) -> Tick {
        self.events.last().map_or(0, |e| e.tick)
    }
}
