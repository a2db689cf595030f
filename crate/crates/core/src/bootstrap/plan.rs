//! Declarative stage plans.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::TaskTarget;

/// How a stage chooses its actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CollectorSpec {
    /// Uniform random endpoints for every phase.
    Random,
    /// The policy fitted on the stage's own training composition; phases
    /// without a model act at random.
    Policy,
    /// Grasp with an earlier stage's policy, stack at random. `grasp_from`
    /// names a stage, or a group whose best-evaluated member is used.
    Hybrid { grasp_from: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    SuccessCount(usize),
    EpisodeCount(usize),
}

/// `count` successful episodes from stage `source`. Unbalanced parts take the
/// first `count`; balanced parts take the `count` episodes farthest from the
/// union of the unbalanced parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionPart {
    pub source: String,
    pub count: usize,
    #[serde(default)]
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub id: String,
    /// Variants of the same stage share a group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub collector: CollectorSpec,
    pub target: TaskTarget,
    pub stop: StopRule,
    #[serde(default)]
    pub training: Vec<CompositionPart>,
}

impl StageSpec {
    /// Stages or groups this one reads from.
    pub fn dependencies(&self) -> Vec<&str> {
        let mut deps: Vec<&str> = self.training.iter().map(|p| p.source.as_str()).collect();
        if let CollectorSpec::Hybrid { grasp_from } = &self.collector {
            deps.push(grasp_from);
        }
        deps
    }

    pub fn group_name(&self) -> &str {
        self.group.as_deref().unwrap_or(&self.id)
    }
}

fn part(source: &str, count: usize, balanced: bool) -> CompositionPart {
    CompositionPart {
        source: source.into(),
        count,
        balanced,
    }
}

fn stage(
    id: &str,
    group: Option<&str>,
    collector: CollectorSpec,
    target: TaskTarget,
    stop: StopRule,
    training: Vec<CompositionPart>,
) -> StageSpec {
    StageSpec {
        id: id.into(),
        group: group.map(Into::into),
        collector,
        target,
        stop,
        training,
    }
}

/// The six-stage plan: random grasping, a first grasp policy, three
/// composition variants of the second, a hybrid full-task stage grasping
/// with the best of those, a composed full-task policy, and three variants
/// of the last.
pub fn default_plan() -> Vec<StageSpec> {
    use CollectorSpec::*;
    use StopRule::*;
    use TaskTarget::*;
    vec![
        stage("S1", None, Random, Subtask1, SuccessCount(100), vec![]),
        stage("S2", None, Policy, Subtask1, SuccessCount(50), vec![part("S1", 50, false)]),
        stage(
            "S3-12",
            Some("S3"),
            Policy,
            Subtask1,
            EpisodeCount(100),
            vec![part("S1", 50, false), part("S2", 50, false)],
        ),
        stage(
            "S3-12E",
            Some("S3"),
            Policy,
            Subtask1,
            EpisodeCount(100),
            vec![part("S1", 50, true), part("S2", 50, false)],
        ),
        stage("S3-1", Some("S3"), Policy, Subtask1, EpisodeCount(100), vec![part("S1", 100, false)]),
        stage(
            "S4",
            None,
            Hybrid {
                grasp_from: "S3".into(),
            },
            Full,
            SuccessCount(100),
            vec![],
        ),
        stage("S5", None, Policy, Full, SuccessCount(50), vec![part("S4", 50, false)]),
        stage(
            "S6-45",
            Some("S6"),
            Policy,
            Full,
            EpisodeCount(200),
            vec![part("S4", 50, false), part("S5", 50, false)],
        ),
        stage(
            "S6-45E",
            Some("S6"),
            Policy,
            Full,
            EpisodeCount(200),
            vec![part("S4", 50, true), part("S5", 50, false)],
        ),
        stage("S6-4", Some("S6"), Policy, Full, EpisodeCount(200), vec![part("S4", 100, false)]),
    ]
}

/// Check ids, counts and that every reference names an earlier stage or group.
pub fn validate_plan(plan: &[StageSpec]) -> Result<()> {
    if plan.is_empty() {
        return Err(Error::validation("plan", "must contain at least one stage"));
    }
    let mut ids = HashSet::new();
    let mut names = HashSet::new();
    for (i, s) in plan.iter().enumerate() {
        let field = |f: &str| format!("plan[{i}].{f}");
        let valid_id = !s.id.is_empty()
            && s
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid_id {
            return Err(Error::validation(field("id"), format!("`{}` must be non-empty [A-Za-z0-9_-]", s.id)));
        }
        if !ids.insert(s.id.clone()) {
            return Err(Error::validation(field("id"), format!("duplicate stage id `{}`", s.id)));
        }
        let (StopRule::SuccessCount(n) | StopRule::EpisodeCount(n)) = s.stop;
        if n == 0 {
            return Err(Error::validation(field("stop"), "count must be positive"));
        }
        match &s.collector {
            CollectorSpec::Random | CollectorSpec::Hybrid { .. } if !s.training.is_empty() => {
                return Err(Error::validation(field("training"), "only policy stages train"));
            }
            CollectorSpec::Policy if s.training.is_empty() => {
                return Err(Error::validation(field("training"), "a policy stage needs a training composition"));
            }
            _ => {}
        }
        if !s.training.is_empty() && s.training.iter().all(|p| p.balanced) {
            return Err(Error::validation(
                field("training"),
                "balanced parts need at least one unbalanced part to balance against",
            ));
        }
        for (j, p) in s.training.iter().enumerate() {
            if p.count == 0 {
                return Err(Error::validation(field(&format!("training[{j}].count")), "must be positive"));
            }
            if !ids.contains(&p.source) || p.source == s.id {
                return Err(Error::validation(
                    field(&format!("training[{j}].source")),
                    format!("`{}` is not an earlier stage", p.source),
                ));
            }
        }
        if let CollectorSpec::Hybrid { grasp_from } = &s.collector {
            if !names.contains(grasp_from) || grasp_from == &s.id {
                return Err(Error::validation(
                    field("collector.grasp_from"),
                    format!("`{grasp_from}` is not an earlier stage or group"),
                ));
            }
        }
        names.insert(s.id.clone());
        if let Some(g) = &s.group {
            names.insert(g.clone());
        }
    }
    Ok(())
}
