use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Assessment;
use crate::error::{Error, Result};
use crate::posterior::{BetaPosterior, DirichletPosterior};
use crate::strategies::ArmBelief;
use crate::task::OutcomeKind;

/// Full belief snapshots are attached every this many steps.
pub const FULL_SNAPSHOT_EVERY: usize = 100;

/// Posterior parameters of the slot a step updated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Snapshot {
    Beta(BetaPosterior),
    Dirichlet(DirichletPosterior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based step index.
    pub i: usize,
    /// Partition group of the arm pulled (the class for class-level arms).
    pub group: usize,
    pub id: String,
    pub z: usize,
    pub post: Snapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<Vec<ArmBelief>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    Budget,
    Stopped,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub run: usize,
    pub seed: u64,
    pub config_digest: String,
    pub steps: Vec<Step>,
    pub terminal: Option<TerminalReason>,
}

#[derive(Serialize, Deserialize)]
struct EndLine {
    end: TerminalReason,
    steps: usize,
    seed: u64,
    #[serde(default)]
    run: usize,
    #[serde(default)]
    config: String,
}

/// Applies outcome `z` to `slot` of `belief`, returning the updated slot.
pub(crate) fn apply_outcome(
    belief: &mut ArmBelief,
    slot: usize,
    outcome: OutcomeKind,
    z: usize,
) -> Result<Snapshot> {
    let check = |limit: usize| {
        if z < limit {
            Ok(())
        } else {
            Err(Error::OutcomeRange { outcome: z, limit })
        }
    };
    match (belief, outcome) {
        (ArmBelief::Accuracy(p), OutcomeKind::Correctness) => {
            check(2)?;
            *p = p.update(z == 1);
            Ok(Snapshot::Beta(*p))
        }
        (ArmBelief::Calibration(c), OutcomeKind::Correctness) => {
            check(2)?;
            let p = &mut c.bins[slot];
            *p = p.update(z == 1);
            Ok(Snapshot::Beta(*p))
        }
        (ArmBelief::Confusion(d), OutcomeKind::TrueClass) => {
            check(d.dim())?;
            *d = d.update(z)?;
            Ok(Snapshot::Dirichlet(d.clone()))
        }
        _ => Err(Error::InvalidConfig("outcome kind does not fit the arm belief".into())),
    }
}

impl Trajectory {
    /// Rebuilds the final beliefs from the priors and the recorded outcomes.
    pub fn replay(&self, assessment: &Assessment) -> Result<Vec<ArmBelief>> {
        self.replay_with(assessment, |_, _| {})
    }

    /// Replays step by step, calling `visit` with the beliefs after each step.
    pub fn replay_with(
        &self,
        assessment: &Assessment,
        mut visit: impl FnMut(&Step, &[ArmBelief]),
    ) -> Result<Vec<ArmBelief>> {
        let mut beliefs = assessment.priors().to_vec();
        let mut seen = HashSet::new();
        let outcome = assessment.config().outcome();
        for (n, step) in self.steps.iter().enumerate() {
            let bad = |m: String| Error::InvalidParameter(format!("step {}: {m}", step.i));
            if step.i != n + 1 {
                return Err(bad(format!("expected index {}", n + 1)));
            }
            if !seen.insert(step.id.as_str()) {
                return Err(Error::AlreadyQueried(step.id.clone()));
            }
            let record = assessment
                .pool()
                .index_of(&step.id)
                .ok_or_else(|| Error::UnknownRecord(step.id.clone()))?;
            let (arm, slot) = assessment
                .placement(record)
                .ok_or_else(|| bad(format!("record `{}` belongs to no arm", step.id)))?;
            if assessment.arms()[arm].group != step.group {
                return Err(bad(format!("record `{}` is not in group {}", step.id, step.group)));
            }
            apply_outcome(&mut beliefs[arm], slot, outcome, step.z)?;
            visit(step, &beliefs);
        }
        Ok(beliefs)
    }
}

/// One JSON object per step, then an `end` line per finished run. Steps
/// carry a `run` field when more than one trajectory is written.
pub fn write_trajectories<W: Write>(trajectories: &[Trajectory], mut out: W) -> Result<()> {
    let tag = trajectories.len() > 1;
    for t in trajectories {
        for step in &t.steps {
            write_step(&mut out, step, tag.then_some(t.run))?;
        }
        if let Some(end) = t.terminal {
            let line = EndLine {
                end,
                steps: t.steps.len(),
                seed: t.seed,
                run: t.run,
                config: t.config_digest.clone(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TaggedStep<'a> {
    #[serde(flatten)]
    step: &'a Step,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<usize>,
}

pub fn write_step<W: Write>(out: &mut W, step: &Step, run: Option<usize>) -> Result<()> {
    serde_json::to_writer(&mut *out, &TaggedStep { step, run })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Parses the format written by [`write_trajectories`], ordered by run.
pub fn read_trajectories<R: BufRead>(input: R) -> Result<Vec<Trajectory>> {
    let mut runs: BTreeMap<usize, Trajectory> = BTreeMap::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |e: serde_json::Error| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        };
        let mut value: Value = serde_json::from_str(&line).map_err(parse)?;
        if value.get("end").is_some() {
            let end: EndLine = serde_json::from_value(value).map_err(parse)?;
            let t = runs.entry(end.run).or_default();
            t.run = end.run;
            t.seed = end.seed;
            t.config_digest = end.config;
            t.terminal = Some(end.end);
            continue;
        }
        let run = match value.as_object_mut().and_then(|m| m.remove("run")) {
            Some(r) => r.as_u64().ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "run must be an integer".into(),
            })? as usize,
            None => 0,
        };
        let step: Step = serde_json::from_value(value).map_err(parse)?;
        let t = runs.entry(run).or_default();
        t.run = run;
        t.steps.push(step);
    }
    Ok(runs.into_values().collect())
}
