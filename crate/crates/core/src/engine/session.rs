use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::stopping::{check_stopping, StopTruth};
use super::trajectory::{apply_outcome, Step, TerminalReason, Trajectory, FULL_SNAPSHOT_EVERY};
use super::{Assessment, Oracle};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, splitmix64, SessionRng};
use crate::strategies::{select, ArmBelief};
use crate::task::OutcomeKind;

/// Mixed into the seed of the stopping-rule stream so it never overlaps the
/// session stream.
const STOP_STREAM: u64 = 0x5354_4f50_5255_4c45;

/// The instance a session is waiting on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendingQuery {
    pub id: String,
    #[serde(skip)]
    pub record: usize,
    pub group: usize,
    pub group_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin: Option<usize>,
    pub predicted_class: usize,
    pub confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub display_url: Option<String>,
    #[serde(skip)]
    arm: usize,
    #[serde(skip)]
    slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Next {
    Query(PendingQuery),
    Done(TerminalReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Submitted {
    pub step: Step,
    /// The same pair was already applied; nothing changed.
    pub duplicate: bool,
}

/// One labeling session: the bandit loop driven one query at a time.
///
/// `next_query` and `submit` alternate; [`Session::run`] drives both
/// against an [`Oracle`].
#[derive(Debug, Clone)]
pub struct Session {
    assessment: Arc<Assessment>,
    seed: u64,
    rng: SessionRng,
    beliefs: Vec<ArmBelief>,
    remaining: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
    pending: Option<PendingQuery>,
    steps: Vec<Step>,
    terminal: Option<TerminalReason>,
}

impl Session {
    pub fn new(assessment: Arc<Assessment>, seed: u64) -> Self {
        let remaining = assessment.arms().iter().map(|a| a.members.clone()).collect();
        Session {
            beliefs: assessment.priors().to_vec(),
            assessment,
            seed,
            rng: rng_from_seed(seed),
            remaining,
            queue: VecDeque::new(),
            pending: None,
            steps: Vec::new(),
            terminal: None,
        }
    }

    pub fn assessment(&self) -> &Arc<Assessment> {
        &self.assessment
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn beliefs(&self) -> &[ArmBelief] {
        &self.beliefs
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn pending(&self) -> Option<&PendingQuery> {
        self.pending.as_ref()
    }

    pub fn terminal(&self) -> Option<TerminalReason> {
        self.terminal
    }

    /// Ends the session early; any pending query is dropped.
    pub fn stop(&mut self, reason: TerminalReason) {
        self.pending = None;
        self.terminal.get_or_insert(reason);
    }

    pub fn trajectory(&self, run: usize) -> Trajectory {
        Trajectory {
            run,
            seed: self.seed,
            config_digest: self.assessment.config().digest(),
            steps: self.steps.clone(),
            terminal: self.terminal,
        }
    }

    /// The pending query if there is one, otherwise selects an arm and
    /// draws a fresh instance from it.
    pub fn next_query(&mut self) -> Result<Next> {
        if let Some(p) = &self.pending {
            return Ok(Next::Query(p.clone()));
        }
        if let Some(t) = self.terminal {
            return Ok(Next::Done(t));
        }
        if let Some(limit) = self.assessment.config().budget.limit() {
            if self.steps.len() >= limit {
                self.terminal = Some(TerminalReason::Budget);
                return Ok(Next::Done(TerminalReason::Budget));
            }
        }
        let arm = match self.choose_arm()? {
            Some(arm) => arm,
            None => {
                self.terminal = Some(TerminalReason::Exhausted);
                return Ok(Next::Done(TerminalReason::Exhausted));
            }
        };
        let members = &mut self.remaining[arm];
        let record = members.swap_remove(self.rng.random_range(0..members.len()));
        let a = &*self.assessment;
        let (_, slot) = a.placement(record).expect("arm member has a placement");
        let rec = a.pool().record(record);
        let query = PendingQuery {
            id: rec.id.clone(),
            record,
            group: a.arms()[arm].group,
            group_name: a.arms()[arm].name.clone(),
            bin: matches!(self.beliefs[arm], ArmBelief::Calibration(_)).then_some(slot),
            predicted_class: rec.predicted_class(),
            confidence: rec.confidence(),
            display_url: rec.attributes.get("display_url").cloned(),
            arm,
            slot,
        };
        self.pending = Some(query.clone());
        Ok(Next::Query(query))
    }

    fn choose_arm(&mut self) -> Result<Option<usize>> {
        let eligible: Vec<bool> = self.remaining.iter().map(|r| !r.is_empty()).collect();
        while let Some(arm) = self.queue.pop_front() {
            if eligible[arm] {
                return Ok(Some(arm));
            }
        }
        if !eligible.contains(&true) {
            return Ok(None);
        }
        let a = Arc::clone(&self.assessment);
        let ctx = a.context();
        let arms = select(&a.config().strategy, &ctx, &self.beliefs, &eligible, &mut self.rng)?;
        self.queue.extend(arms);
        Ok(self.queue.pop_front())
    }

    /// Applies outcome `z` to the pending query `id`. Resubmitting the pair
    /// that was just applied is accepted and changes nothing.
    pub fn submit(&mut self, id: &str, z: usize) -> Result<Submitted> {
        let pending = match &self.pending {
            Some(p) if p.id == id => p.clone(),
            _ => {
                return match self.steps.last() {
                    Some(last) if last.id == id && last.z == z => Ok(Submitted {
                        step: last.clone(),
                        duplicate: true,
                    }),
                    _ => Err(Error::NotPending { found: id.to_string() }),
                }
            }
        };
        let outcome = self.assessment.config().outcome();
        let mut belief = self.beliefs[pending.arm].clone();
        let post = apply_outcome(&mut belief, pending.slot, outcome, z)?;
        self.beliefs[pending.arm] = belief;
        self.pending = None;
        let i = self.steps.len() + 1;
        let step = Step {
            i,
            group: pending.group,
            id: pending.id,
            z,
            post,
            bin: pending.bin,
            full: (i % FULL_SNAPSHOT_EVERY == 0).then(|| self.beliefs.clone()),
        };
        self.steps.push(step.clone());
        Ok(Submitted {
            step,
            duplicate: false,
        })
    }

    /// Runs to completion against `oracle`. With `truth`, the benchmark
    /// stopping rule is checked after every step.
    pub fn run(&mut self, oracle: &mut dyn Oracle, truth: Option<&StopTruth>) -> Result<TerminalReason> {
        let outcome = self.assessment.config().outcome();
        let stop_seed = splitmix64(self.seed ^ STOP_STREAM);
        loop {
            let query = match self.next_query()? {
                Next::Query(q) => q,
                Next::Done(t) => return Ok(t),
            };
            let y = oracle.query(query.record, &query.id)?;
            let z = match outcome {
                OutcomeKind::Correctness => usize::from(y == query.predicted_class),
                OutcomeKind::TrueClass => y,
            };
            self.submit(&query.id, z)?;
            if let Some(truth) = truth {
                let a = Arc::clone(&self.assessment);
                let mut rng = rng_from_seed(stop_seed.wrapping_add(self.steps.len() as u64));
                let decision =
                    check_stopping(&a.context(), &self.beliefs, &a.active(), Some(truth), &mut rng)?;
                if decision.stop {
                    self.stop(TerminalReason::Stopped);
                    return Ok(TerminalReason::Stopped);
                }
            }
        }
    }
}
