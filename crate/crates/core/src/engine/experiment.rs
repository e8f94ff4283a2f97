use std::sync::Arc;

use rayon::prelude::*;

use super::{Assessment, Oracle, ReplayOracle, Session, StopTruth, Trajectory};
use crate::error::{Error, Result};
use crate::rng::run_seed;
use crate::strategies::ArmBelief;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub beliefs: Vec<ArmBelief>,
}

/// One complete session with seed `seed`, recorded as run `run`.
pub fn run_session(
    assessment: &Arc<Assessment>,
    seed: u64,
    run: usize,
    oracle: &mut dyn Oracle,
    truth: Option<&StopTruth>,
) -> Result<RunOutcome> {
    let mut session = Session::new(Arc::clone(assessment), seed);
    session.run(oracle, truth)?;
    Ok(RunOutcome {
        trajectory: session.trajectory(run),
        beliefs: session.beliefs().to_vec(),
    })
}

/// `config.runs` independent sessions, run `r` seeded with `config.seed + r`
/// and a freshly armed oracle. Runs execute in parallel on `jobs` threads
/// (all cores when `None`); results are ordered by run index.
pub fn run_experiment(
    assessment: &Arc<Assessment>,
    oracle: &ReplayOracle,
    truth: Option<&StopTruth>,
    jobs: Option<usize>,
) -> Result<Vec<RunOutcome>> {
    let cfg = assessment.config();
    let work = || {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let mut o = oracle.rearm();
                run_session(assessment, run_seed(cfg.seed, r as u64), r, &mut o, truth)
            })
            .collect::<Result<Vec<_>>>()
    };
    match jobs {
        None => work(),
        Some(0) => Err(Error::InvalidParameter("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(work),
    }
}
