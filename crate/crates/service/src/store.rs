use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use bayes_assess::engine::{read_trajectories, write_step, Next, Step};
use bayes_assess::{Error, Result, Session, SessionConfig};

const CONFIG_SUFFIX: &str = ".config.json";

/// Directory of persisted sessions.
pub(crate) struct Store {
    dir: PathBuf,
}

pub(crate) struct SessionLog {
    out: BufWriter<File>,
}

impl SessionLog {
    /// Appends one step and flushes, so an acknowledged label survives a crash.
    pub(crate) fn push(&mut self, step: &Step) -> Result<()> {
        write_step(&mut self.out, step, None)?;
        self.out.flush()?;
        Ok(())
    }
}

impl Store {
    pub(crate) fn open(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Store { dir })
    }

    fn steps_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub(crate) fn create(&self, id: &str, cfg: &SessionConfig) -> Result<SessionLog> {
        let path = self.dir.join(format!("{id}{CONFIG_SUFFIX}"));
        serde_json::to_writer_pretty(File::create(path)?, cfg)?;
        File::create(self.steps_path(id))?;
        self.append(id)
    }

    pub(crate) fn append(&self, id: &str) -> Result<SessionLog> {
        let file = OpenOptions::new().append(true).create(true).open(self.steps_path(id))?;
        Ok(SessionLog {
            out: BufWriter::new(file),
        })
    }

    /// Every persisted session as (id, config, steps), sorted by id.
    pub(crate) fn load(&self) -> Result<Vec<(String, SessionConfig, Vec<Step>)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            let Some(id) = name.strip_suffix(CONFIG_SUFFIX) else {
                continue;
            };
            let cfg = SessionConfig::load(self.dir.join(&name))?;
            let steps = match File::open(self.steps_path(id)) {
                Ok(f) => read_trajectories(BufReader::new(f))?
                    .into_iter()
                    .next()
                    .map(|t| t.steps)
                    .unwrap_or_default(),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            out.push((id.to_string(), cfg, steps));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

/// Replays logged outcomes through the session so its random stream ends
/// where it was; every drawn query must match the log.
pub(crate) fn restore(session: &mut Session, steps: &[Step]) -> Result<()> {
    for step in steps {
        match session.next_query()? {
            Next::Query(q) if q.id == step.id => {
                session.submit(&step.id, step.z)?;
            }
            Next::Query(q) => {
                return Err(Error::InvalidParameter(format!(
                    "log step {} labels `{}` but the session drew `{}`",
                    step.i, step.id, q.id
                )))
            }
            Next::Done(_) => {
                return Err(Error::InvalidParameter(format!(
                    "log continues past the end of the session at step {}",
                    step.i
                )))
            }
        }
    }
    Ok(())
}
