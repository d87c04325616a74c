use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use super::{Learner, PolicySnapshot, SnapshotCell, TrainStats, Transition};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TrainingMode {
    /// Train inline at the end of every episode. Deterministic.
    #[default]
    Synchronous,
    /// Train on a background thread; acting reads whichever snapshot was
    /// published last.
    Asynchronous,
}

enum Msg {
    Episode(Vec<Transition>),
    Flush(Sender<()>),
}

enum Backend {
    Sync(Box<dyn Learner>),
    Async { tx: Option<Sender<Msg>>, worker: Option<JoinHandle<()>> },
}

/// Owns a learner, feeds it episodes and exposes its latest snapshot.
pub struct LearnerHandle {
    backend: Backend,
    cell: Arc<SnapshotCell>,
    log: Arc<Mutex<Vec<TrainStats>>>,
}

impl LearnerHandle {
    pub fn new(learner: Box<dyn Learner>, mode: TrainingMode) -> Self {
        let cell = Arc::new(SnapshotCell::new(learner.snapshot()));
        let log = Arc::new(Mutex::new(Vec::new()));
        let backend = match mode {
            TrainingMode::Synchronous => Backend::Sync(learner),
            TrainingMode::Asynchronous => {
                let (tx, rx) = mpsc::channel::<Msg>();
                let (cell, log) = (Arc::clone(&cell), Arc::clone(&log));
                let worker = std::thread::spawn(move || {
                    let mut learner = learner;
                    for msg in rx {
                        match msg {
                            Msg::Episode(episode) => {
                                if ingest(learner.as_mut(), episode, &log) {
                                    cell.publish(learner.snapshot());
                                }
                            }
                            Msg::Flush(ack) => {
                                let _ = ack.send(());
                            }
                        }
                    }
                });
                Backend::Async { tx: Some(tx), worker: Some(worker) }
            }
        };
        LearnerHandle { backend, cell, log }
    }

    pub fn mode(&self) -> TrainingMode {
        match self.backend {
            Backend::Sync(_) => TrainingMode::Synchronous,
            Backend::Async { .. } => TrainingMode::Asynchronous,
        }
    }

    /// Latest published snapshot.
    pub fn current_snapshot(&self) -> Arc<PolicySnapshot> {
        self.cell.current()
    }

    pub fn snapshot_cell(&self) -> Arc<SnapshotCell> {
        Arc::clone(&self.cell)
    }

    /// Hands a finished episode to the learner. In synchronous mode this
    /// trains and publishes before returning.
    pub fn submit(&mut self, episode: Vec<Transition>) {
        match &mut self.backend {
            Backend::Sync(learner) => {
                if ingest(learner.as_mut(), episode, &self.log) {
                    self.cell.publish(learner.snapshot());
                }
            }
            Backend::Async { tx, .. } => {
                if let Some(tx) = tx {
                    let _ = tx.send(Msg::Episode(episode));
                }
            }
        }
    }

    /// Blocks until the background trainer has processed everything
    /// submitted so far. No-op in synchronous mode.
    pub fn wait_idle(&self) {
        if let Backend::Async { tx: Some(tx), .. } = &self.backend {
            let (ack_tx, ack_rx) = mpsc::channel();
            if tx.send(Msg::Flush(ack_tx)).is_ok() {
                let _ = ack_rx.recv();
            }
        }
    }

    pub fn buffer_len(&self) -> Option<usize> {
        match &self.backend {
            Backend::Sync(l) => Some(l.buffer_len()),
            Backend::Async { .. } => None,
        }
    }

    pub fn learner(&self) -> Option<&dyn Learner> {
        match &self.backend {
            Backend::Sync(l) => Some(l.as_ref()),
            Backend::Async { .. } => None,
        }
    }

    pub fn train_log(&self) -> Vec<TrainStats> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Drop for LearnerHandle {
    fn drop(&mut self) {
        if let Backend::Async { tx, worker } = &mut self.backend {
            drop(tx.take());
            if let Some(w) = worker.take() {
                let _ = w.join();
            }
        }
    }
}

/// Pushes the episode and runs its share of gradient steps. Returns whether
/// any step ran.
fn ingest(learner: &mut dyn Learner, episode: Vec<Transition>, log: &Mutex<Vec<TrainStats>>) -> bool {
    let cfg = learner.config();
    let steps = cfg.steps_per_episode.unwrap_or(episode.len() * cfg.steps_per_transition);
    let log_every = cfg.log_every as u64;
    for t in episode {
        learner.push(t);
    }
    let mut trained = false;
    for _ in 0..steps {
        match learner.train_step() {
            Some(stats) => {
                trained = true;
                if log_every > 0 && stats.step % log_every == 0 {
                    log.lock().unwrap_or_else(|e| e.into_inner()).push(stats);
                }
            }
            None => break,
        }
    }
    trained
}
