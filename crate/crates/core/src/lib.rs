//! Learned replacements for hand-written heuristics.
//!
//! A [`SmartChoice`] is declared with an output type and a set of named
//! observations. Application code calls [`SmartChoice::observe`], then
//! [`SmartChoice::predict`], then [`SmartChoice::feedback`], and closes each
//! episode with [`SmartChoice::end_episode`]. An optional initial function
//! keeps serving predictions until the learned policy matches it.
//!
//! ```
//! use smartchoices::{ChoiceConfig, LearnerConfig, ObservationDef, OutputDef, SmartChoice, Value};
//!
//! let config = ChoiceConfig::new(LearnerConfig::binary_search(), 7);
//! let mut choice = SmartChoice::new(
//!     OutputDef::float(0.0, 1.0),
//!     vec![ObservationDef::scalar("low", 0.0, 10.0), ObservationDef::scalar("high", 0.0, 10.0)],
//!     Some(Box::new(|_: &smartchoices::State| Value::Float(0.5))),
//!     &config,
//! )
//! .unwrap();
//! choice.observe("low", 1.0).unwrap();
//! choice.observe("high", 9.0).unwrap();
//! assert_eq!(choice.predict(), Value::Float(0.5));
//! choice.feedback(-1.0);
//! choice.end_episode();
//! ```

pub mod choice;
pub mod error;
pub mod learners;
pub mod policy;
pub mod tinynet;

pub use choice::{
    assemble_state, ChoiceConfig, ChoiceStats, EpisodeSummary, InitialFunction, Observation, ObservationDef,
    ObservationKind, OutputDef, SmartChoice, Value,
};
pub use error::{DefinitionError, NetError, ObservationError};
pub use learners::{
    Action, Algorithm, DdqnLearner, FixedPolicyLearner, Learner, LearnerConfig, LearnerHandle, PolicySnapshot, State,
    Td3Learner, TrainStats, TrainingMode, Transition,
};
pub use policy::{PolicySelector, PolicyTag, SelectorConfig};
