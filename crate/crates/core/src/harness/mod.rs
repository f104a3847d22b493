//! Experiment orchestration: configuration, multi-seed training, paired
//! evaluation, robust summaries and file output.

pub mod config;
pub mod episode;
pub mod evaluate;
pub mod export;
pub mod plot;
pub mod train;

pub use config::ExperimentConfig;
pub use episode::{run_episode, EnvInstance, Realization, Setting};
pub use train::{train_agent, train_multi_seed, TrainOutput, TrainedAgent, TrainingCurve};
pub use evaluate::{compare, evaluate, rl_robust, Comparison, Contender, EvalReport, ReportRow};
