//! Command implementations behind the `meaad` binary.
//!
//! Every command resolves its configuration (flags, then the `MEAAD_SEED`
//! environment variable for a missing seed, then defaults), runs, and writes
//! its artifacts plus a `run_config.txt` into `--out-dir`. Outputs are
//! bitwise-deterministic functions of the inputs and the resolved
//! configuration; rerunning a command reproduces its files byte for byte.

pub mod args;
pub mod commands;
mod common;

use meaad_core::Error as CoreError;

/// Exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 numeric failure.
pub fn exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::InvalidConfig(_) | CoreError::SingleExpert | CoreError::NotTrained(_) => 2,
        CoreError::ZeroVector | CoreError::NonFinite(_) => 4,
        _ => 3,
    }
}

pub use args::{
    AblateArgs, AttackArgs, Cli, Command, EvalArgs, FeaturizeArgs, GenArgs, StatsArgs, TrainArgs,
};
pub use commands::{
    run_ablate, run_attack, run_eval, run_featurize, run_gen, run_stats, run_train,
};
