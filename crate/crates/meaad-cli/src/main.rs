use clap::Parser;
use meaad_cli::{
    exit_code, run_ablate, run_attack, run_eval, run_featurize, run_gen, run_stats, run_train, Cli,
    Command,
};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Featurize(args) => run_featurize(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Attack(args) => run_attack(args),
        Command::Ablate(args) => run_ablate(args),
        Command::Stats(args) => run_stats(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
