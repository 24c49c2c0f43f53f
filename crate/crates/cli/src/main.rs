mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use crate::settings::CONFIG_FLAG;

fn opt(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).help(help).action(ArgAction::Set)
}

fn data_args(cmd: Command) -> Command {
    cmd.arg(
        opt(
            "data",
            "Directory holding the MNIST IDX files (plain or .gz)",
        )
        .default_value("data/mnist"),
    )
    .arg(opt(
        "strokes",
        "Directory holding strokes_train.strk / strokes_test.strk",
    ))
    .arg(opt("limit", "Use only the first N samples of each split"))
}

fn cli() -> Command {
    let config = Arg::new(CONFIG_FLAG)
        .long(CONFIG_FLAG)
        .help("Flat `key = value` manifest; flags given on the command line override it")
        .global(true);
    let out = || opt("out", "Run directory receiving every output").default_value("runs/tmp");

    Command::new("noisy-rnn")
        .about("Noise-injection training and robustness evaluation of recurrent MNIST classifiers")
        .subcommand_required(true)
        .arg(config)
        .subcommand(
            Command::new("convert")
                .about("Convert MNIST images to 50-point pen-stroke sequences")
                .arg(
                    opt("data", "Directory holding the MNIST IDX files")
                        .default_value("data/mnist"),
                )
                .arg(opt("split", "train, test or both").default_value("both"))
                .arg(opt(
                    "limit",
                    "Convert only the first N images of each split",
                ))
                .arg(out()),
        )
        .subcommand(data_args(
            Command::new("train")
                .about("Train one model with Gaussian noise on every matrix-vector product")
                .arg(opt("arch", "lstm-rows | lstm-strokes | rnn-rows").default_value("lstm-rows"))
                .arg(opt("sigma-train", "Training noise standard deviation").default_value("0.0"))
                .arg(opt("seed", "Master seed").default_value("0"))
                .arg(opt("epochs", "Training epochs").default_value("20"))
                .arg(opt("batch-size", "Minibatch size").default_value("128"))
                .arg(opt("learning-rate", "Adam step size").default_value("0.001"))
                .arg(opt("beta1", "Adam first-moment decay").default_value("0.9"))
                .arg(opt("beta2", "Adam second-moment decay").default_value("0.999"))
                .arg(opt("epsilon", "Adam denominator offset").default_value("1e-8"))
                .arg(opt("clip-norm", "Global gradient-norm ceiling").default_value("5.0"))
                .arg(out()),
        ))
        .subcommand(data_args(
            Command::new("grid")
                .about("Accuracy grid over (sigma_train, sigma_val)")
                .arg(opt("arch", "lstm-rows | lstm-strokes | rnn-rows").default_value("lstm-rows"))
                .arg(
                    opt(
                        "checkpoints",
                        "Directory with one checkpoint per sigma_train",
                    )
                    .default_value("runs/tmp"),
                )
                .arg(
                    opt("sigma-trains", "Comma-separated sigma_train axis")
                        .default_value(commands::axis_string()),
                )
                .arg(
                    opt("sigma-vals", "Comma-separated sigma_val axis")
                        .default_value(commands::axis_string()),
                )
                .arg(opt("trials", "Noisy trials per cell").default_value("40"))
                .arg(opt("seed", "Evaluation seed").default_value("0"))
                .arg(opt("jobs", "Worker threads (0 = all cores)").default_value("0"))
                .arg(out()),
        ))
        .subcommand(data_args(
            Command::new("eval")
                .about("Mean and standard deviation of accuracy for one checkpoint")
                .arg(opt("checkpoint", "Checkpoint file").required(false))
                .arg(opt("sigma-val", "Inference noise standard deviation").default_value("0.0"))
                .arg(opt("trials", "Noisy trials").default_value("40"))
                .arg(opt("seed", "Evaluation seed").default_value("0"))
                .arg(opt("jobs", "Worker threads (0 = all cores)").default_value("0"))
                .arg(out()),
        ))
        .subcommand(data_args(
            Command::new("hist")
                .about("Weight and state histograms")
                .arg(opt("checkpoints", "Comma-separated checkpoint files"))
                .arg(
                    opt("sigma-val", "Inference noise for the state histograms")
                        .default_value("0.0"),
                )
                .arg(
                    opt("samples", "Validation samples for the state histograms")
                        .default_value("1000"),
                )
                .arg(opt("bins", "Histogram bins").default_value("50"))
                .arg(opt("seed", "Noise seed").default_value("0"))
                .arg(out()),
        ))
}

fn main() -> ExitCode {
    let mut command = cli();
    let matches = command.get_matches_mut();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let spec = command
        .find_subcommand(name)
        .expect("parsed subcommand exists");
    let result = settings::Settings::resolve(spec, sub).and_then(|s| commands::run(name, &s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
