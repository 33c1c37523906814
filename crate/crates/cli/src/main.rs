//! `pcconv`: Poisson-Charlier graph filtering from the command line.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on configuration or
//! validation errors.

mod commands;
mod config;

use commands::Failure;
use config::RunConfig;

const USAGE: &str = "\
pcconv <command> [--config <file>] [--key value ...]

Commands:
  coeffs        write the Poisson-Charlier coefficient table (coeffs.csv)
  response      write the filter bank response on a [0,2] grid (response.csv)
  fit           least-squares fit of the bank to a target filter curve
  synth         generate a stochastic block model dataset
  train         train PCNet on a dataset directory
  eval          evaluate a saved model on the configured split
  oracle-check  cross-check sparse filtering against dense spectral oracles

Common keys: eta p t N K hidden mlp_layers dropout lr theta_lr weight_decay
             max_epochs patience seed mode split dataset_dir out_dir
Extras:      grid target theta (response/fit), m classes p_in p_out d mu sigma
             (synth/oracle-check)

Flags override config-file values; unknown keys are rejected.";

fn dispatch(command: &str, cfg: &RunConfig) -> Result<(), Failure> {
    match command {
        "coeffs" => commands::cmd_coeffs(cfg),
        "response" => commands::cmd_response(cfg),
        "fit" => commands::cmd_fit(cfg),
        "synth" => commands::cmd_synth(cfg),
        "train" => commands::cmd_train(cfg),
        "eval" => commands::cmd_eval(cfg),
        "oracle-check" => commands::cmd_oracle_check(cfg),
        other => Err(Failure::Config(format!(
            "unknown command '{other}'\n{USAGE}"
        ))),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        std::process::exit(2);
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return;
    }
    let cfg = match RunConfig::from_args(&args[1..]) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    if let Err(failure) = dispatch(command, &cfg) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
