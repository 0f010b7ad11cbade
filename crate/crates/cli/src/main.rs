mod args;
mod commands;
mod output;

use std::process;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::Context;

fn run(cli: &Cli) -> output::CliResult<()> {
    let default_format = match cli.command {
        Command::Fit(_) => Format::Json,
        _ => Format::Csv,
    };
    let ctx = Context {
        seed: cli.seed,
        format: cli.format.unwrap_or(default_format),
    };
    let text = match &cli.command {
        Command::Estimate(a) => commands::estimate(&ctx, a)?,
        Command::Weights(a) => commands::weights(&ctx, a)?,
        Command::Fit(a) => commands::fit(&ctx, a)?,
        Command::Simulate(a) => commands::simulate(&ctx, a)?,
        Command::Meta(a) => commands::meta(&ctx, a)?,
    };
    output::emit(&text, cli.output.as_deref())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("optmean: {e}");
        process::exit(e.exit_code());
    }
}
