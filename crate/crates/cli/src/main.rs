mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use biphoton::config::{builtin_names, Scenario};
use clap::Parser;

use args::{Cli, Command};
use commands::{Failure, Outcome, Rendered};

fn run(cli: &Cli) -> Outcome<()> {
    if let Command::Scenarios = cli.command {
        let mut text = String::new();
        for name in builtin_names() {
            text.push_str(name);
            text.push('\n');
        }
        return output::emit(&text, cli.out.as_deref())
            .map_err(|e| Failure::Validation(e.to_string()));
    }
    let scenario = Scenario::load(&cli.scenario)?;
    let rendered: Rendered = match &cli.command {
        Command::TuningCurve(a) => commands::tuning(a, &scenario)?,
        Command::AmplitudeMap(a) => commands::amplitude(a, &scenario)?,
        Command::OverlapAlpha(a) => commands::overlap_alpha(a, &scenario)?,
        Command::OverlapZ(a) => commands::overlap_z(a, &scenario)?,
        Command::SpectralOverlap(a) => commands::spectral(a, &scenario)?,
        Command::Rates(a) => commands::rates(a, &scenario)?,
        Command::Enhancement(a) => commands::enhancement(a, &scenario)?,
        Command::UpconversionEstimate(a) => commands::upconversion(a, &scenario)?,
        Command::SimulateSensitization(a) => commands::sensitization(a, &scenario, cli.seed)?,
        Command::FitDecay(a) => commands::fit_decay(a, &scenario)?,
        Command::ResponseScan(a) => commands::response(a, &scenario)?,
        Command::Scenarios => unreachable!(),
    };
    let io = |e: std::io::Error| Failure::Validation(e.to_string());
    output::emit(&rendered.data, cli.out.as_deref()).map_err(io)?;
    if cli.svg {
        if let (Some(out), Some(svg)) = (&cli.out, &rendered.svg) {
            std::fs::write(output::svg_path(out), svg).map_err(io)?;
        }
    }
    for (path, text) in &rendered.extra_files {
        std::fs::write(path, text).map_err(io)?;
    }
    match rendered.deferred {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
