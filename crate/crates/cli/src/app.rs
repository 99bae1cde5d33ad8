//! Argument parsing and dispatch.
//!
//! Flags are generated from each command's parameter keys, so a flag, a
//! config-file key and a `config.txt` line always share one name
//! (`--noise-init` and `--noise_init` both set `noise_init`).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::commands::{ackley, escape, fetch, sample, schedules, theory, train};
use crate::config::{self, Params};
use crate::error::{exit, CliError};

/// Extra flag spellings: `(command, alias, key)`.
const ALIASES: [(&str, &str, &str); 6] = [
    ("ackley", "n-runs", "runs"),
    ("escape", "alpha-list", "alphas"),
    ("escape", "H", "barrier"),
    ("escape", "h", "barrier"),
    ("schedules", "mode", "alpha_mode"),
    ("train", "dataset", "data_dir"),
];

const ABOUT: [(&str, &str); 7] = [
    ("sample", "Draw symmetric alpha-stable variates and summarise them"),
    ("ackley", "Optimizer runs on the Ackley function"),
    ("escape", "First-passage times out of the sharp well of a double-well potential"),
    ("train", "Train an MLP on MNIST over a list of seeds"),
    ("schedules", "Trace the tail-index and noise-scale schedules"),
    ("theory", "Tabulate the closed-form calculators over a grid"),
    ("fetch-mnist", "Download or import the MNIST IDX files and verify them"),
];

fn keys(command: &str) -> Vec<&'static str> {
    let pairs = match command {
        "sample" => sample::SampleParams::default().pairs(),
        "ackley" => ackley::AckleyParams::default().pairs(),
        "escape" => escape::EscapeParams::default().pairs(),
        "train" => train::TrainParams::default().pairs(),
        "schedules" => schedules::SchedulesParams::default().pairs(),
        "theory" => theory::TheoryParams::default().pairs(),
        "fetch-mnist" => fetch::FetchParams::default().pairs(),
        _ => unreachable!(),
    };
    pairs.into_iter().map(|(k, _)| k).collect()
}

fn subcommand(name: &'static str, about: &'static str) -> Command {
    let mut cmd = Command::new(name).about(about).arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value file applied before the flags"),
    );
    for key in keys(name) {
        let dashed = key.replace('_', "-");
        let mut arg = Arg::new(key).long(dashed.clone()).value_name("VALUE").allow_hyphen_values(true);
        if dashed != key {
            arg = arg.alias(key);
        }
        if name == "sample" && key == "n" {
            arg = arg.short('n');
        }
        if matches!(key, "force" | "track_sharpness") {
            arg = arg.num_args(0..=1).default_missing_value("true");
        }
        cmd = cmd.arg(arg);
    }
    for (c, alias, key) in ALIASES {
        if c == name {
            cmd = cmd.arg(Arg::new(alias).long(alias).value_name("VALUE").help(format!("same as --{key}")));
        }
    }
    cmd
}

pub fn command() -> Command {
    let mut app = Command::new("ahtsgd")
        .about("Heavy-tailed noise injection for SGD: experiments and diagnostics")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("quiet").long("quiet").short('q').global(true).action(ArgAction::SetTrue));
    for (name, about) in ABOUT {
        app = app.subcommand(subcommand(name, about));
    }
    app
}

/// Defaults, then the `--config` file, then command-line flags.
pub fn resolve<P: Params + Default>(command: &str, m: &ArgMatches) -> Result<P, CliError> {
    let mut p = P::default();
    if let Some(file) = m.get_one::<String>("config") {
        let pairs = config::parse_file(&PathBuf::from(file))?;
        config::apply_all(&mut p, &pairs)?;
    }
    for key in keys(command) {
        if m.value_source(key) == Some(ValueSource::CommandLine) {
            p.set(key, m.get_one::<String>(key).unwrap())?;
        }
    }
    for (c, alias, key) in ALIASES {
        if c == command && m.value_source(alias) == Some(ValueSource::CommandLine) {
            p.set(key, m.get_one::<String>(alias).unwrap())?;
        }
    }
    Ok(p)
}

/// Runs one subcommand and returns the lines to print.
pub fn dispatch(name: &str, m: &ArgMatches) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    match name {
        "sample" => {
            let p: sample::SampleParams = resolve(name, m)?;
            let s = sample::run(&p)?;
            out.push(format!("wrote {} draws to {}", s.n, p.out.display()));
            if let (Some(v), Some(iqr)) = (s.variance, s.iqr) {
                out.push(format!("variance {v:.6}  iqr {iqr:.6}"));
            }
            if let (Some(d), Some(pv)) = (s.ks_statistic, s.ks_p_value) {
                out.push(format!("ks statistic {d:.6}  p {pv:.4}"));
            }
        }
        "ackley" => {
            let p: ackley::AckleyParams = resolve(name, m)?;
            let s = ackley::run(&p)?;
            out.push(format!(
                "{}: {}/{} runs finished below {} (fraction {:.3})",
                p.opt.method,
                s.successes,
                s.runs.len(),
                p.threshold,
                s.success_fraction
            ));
        }
        "escape" => {
            let p: escape::EscapeParams = resolve(name, m)?;
            let s = escape::run(&p)?;
            for a in &s.per_alpha {
                out.push(format!("alpha {}: median {} steps, {} censored", a.alpha, a.median, a.censored));
            }
            if let Some((lo, hi, t)) = s.extremes {
                out.push(format!("mann-whitney alpha {lo} < alpha {hi}: p = {:.3e}", t.p_less));
            }
        }
        "train" => {
            let p: train::TrainParams = resolve(name, m)?;
            let s = train::run(&p)?;
            for r in &s.aggregate {
                out.push(format!(
                    "epoch {}: test accuracy {:.4} ± {:.4} over {} seeds",
                    r.epoch, r.mean_accuracy, r.sd_accuracy, r.seeds
                ));
            }
        }
        "schedules" => {
            let p: schedules::SchedulesParams = resolve(name, m)?;
            let rows = schedules::run(&p)?;
            let last = rows.last().unwrap();
            out.push(format!("step {}: alpha {} sigma {}", last.step, last.alpha, last.sigma));
        }
        "theory" => {
            let p: theory::TheoryParams = resolve(name, m)?;
            let rows = theory::run(&p)?;
            out.push(format!("{}: {} rows written to {}", p.function, rows.len(), p.out.display()));
        }
        "fetch-mnist" => {
            let p: fetch::FetchParams = resolve(name, m)?;
            let dir = fetch::run(&p)?;
            out.push(format!("MNIST ready in {}", dir.display()));
        }
        other => return Err(CliError::Config(format!("unknown command {other:?}"))),
    }
    Ok(out)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match dispatch(name, sub) {
        Ok(lines) => {
            if !sub.get_flag("quiet") {
                for l in lines {
                    println!("{l}");
                }
            }
            exit::OK
        }
        Err(e) => {
            eprintln!("ahtsgd {name}: {e}");
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_table_is_consistent() {
        command().debug_assert();
    }
}
