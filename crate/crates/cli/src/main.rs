use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use glref_cli::commands::Runner;
use glref_cli::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "glref", version, about = "Reference computations for the 2D Ginzburg-Landau critical-field problem")]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true, env = "GLREF_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Override a configuration key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_pair)]
    set: Vec<(String, String)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// lambda(alpha) on the configured alpha range
    Spectrum {
        /// Also locate tau0 and write constants.json
        #[arg(long)]
        find_tau0: bool,
    },
    /// 1D ground energies and the asymptotic ratio table
    Gl1d,
    /// gamma(beta, b) scans near lambda0
    Gamma,
    /// E(L) on the half-cylinder
    Strip {
        /// L values (comma separated); defaults to lambda0^(-3/2) plus strip.l_offsets
        #[arg(long = "L", value_delimiter = ',', allow_hyphen_values = true)]
        l: Vec<f64>,
    },
    /// Leading-order and near-critical energies for a field on a domain
    Energy {
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Applied field; defaults to (gamma - rho) kappa^2
        #[arg(long = "H", conflicts_with = "rho")]
        h: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// E(L) table in JSONL form; the closed form near lambda0^(-3/2) is used otherwise
        #[arg(long = "E-table")]
        e_table: Option<String>,
    },
    /// Disk covering of the zero set at scale ell
    Cover {
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Every stage plus the acceptance checks
    All,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn overrides(cli: &Cli) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Some(d) = &cli.out_dir {
        out.push(("out_dir".to_string(), d.clone()));
    }
    out.extend(cli.set.iter().cloned());
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    };
    match &cli.command {
        Command::Energy { field, omega, kappa, h, rho, e_table } => {
            put("energy.field", field.clone());
            put("energy.omega", omega.clone());
            put("energy.kappa", kappa.map(|x| x.to_string()));
            put("energy.h", h.map(|x| x.to_string()));
            put("energy.rho", rho.map(|x| x.to_string()));
            put("energy.e_table", e_table.clone());
        }
        Command::Cover { field, omega, ell } => {
            put("cover.field", field.clone());
            put("cover.omega", omega.clone());
            put("cover.ell", ell.map(|x| x.to_string()));
        }
        _ => {}
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    let cfg = match RunConfig::resolve(cli.config.as_deref(), |k| std::env::var(k).ok(), &overrides(&cli)) {
        Ok(c) => c,
        Err(e) => return fail("config", format!("{e:#}"), 2),
    };
    let result = Runner::new(cfg).and_then(|r| match &cli.command {
        Command::Spectrum { find_tau0 } => r.spectrum(*find_tau0),
        Command::Gl1d => r.gl1d_table(),
        Command::Gamma => r.gamma(),
        Command::Strip { l } => r.strip((!l.is_empty()).then(|| l.clone())),
        Command::Energy { .. } => r.energy(),
        Command::Cover { .. } => r.cover(),
        Command::All => r.all(),
    });
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<glref::Error>())
                .map_or("runtime", |g| g.kind());
            fail(kind, format!("{e:#}"), 1)
        }
    }
}
