use std::process::ExitCode;

use clap::Parser;
use utree_hecke::config::{Cli, Command, RunConfig};
use utree_hecke::suites::{self, Context, RunError};

fn catalog(cfg: &RunConfig) -> Result<(), RunError> {
    for v in cfg.vertex.vertices() {
        let ctx = Context::new(cfg, v)?;
        let path = suites::catalog_path(cfg, v)?;
        if !path.exists() {
            std::fs::create_dir_all(&cfg.catalog_dir).map_err(|e| RunError::Io { path: cfg.catalog_dir.clone(), msg: e.to_string() })?;
            std::fs::write(&path, &ctx.catalog_bytes).map_err(|e| RunError::Io { path: path.clone(), msg: e.to_string() })?;
        }
        let info = ctx.info();
        println!("{v}: {} weights over F_{{{}^{}}}, dims {:?}", info.entries, cfg.p, info.k, info.dims);
        println!("  {} sha256 {}", path.display(), info.sha256);
    }
    Ok(())
}

fn verify(cfg: &RunConfig) -> Result<bool, RunError> {
    let report = suites::run(cfg)?;
    print!("{}", report.summary());
    if let Some(path) = &cfg.report {
        suites::write_json(path, &serde_json::to_value(&report).expect("serializable"))?;
    }
    Ok(report.failed() == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, oracle) = match &cli.command {
        Command::Catalog(a) => (a, false),
        Command::Verify(a) => (a, false),
        Command::Oracle(a) => (a, true),
    };
    let mut cfg = match RunConfig::resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if oracle {
        cfg.suites = vec![utree_hecke::config::Suite::Oracle];
    }
    let result = match cli.command {
        Command::Catalog(_) => catalog(&cfg).map(|_| true),
        _ => verify(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
