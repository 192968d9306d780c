use std::io::Write;

use clap::Parser;
use utree_hecke::config::{Cli, Command, CommonArgs, ConfigError, RunConfig, SigmaFilter, Suite, VertexSel};

fn args(extra: &[&str]) -> CommonArgs {
    let mut argv = vec!["utree-hecke", "verify"];
    argv.extend_from_slice(extra);
    match Cli::try_parse_from(argv).unwrap().command {
        Command::Verify(a) => a,
        _ => unreachable!(),
    }
}

fn config_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn defaults() {
    let cfg = RunConfig::resolve(&args(&[])).unwrap();
    assert_eq!((cfg.p, cfg.f, cfg.radius, cfg.precision), (3, 1, 2, 16));
    assert_eq!(cfg.vertex, VertexSel::Both);
    assert_eq!(cfg.sigma, SigmaFilter::All);
    assert_eq!(cfg.suites, Suite::DEFAULT.to_vec());
    assert_eq!(cfg.q(), 3);
    assert_eq!(cfg.residue_degree(), 2);
}

#[test]
fn precision_follows_radius() {
    let cfg = RunConfig::resolve(&args(&["--radius", "3"])).unwrap();
    assert_eq!(cfg.precision, 20);
    let cfg = RunConfig::resolve(&args(&["--radius", "3", "--precision", "auto"])).unwrap();
    assert_eq!(cfg.precision, 20);
}

#[test]
fn flags_override_file() {
    let file = config_file("p = 5\nradius = 1\nsigma = \"max_dim=3\"\nsuites = [\"tree\"]\nseed = 9\n");
    let path = file.path().to_str().unwrap();
    let cfg = RunConfig::resolve(&args(&["--config", path])).unwrap();
    assert_eq!((cfg.p, cfg.radius, cfg.seed), (5, 1, 9));
    assert_eq!(cfg.sigma, SigmaFilter::MaxDim(3));
    assert_eq!(cfg.suites, vec![Suite::Tree]);
    let cfg = RunConfig::resolve(&args(&["--config", path, "--radius", "2", "--sigma", "1,4"])).unwrap();
    assert_eq!((cfg.p, cfg.radius), (5, 2));
    assert_eq!(cfg.sigma, SigmaFilter::Ids(vec![1, 4]));
}

#[test]
fn unknown_file_keys_are_rejected() {
    let file = config_file("radius = 1\nradios = 2\n");
    let err = RunConfig::resolve(&args(&["--config", file.path().to_str().unwrap()])).unwrap_err();
    assert!(matches!(err, ConfigError::File { .. }), "{err}");
}

#[test]
fn validation() {
    for bad in [
        &["--p", "9"][..],
        &["--p", "2"],
        &["--f", "0"],
        &["--radius", "0"],
        &["--radius", "2", "--precision", "15"],
        &["--coeff-ext", "3"],
        &["--vertex", "K2"],
        &["--sigma", "max_dim=x"],
        &["--suites", "tree,forest"],
    ] {
        assert!(RunConfig::resolve(&args(bad)).is_err(), "{bad:?}");
    }
    let cfg = RunConfig::resolve(&args(&["--coeff-ext", "4", "--vertex", "K1"])).unwrap();
    assert_eq!(cfg.coeff_ext, Some(4));
    assert_eq!(cfg.vertex.vertices().len(), 1);
}

#[test]
fn sigma_filter() {
    assert!(SigmaFilter::All.accepts(7, 27));
    assert!(SigmaFilter::MaxDim(3).accepts(7, 3));
    assert!(!SigmaFilter::MaxDim(3).accepts(7, 8));
    assert!(SigmaFilter::Ids(vec![2, 7]).accepts(7, 27));
    assert!(!SigmaFilter::Ids(vec![2, 7]).accepts(3, 1));
}
