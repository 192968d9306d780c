use clap::Parser;
use utree_hecke::config::{Cli, Command, RunConfig};

// Kept alone in its own binary: the environment is process wide.
#[test]
fn environment_sits_between_flags_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "radius = 1\nseed = 4\np = 5\n").unwrap();
    std::env::set_var("UHECK_RADIUS", "3");
    std::env::set_var("UHECK_SEED", "11");
    let parse = |extra: &[&str]| {
        let mut argv = vec!["utree-hecke", "verify", "--config", path.to_str().unwrap()];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Verify(a) => RunConfig::resolve(&a).unwrap(),
            _ => unreachable!(),
        }
    };
    let cfg = parse(&[]);
    assert_eq!((cfg.radius, cfg.seed, cfg.p), (3, 11, 5));
    let cfg = parse(&["--seed", "2"]);
    assert_eq!((cfg.radius, cfg.seed), (3, 2));
    std::env::remove_var("UHECK_RADIUS");
    std::env::remove_var("UHECK_SEED");
    assert_eq!(parse(&[]).radius, 1);
}
