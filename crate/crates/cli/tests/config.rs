use nullflow_cli::config::{apply_overrides, RunConfig, Scalar};
use toml::Table;

#[test]
fn defaults_are_valid_and_describe_the_schwarzschild_run() {
    let (cfg, _) = RunConfig::load(None, &[]).unwrap();
    assert_eq!(cfg.background.kind, "schwarzschild");
    assert_eq!(cfg.flow.omega0, Scalar::Expr("3 + 0.3*cos(theta)".into()));
    assert_eq!(cfg.flow_config(), nullflow::scenarios::mots_config());
}

#[test]
fn overrides_parse_toml_values_and_fall_back_to_strings() {
    let mut t = Table::new();
    let mut errors = Vec::new();
    apply_overrides(
        &mut t,
        &[
            "flow.cfl=0.1".into(),
            "background.kind=minkowski".into(),
            "foliation.range=[1.0, 2.0]".into(),
            "gauge.reparametrize=true".into(),
        ],
        &mut errors,
    );
    assert!(errors.is_empty(), "{errors:?}");
    let cfg = RunConfig::from_table(&t, &mut errors);
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(cfg.flow.cfl, 0.1);
    assert_eq!(cfg.background.kind, "minkowski");
    assert_eq!(cfg.foliation.range, [1.0, 2.0]);
    assert!(cfg.gauge.reparametrize);
}

#[test]
fn later_overrides_win_and_bad_paths_are_reported() {
    let mut t: Table = "[grid]\nn_theta = 8\nmode = \"axisymmetric\"\n".parse().unwrap();
    let mut errors = Vec::new();
    apply_overrides(
        &mut t,
        &["grid.n_theta=10".into(), "grid.n_theta=12".into(), "grid.mode.x=1".into(), "=3".into()],
        &mut errors,
    );
    assert_eq!(errors.len(), 2, "{errors:?}");
    assert_eq!(t["grid"]["n_theta"].as_integer(), Some(12));
}

#[test]
fn validation_aggregates_semantic_errors() {
    let sets: Vec<String> = [
        "background.kind=kerr",
        "lambda.max=0.5",
        "grid.mode=cubed",
        "gauge.v0=\"cos(\"",
        "flow.eps_mots=0",
        "foliation.eps=0.5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let err = RunConfig::load(None, &sets).unwrap_err();
    assert_eq!(err.0.len(), 6, "{err}");
}

#[test]
fn canonical_text_skips_the_output_section() {
    let (a, _) = RunConfig::load(None, &["output.dir=\"x\"".into()]).unwrap();
    let (b, _) = RunConfig::load(None, &["output.dir=\"y\"".into()]).unwrap();
    assert_eq!(a.sha256(), b.sha256());
    assert!(!a.canonical().contains("[output]"));
    let (c, _) = RunConfig::load(None, &["flow.cfl=0.1".into()]).unwrap();
    assert_ne!(a.sha256(), c.sha256());
}
