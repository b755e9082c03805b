//! Kept in its own test binary: it sets process-wide environment variables.

use reqpath::cli_dispatch;

#[test]
fn environment_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version":"x","criteria":[],"methods":[],"activities":[],"groups":[]}"#).unwrap();
    let env_data = dir.path().join("from-env");
    let flag_data = dir.path().join("from-flag");
    std::env::set_var("REQPATH_KB", &bad);
    std::env::set_var("REQPATH_DATA_DIR", &env_data);

    assert_eq!(cli_dispatch(["reqpath", "kb", "list"]).code, 1);
    let seed = concat!(env!("CARGO_MANIFEST_DIR"), "/../../seed/xrgm.json");
    let out = cli_dispatch(["reqpath", "--kb", seed, "session", "new", "--id", "e", "--need", "n1=x"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(env_data.join("sessions/e/log.json").is_file());

    let out = cli_dispatch([
        "reqpath",
        "--kb",
        seed,
        "--data-dir",
        flag_data.to_str().unwrap(),
        "session",
        "new",
        "--id",
        "f",
        "--need",
        "n1=x",
    ]);
    assert_eq!(out.code, 0);
    assert!(flag_data.join("sessions/f/state.json").is_file());
    assert!(!env_data.join("sessions/f").exists());
}
