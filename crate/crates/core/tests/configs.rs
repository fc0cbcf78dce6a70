use std::fs;
use std::path::PathBuf;

use cahnwell_core::experiments::{ExperimentKind, ExperimentSpec};

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let spec = ExperimentSpec::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if spec.kind != ExperimentKind::AnnularStudy {
            spec.build_potential(Some(&dir)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        seen += 1;
    }
    assert!(seen >= 7, "only {seen} configs found");
}
