//! The four bundled benchmark files load with their published shapes.

use std::path::PathBuf;

use tabaug_core::data::{descriptor, load_registered, registry, split_by_class};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn registry_files_load() {
    // (name, rows, features, class-0 count, class-1 count)
    let expected = [
        ("australian", 690, 14, 383, 307),
        ("german", 1000, 24, 700, 300),
        ("pima", 768, 8, 500, 268),
        ("spect", 267, 22, 55, 212),
    ];
    for (name, rows, feats, c0, c1) in expected {
        let ds = load_registered(name, &data_dir()).unwrap();
        assert_eq!((ds.rows(), ds.features()), (rows, feats), "{name}");
        assert_eq!(ds.class_counts(), (c0, c1), "{name}");
        assert_eq!(ds.minority_label, if c0 < c1 { 0 } else { 1 }, "{name}");
        assert!(ds.x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let (min, maj) = split_by_class(&ds);
        assert_eq!(min.rows(), c0.min(c1));
        assert_eq!(maj.rows(), c0.max(c1));
        assert_eq!(ds.fingerprint.len(), 16);
    }
    assert_eq!(registry().len(), 4);
    assert!(descriptor("german").unwrap().has_caveat());
}

#[test]
fn unknown_and_missing_are_errors() {
    assert!(load_registered("iris", &data_dir()).is_err());
    assert!(load_registered("pima", &data_dir().join("nowhere")).is_err());
}
