use std::path::PathBuf;

/// Compares CSV text against `tests/golden/<name>` cell by cell, numeric cells
/// to within `tol`. Set `HOM_PHASE_BLESS=1` to rewrite the file instead.
pub fn check_golden(name: &str, actual: &str, tol: f64) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var("HOM_PHASE_BLESS").is_ok_and(|v| v == "1") {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    let a: Vec<&str> = actual.lines().collect();
    let e: Vec<&str> = expected.lines().collect();
    assert_eq!(a.len(), e.len(), "{name}: line count");
    for (k, (la, le)) in a.iter().zip(&e).enumerate() {
        let ca: Vec<&str> = la.split(',').collect();
        let ce: Vec<&str> = le.split(',').collect();
        assert_eq!(ca.len(), ce.len(), "{name}:{}", k + 1);
        for (x, y) in ca.iter().zip(&ce) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!(
                    (x - y).abs() <= tol * y.abs().max(1.0),
                    "{name}:{}: {x} vs {y}",
                    k + 1
                ),
                _ => assert_eq!(x, y, "{name}:{}", k + 1),
            }
        }
    }
}
