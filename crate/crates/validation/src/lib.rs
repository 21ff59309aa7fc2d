//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! acceptance criterion. Run it with `cargo test --test acceptance`.
//!
//! It lives in its own package so a failing criterion, which fails the
//! target, does not stop `cargo test --workspace` before the unit and
//! integration suites of the other crates have run.
