//! Acceptance checks for the benchmark problems live in `tests/acceptance.rs`.
