//! Hosts the `acceptance` test target. It lives in its own package so that
//! `cargo test --workspace` runs it after every other suite: it exits nonzero
//! when a criterion fails, which would otherwise stop later test binaries.
