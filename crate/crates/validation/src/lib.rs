//! Holds the workspace acceptance suite (`cargo test -p scriptid-validation`).
//! The checks live in `tests/acceptance.rs`; this crate exports nothing.
