//! Support library for the `wwbar` binary: the on-disk state format shared
//! by every subcommand and by the integration tests.

pub mod statefile;
