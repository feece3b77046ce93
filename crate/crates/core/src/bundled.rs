//! Example instances and the shape catalog they use, compiled into the
//! library so tests and the CLI can run without files on disk.

use crate::format::{load_instance, LoadError};
use crate::strategy::LoadedInstance;

pub const CATALOG: &str = include_str!("../instances/catalog.txt");
pub const INSTANCE_1: &str = include_str!("../instances/instance1.txt");
pub const INSTANCE_2: &str = include_str!("../instances/instance2.txt");
pub const INSTANCE_3: &str = include_str!("../instances/instance3.txt");

/// `(id, text)` for every bundled instance.
pub const INSTANCES: [(&str, &str); 3] = [("1", INSTANCE_1), ("2", INSTANCE_2), ("3", INSTANCE_3)];

/// Loads bundled instance `n` (1-based) against the bundled catalog.
pub fn instance(n: usize) -> Result<LoadedInstance, LoadError> {
    let (_, text) = INSTANCES[n - 1];
    load_instance(text, CATALOG)
}
