//! Instance families, persistence and brute-force reference bounds.

mod generate;
mod io;
mod oracle;

pub use generate::{generate, Family, FamilyParams, Preset};
pub use io::{from_json_str, load, save, to_json_string};
pub use oracle::{brute_force_bounds, feasible_binary_points, OracleBounds};
