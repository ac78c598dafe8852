//! Configuration files, CSV tables and VTU field export.

pub mod config;
pub mod tables;
pub mod vtu;

pub use config::{load_config, parse_config, ParamOverrides, ProblemKind, RawConfig, RunConfig};
pub use tables::{read_error_csv, read_strain_csv, write_error_csv, write_rates_csv, write_strain_csv, ErrorLine, StrainTable};
pub use vtu::{export_vtu, lattice_fields, write_vtu, LatticeFields};
