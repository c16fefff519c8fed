//! Command-line front end: scenario configuration, execution and output.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use error::CliError;

/// Built-in scenarios reproducing the standard figures.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../../../presets/fig2a.toml")),
    ("fig2b", include_str!("../../../presets/fig2b.toml")),
    ("fig2c", include_str!("../../../presets/fig2c.toml")),
    ("fig3", include_str!("../../../presets/fig3.toml")),
    ("fig5", include_str!("../../../presets/fig5.toml")),
    ("fig5_alpha041", include_str!("../../../presets/fig5_alpha041.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
