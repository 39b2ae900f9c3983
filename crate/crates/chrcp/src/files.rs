use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrcp_core::parser::{parse_program, parse_store};
use chrcp_core::syntax::check_well_formed;
use chrcp_core::{Program, Store};

/// Reads and parses a program, rejecting it if it is not well formed.
pub fn load_program(path: &Path) -> Result<Program> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p = parse_program(&text).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))?;
    let problems = check_well_formed(&p);
    if !problems.is_empty() {
        let lines: Vec<String> = problems.iter().map(|d| format!("  {d}")).collect();
        bail!(
            "{}: ill-formed program\n{}",
            path.display(),
            lines.join("\n")
        );
    }
    Ok(p)
}

/// Reads a store file; no path means the empty store.
pub fn load_store(path: Option<&Path>) -> Result<Store> {
    let Some(path) = path else {
        return Ok(Store::new());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(Store::new());
    }
    parse_store(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
