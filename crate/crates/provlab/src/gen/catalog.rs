//! Versioned benign-activity catalog, shipped in-repo and compiled in.

use anyhow::{ensure, Context, Result};
use serde::Deserialize;

pub const CATALOG_TOML: &str = include_str!("../../data/benign_catalog.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct Catalog {
    pub version: u32,
    #[serde(rename = "archetype")]
    pub archetypes: Vec<ArchetypeEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ArchetypeEntry {
    pub name: String,
    pub path: String,
    pub instances: u32,
    pub share: u32,
}

impl Catalog {
    pub fn builtin() -> Result<Catalog> {
        let catalog: Catalog =
            toml::from_str(CATALOG_TOML).context("parse built-in benign catalog")?;
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<()> {
        ensure!(!self.archetypes.is_empty(), "catalog has no archetypes");
        for a in &self.archetypes {
            ensure!(a.instances >= 1, "archetype {} has zero instances", a.name);
            ensure!(a.share >= 1, "archetype {} has zero share", a.name);
        }
        Ok(())
    }

    pub fn total_share(&self) -> u32 {
        self.archetypes.iter().map(|a| a.share).sum()
    }
}
