//! Canonical attribute schema and named attribute subsets.
//!
//! The input space is 34 attributes: patient age, 10 cytogenetic abnormality
//! flags, and 23 gene mutation flags. Names are fixed; every attribute list in
//! the system is validated against this schema. `FLT3` covers FLT3-ITD and
//! `DNMT3A` covers the `DNMT3` spelling that appears in some sources; one
//! canonical name each.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The age attribute.
pub const AGE: &str = "age";

/// Cytogenetic abnormality flags, in canonical order.
pub const CYTO_NAMES: [&str; 10] = [
    "t_8_21", "inv_16", "t_15_17", "t_9_11", "t_9_22", "tri8", "del7", "del5", "del20", "complex",
];

/// Gene mutation flags, in canonical order.
pub const MUTATION_NAMES: [&str; 23] = [
    "FLT3", "KIT", "KRAS", "NRAS", "PTPN11", "NPM1", "CEBPA", "RUNX1", "DNMT3A", "TET2", "IDH2",
    "IDH1", "EZH2", "HNRNPK", "TP53", "WT1", "PHF6", "U2AF1", "SMC1A", "SMC3", "STAG2", "RAD21",
    "FAM5C",
];

pub const NUM_CYTO: usize = 10;
pub const NUM_MUTATIONS: usize = 23;
pub const NUM_ATTRIBUTES: usize = 1 + NUM_CYTO + NUM_MUTATIONS;

/// All 34 canonical attribute names: age, then cytogenetics, then mutations.
pub fn canonical_attributes() -> Vec<&'static str> {
    let mut names = Vec::with_capacity(NUM_ATTRIBUTES);
    names.push(AGE);
    names.extend_from_slice(&CYTO_NAMES);
    names.extend_from_slice(&MUTATION_NAMES);
    names
}

/// Position of `name` in the canonical order, if it is a known attribute.
pub fn canonical_index(name: &str) -> Option<usize> {
    canonical_attributes().iter().position(|&n| n == name)
}

/// A named, ordered subset of the canonical attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSet {
    name: String,
    attributes: Vec<String>,
}

impl AttributeSet {
    /// Builds a set, rejecting empty lists, duplicates, and unknown names.
    pub fn new(name: impl Into<String>, attributes: Vec<String>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidConfig("attribute set must be non-empty".into()));
        }
        for (i, attr) in attributes.iter().enumerate() {
            if canonical_index(attr).is_none() {
                return Err(Error::InvalidConfig(format!(
                    "unknown attribute '{attr}'"
                )));
            }
            if attributes[..i].contains(attr) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate attribute '{attr}'"
                )));
            }
        }
        Ok(AttributeSet {
            name: name.into(),
            attributes,
        })
    }

    /// All 34 attributes in canonical order.
    pub fn full34() -> Self {
        AttributeSet {
            name: "FULL34".into(),
            attributes: canonical_attributes().iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The 14 attributes with the highest predictive power in the initial
    /// full-set analysis, in their published listing order (no rank claim).
    pub fn top14() -> Self {
        let names = [
            AGE, "tri8", "del5", "del7", "complex", "t_8_21", "inv_16", "t_15_17", "FLT3",
            "NPM1", "TP53", "DNMT3A", "KIT", "CEBPA",
        ];
        AttributeSet {
            name: "TOP14".into(),
            attributes: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Age and mutations only (cytogenetics ablated).
    pub fn no_cyto() -> Self {
        let mut attributes = vec![AGE.to_string()];
        attributes.extend(MUTATION_NAMES.iter().map(|s| s.to_string()));
        AttributeSet { name: "NO_CYTO".into(), attributes }
    }

    /// Cytogenetics and mutations only (age ablated).
    pub fn no_age() -> Self {
        let mut attributes: Vec<String> = CYTO_NAMES.iter().map(|s| s.to_string()).collect();
        attributes.extend(MUTATION_NAMES.iter().map(|s| s.to_string()));
        AttributeSet { name: "NO_AGE".into(), attributes }
    }

    /// Age and cytogenetics only (mutations ablated).
    pub fn no_mut() -> Self {
        let mut attributes = vec![AGE.to_string()];
        attributes.extend(CYTO_NAMES.iter().map(|s| s.to_string()));
        AttributeSet { name: "NO_MUT".into(), attributes }
    }

    /// Looks up a preset by name: FULL34, TOP14, NO_CYTO, NO_AGE, NO_MUT.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "FULL34" => Some(Self::full34()),
            "TOP14" => Some(Self::top14()),
            "NO_CYTO" => Some(Self::no_cyto()),
            "NO_AGE" => Some(Self::no_age()),
            "NO_MUT" => Some(Self::no_mut()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.attributes.iter().any(|a| a == attr)
    }

    /// The same set minus one attribute, for leave-one-out experiments.
    pub fn without(&self, attr: &str) -> Result<Self> {
        let attributes: Vec<String> = self
            .attributes
            .iter()
            .filter(|a| a.as_str() != attr)
            .cloned()
            .collect();
        if attributes.len() == self.attributes.len() {
            return Err(Error::InvalidConfig(format!(
                "attribute '{attr}' is not in set '{}'",
                self.name
            )));
        }
        AttributeSet::new(format!("{}-minus-{attr}", self.name), attributes)
    }

    /// Validates a deserialized set (used by model loading).
    pub fn validate(&self) -> Result<()> {
        AttributeSet::new(self.name.clone(), self.attributes.clone()).map(|_| ())
    }
}
