//! Name-keyed registries of interchangeable strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Implemented by every registrable strategy.
pub trait Named {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str {
        ""
    }
}

/// A set of trait objects addressable by their `name()`.
pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `entry`, replacing any previous entry of the same name.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        self.entries.insert(entry.name(), entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.values().map(|b| b.as_ref())
    }
}
