//! Name-keyed registries of interchangeable strategies.
//!
//! Each strategy family (tracking controllers, handover execution modes,
//! multiple-access schemes) is a trait; concrete variants register a
//! constructor under a stable name and the scenario selects one at runtime.

use std::collections::BTreeMap;
use std::fmt;

pub struct Registry<T: ?Sized> {
    family: &'static str,
    entries: BTreeMap<&'static str, fn() -> Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Registry {
            family,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `ctor` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, ctor: fn() -> Box<T>) -> &mut Self {
        self.entries.insert(name, ctor);
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>, UnknownStrategy> {
        self.entries
            .get(name)
            .map(|ctor| ctor())
            .ok_or_else(|| UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                known: self.names().map(str::to_string).collect(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {family} `{name}` (known: {})", known.join(", "))]
pub struct UnknownStrategy {
    pub family: &'static str,
    pub name: String,
    pub known: Vec<String>,
}
