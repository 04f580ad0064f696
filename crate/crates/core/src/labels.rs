//! Semantic class ids and their names.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type ClassId = u8;

/// Mapping from class id to class name, loaded from `id name` text lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMap {
    names: BTreeMap<ClassId, String>,
}

impl LabelMap {
    pub fn new() -> Self {
        LabelMap::default()
    }

    /// SemanticKITTI learning classes, with the person/bicyclist classes named
    /// `pedestrian`/`cyclist` to match the detection class names.
    pub fn semantic_kitti() -> Self {
        const NAMES: [&str; 20] = [
            "unlabeled",
            "car",
            "bicycle",
            "motorcycle",
            "truck",
            "other-vehicle",
            "pedestrian",
            "cyclist",
            "motorcyclist",
            "road",
            "parking",
            "sidewalk",
            "other-ground",
            "building",
            "fence",
            "vegetation",
            "trunk",
            "terrain",
            "pole",
            "traffic-sign",
        ];
        let mut map = LabelMap::new();
        for (id, name) in NAMES.iter().enumerate() {
            map.names.insert(id as ClassId, (*name).to_string());
        }
        map
    }

    /// Adds a class. Ids and names must both be unique.
    pub fn insert(&mut self, id: ClassId, name: impl Into<String>) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!(
                "invalid class name {name:?} for id {id}"
            )));
        }
        if let Some(existing) = self.names.get(&id) {
            return Err(Error::Config(format!(
                "class id {id} defined twice ({existing}, {name})"
            )));
        }
        if let Some(other) = self.id_of(&name) {
            return Err(Error::Config(format!(
                "class name {name} used by ids {other} and {id}"
            )));
        }
        self.names.insert(id, name);
        Ok(())
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(&id).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.names
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| *id)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.names.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &str)> {
        self.names.iter().map(|(id, n)| (*id, n.as_str()))
    }

    /// Display name for reports, falling back to the numeric id.
    pub fn display(&self, id: ClassId) -> String {
        self.name(id).map_or_else(|| id.to_string(), str::to_string)
    }

    /// Parses `id name` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = LabelMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(
                    origin,
                    format!("line {}: expected `id name`, got {line:?}", lineno + 1),
                ));
            };
            let id: ClassId = id.parse().map_err(|_| {
                Error::parse(
                    origin,
                    format!("line {}: class id {id:?} is not in 0..=255", lineno + 1),
                )
            })?;
            map.insert(id, name)
                .map_err(|e| Error::parse(origin, format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(map)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, name) in &self.names {
            writeln!(out, "{id} {name}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        let text = "# classes\n0 background\n\n1 car\n6 pedestrian\n";
        let map = LabelMap::parse(text, Path::new("labelmap.txt")).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.id_of("car"), Some(1));
        assert_eq!(map.name(6), Some("pedestrian"));
        assert_eq!(
            LabelMap::parse(&map.to_text(), Path::new("x")).unwrap(),
            map
        );
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        let p = Path::new("l.txt");
        assert!(LabelMap::parse("0 a\n0 b\n", p).is_err());
        assert!(LabelMap::parse("0 a\n1 a\n", p).is_err());
        assert!(LabelMap::parse("300 big\n", p).is_err());
        assert!(LabelMap::parse("1 two words\n", p).is_err());
        assert!(LabelMap::parse("1\n", p)
            .unwrap_err()
            .to_string()
            .contains("line 1"));
    }

    #[test]
    fn default_map_has_detection_classes() {
        let m = LabelMap::semantic_kitti();
        assert_eq!(m.id_of("car"), Some(1));
        assert_eq!(m.id_of("pedestrian"), Some(6));
        assert_eq!(m.id_of("cyclist"), Some(7));
        assert_eq!(m.len(), 20);
    }
}
