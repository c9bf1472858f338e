use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::literal::{self, Literal};
use super::MapError;

pub const PROTAGONIST: char = '@';
pub const ANTAGONIST: char = '#';

/// Candidate characters for tiles added after generation (portals and the
/// like), tried in order until an unused one turns up.
const AUTO_CHARS: &str = "%&*+=~^$!?;<>|0123456789";

/// Injective mapping from tile names to single-character tile codes.
///
/// Insertion order is preserved so that [`TileLegend::render`] and
/// [`parse_legend`] round-trip exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<String, char>", into = "IndexMap<String, char>")]
pub struct TileLegend {
    entries: IndexMap<String, char>,
}

impl TileLegend {
    /// Validates and builds a legend. Requires both reserved characters.
    pub fn new(entries: IndexMap<String, char>) -> Result<Self, MapError> {
        let legend = Self::unchecked(entries)?;
        for reserved in [PROTAGONIST, ANTAGONIST] {
            if !legend.contains_char(reserved) {
                return Err(MapError::MissingReserved(reserved));
            }
        }
        Ok(legend)
    }

    /// Validates injectivity and character shape only; used for sub-map
    /// legends, which have no characters.
    pub fn unchecked(entries: IndexMap<String, char>) -> Result<Self, MapError> {
        let mut seen: IndexMap<char, &str> = IndexMap::new();
        for (name, &ch) in &entries {
            if !valid_tile_char(ch) {
                return Err(MapError::InvalidChar(name.clone()));
            }
            if let Some(first) = seen.insert(ch, name) {
                return Err(MapError::DuplicateChar(first.to_string(), name.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, char)> {
        self.entries.iter().map(|(n, &c)| (n.as_str(), c))
    }

    pub fn char_of(&self, name: &str) -> Option<char> {
        self.entries.get(name).copied()
    }

    pub fn name_of(&self, ch: char) -> Option<&str> {
        self.entries.iter().find(|(_, &c)| c == ch).map(|(n, _)| n.as_str())
    }

    pub fn contains_char(&self, ch: char) -> bool {
        self.entries.values().any(|&c| c == ch)
    }

    pub fn chars(&self) -> BTreeSet<char> {
        self.entries.values().copied().collect()
    }

    /// Adds `name → ch`, rejecting characters already in use.
    pub fn insert(&mut self, name: &str, ch: char) -> Result<(), MapError> {
        if !valid_tile_char(ch) {
            return Err(MapError::InvalidChar(name.to_string()));
        }
        if let Some(existing) = self.name_of(ch) {
            if existing != name {
                return Err(MapError::DuplicateChar(existing.to_string(), name.to_string()));
            }
            return Ok(());
        }
        self.entries.insert(name.to_string(), ch);
        Ok(())
    }

    /// Returns the character for `name`, appending it with the first unused
    /// automatic character when absent.
    pub fn ensure_auto(&mut self, name: &str) -> char {
        if let Some(ch) = self.char_of(name) {
            return ch;
        }
        let ch = AUTO_CHARS
            .chars()
            .chain(('\u{a1}'..='\u{ff}').filter(|c| valid_tile_char(*c)))
            .find(|c| !self.contains_char(*c))
            .expect("legend exhausted automatic characters");
        self.entries.insert(name.to_string(), ch);
        ch
    }

    /// Renders the dictionary-literal wire format, e.g. `{'Grass': 'g'}`.
    pub fn render(&self) -> String {
        let body: Vec<String> = self
            .entries
            .iter()
            .map(|(n, c)| format!("{}: {}", literal::quote(n), literal::quote(&c.to_string())))
            .collect();
        format!("{{{}}}", body.join(", "))
    }
}

impl TryFrom<IndexMap<String, char>> for TileLegend {
    type Error = MapError;

    fn try_from(entries: IndexMap<String, char>) -> Result<Self, Self::Error> {
        Self::unchecked(entries)
    }
}

impl From<TileLegend> for IndexMap<String, char> {
    fn from(legend: TileLegend) -> Self {
        legend.entries
    }
}

pub fn valid_tile_char(ch: char) -> bool {
    !ch.is_whitespace() && !ch.is_control()
}

/// Parses a tile-character mapping from a model response containing a single
/// dictionary literal (`{'Grass': 'g', 'Protagonist': '@', …}`).
pub fn parse_legend(text: &str) -> Result<TileLegend, MapError> {
    let entries = literal::find_dict(text).ok_or(MapError::NoDict)??;
    let mut map = IndexMap::new();
    for (key, value) in entries {
        let name = key
            .as_text()
            .ok_or_else(|| MapError::Malformed(format!("non-text legend key {key:?}")))?;
        let raw = match &value {
            Literal::Str(s) | Literal::Bare(s) => s.clone(),
            Literal::Int(i) => i.to_string(),
            other => return Err(MapError::Malformed(format!("non-text value for {name}: {other:?}"))),
        };
        let mut chars = raw.chars();
        let ch = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(MapError::MultiCharValue(name)),
        };
        map.insert(name, ch);
    }
    TileLegend::new(map)
}
