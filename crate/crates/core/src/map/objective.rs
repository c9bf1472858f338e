use serde::{Deserialize, Serialize};

use super::Pos;

/// The five objective-oriented quest kinds a level can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    DefeatEnemy,
    ChatWithNpc,
    ExitMaze,
    SurviveWaves,
    CollectItems,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 5] = [
        ObjectiveKind::DefeatEnemy,
        ObjectiveKind::ChatWithNpc,
        ObjectiveKind::ExitMaze,
        ObjectiveKind::SurviveWaves,
        ObjectiveKind::CollectItems,
    ];

    /// Classifies a free-text objective by keyword, defaulting to
    /// [`ObjectiveKind::ChatWithNpc`].
    pub fn from_description(description: &str) -> Self {
        const TABLE: &[(ObjectiveKind, &[&str])] = &[
            (
                ObjectiveKind::DefeatEnemy,
                &["defeat", "slay", "vanquish", "overthrow", "kill"],
            ),
            (
                ObjectiveKind::SurviveWaves,
                &["survive", "wave", "dodge", "fend", "withstand"],
            ),
            (
                ObjectiveKind::ExitMaze,
                &["maze", "labyrinth", "navigate", "exit", "escape"],
            ),
            (
                ObjectiveKind::CollectItems,
                &["collect", "gather", "harvest", "sample", "item"],
            ),
            (
                ObjectiveKind::ChatWithNpc,
                &["chat", "talk", "speak", "learn", "ask", "meet"],
            ),
        ];
        let text = description.to_lowercase();
        let words: Vec<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
        TABLE
            .iter()
            .find(|(_, keys)| keys.iter().any(|k| words.iter().any(|w| w.starts_with(k))))
            .map(|(kind, _)| *kind)
            .unwrap_or(ObjectiveKind::ChatWithNpc)
    }

    /// Kinds realised in a separate sub-map reached through a portal.
    pub fn is_submapped(self) -> bool {
        matches!(
            self,
            ObjectiveKind::ExitMaze | ObjectiveKind::SurviveWaves | ObjectiveKind::CollectItems
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            ObjectiveKind::DefeatEnemy => "Defeat the Enemy",
            ObjectiveKind::ChatWithNpc => "Chat with NPC",
            ObjectiveKind::ExitMaze => "Exit Maze",
            ObjectiveKind::SurviveWaves => "Survive Waves of Enemies",
            ObjectiveKind::CollectItems => "Collect Items",
        }
    }
}

/// A quest objective anchored on one map cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub description: String,
    pub kind: ObjectiveKind,
    pub anchor: char,
    pub position: Pos,
}

impl Objective {
    pub fn new(description: impl Into<String>, kind: ObjectiveKind, anchor: char, position: Pos) -> Self {
        Self {
            description: description.into(),
            kind,
            anchor,
            position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StorySpec {
    pub paragraphs: Vec<String>,
    pub n_objectives: usize,
    pub protagonist: String,
    pub antagonist: String,
    pub npcs: Vec<String>,
    pub environment: String,
}

impl StorySpec {
    pub fn text(&self) -> String {
        self.paragraphs.join("\n\n")
    }
}
