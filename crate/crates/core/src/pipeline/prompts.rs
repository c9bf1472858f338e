//! Prompt templates and the stage each prompt belongs to.

use serde::{Deserialize, Serialize};

/// Bumped whenever any template text changes; replay fixtures are keyed by
/// prompt digests and go stale with it.
pub const PROMPTS_VERSION: &str = "1";

pub const STORY: &str = include_str!("../../prompts/story.txt");
pub const CHARACTERS: &str = include_str!("../../prompts/characters.txt");
pub const TILES: &str = include_str!("../../prompts/tiles.txt");
pub const LEGEND: &str = include_str!("../../prompts/legend.txt");
pub const WALKABLE: &str = include_str!("../../prompts/walkable.txt");
pub const IMPORTANT: &str = include_str!("../../prompts/important.txt");
pub const WORLD: &str = include_str!("../../prompts/world.txt");
pub const WORLD_REFINE: &str = include_str!("../../prompts/world_refine.txt");
pub const OBJECTIVES: &str = include_str!("../../prompts/objectives.txt");
pub const CRITIQUE: &str = include_str!("../../prompts/critique.txt");
pub const SCALING: &str = include_str!("../../prompts/scaling.txt");
pub const SIZES: &str = include_str!("../../prompts/sizes.txt");
pub const STRUCTURE: &str = include_str!("../../prompts/structure.txt");
pub const BLOCKS: &str = include_str!("../../prompts/blocks.txt");
pub const RECONSTRUCT: &str = include_str!("../../prompts/reconstruct.txt");
pub const RETRY: &str = include_str!("../../prompts/retry.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Story,
    Characters,
    Tiles,
    Legend,
    Walkable,
    Important,
    World,
    Objectives,
    Critique,
    ScalingTiles,
    ScalingSizes,
    Structure,
    BlockMapping,
    Reconstruction,
    Embed,
}

impl Stage {
    pub const PROMPTED: [Stage; 14] = [
        Stage::Story,
        Stage::Characters,
        Stage::Tiles,
        Stage::Legend,
        Stage::Walkable,
        Stage::Important,
        Stage::World,
        Stage::Objectives,
        Stage::Critique,
        Stage::ScalingTiles,
        Stage::ScalingSizes,
        Stage::Structure,
        Stage::BlockMapping,
        Stage::Reconstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Story => "story",
            Stage::Characters => "characters",
            Stage::Tiles => "tiles",
            Stage::Legend => "legend",
            Stage::Walkable => "walkable",
            Stage::Important => "important",
            Stage::World => "world",
            Stage::Objectives => "objectives",
            Stage::Critique => "critique",
            Stage::ScalingTiles => "scaling_tiles",
            Stage::ScalingSizes => "scaling_sizes",
            Stage::Structure => "structure",
            Stage::BlockMapping => "block_mapping",
            Stage::Reconstruction => "reconstruction",
            Stage::Embed => "embed",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::PROMPTED
            .into_iter()
            .chain([Stage::Embed])
            .find(|s| s.name() == name)
    }

    fn marker(self) -> &'static str {
        match self {
            Stage::Story => "paragraph story which has characters",
            Stage::Characters => "Write a specific description of each character",
            Stage::Tiles => "Create an exhaustive list of tiles",
            Stage::Legend => "Imagine each tile maps to an alphabet",
            Stage::Walkable => "which tiles can the protagonist walk on",
            Stage::Important => "which tile characters are important to place",
            Stage::World => "Create an entire world on a tile-based grid",
            Stage::Objectives => "You are a great planner in 2D game",
            Stage::Critique => "Please assess how coherent the map is with the story",
            Stage::ScalingTiles => "identify which tile notations in the map need to be scaled",
            Stage::ScalingSizes => "decide how many grid cells wide each structure should be",
            Stage::Structure => "Design a Minecraft structure for the tile",
            Stage::BlockMapping => "Map every tile character to a Minecraft block",
            Stage::Reconstruction => "Write the story this level was built to tell",
            Stage::Embed => "",
        }
    }

    /// Recognises which template a prompt was rendered from. Templates that
    /// embed free text (story, block dumps) are checked first.
    pub fn classify(prompt: &str) -> Option<Stage> {
        const ORDER: [Stage; 14] = [
            Stage::Critique,
            Stage::Reconstruction,
            Stage::Structure,
            Stage::World,
            Stage::ScalingTiles,
            Stage::ScalingSizes,
            Stage::BlockMapping,
            Stage::Walkable,
            Stage::Important,
            Stage::Objectives,
            Stage::Legend,
            Stage::Tiles,
            Stage::Characters,
            Stage::Story,
        ];
        ORDER.into_iter().find(|s| prompt.contains(s.marker()))
    }
}

/// Substitutes `{key}` placeholders in one pass, so substituted text is
/// never re-scanned. Unknown placeholders are left as written.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = tail.find('}').and_then(|close| {
            let key = &tail[..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders a list of tile chars as a Python list literal.
pub fn char_list(chars: &[char]) -> String {
    let items: Vec<String> = chars
        .iter()
        .map(|c| crate::map::literal::quote(&c.to_string()))
        .collect();
    format!("[{}]", items.join(", "))
}

pub fn retry(prompt: &str, error: &str) -> String {
    let mut text = render(RETRY, &[("error", error)]);
    text.push_str(prompt);
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_count_substitution() {
        let p = render(STORY, &[("paragraphs", "4-5"), ("objectives", "3")]);
        assert!(p.contains("3 objectives"));
        assert!(p.starts_with("Write a 4-5 paragraph story"));
    }

    #[test]
    fn single_pass_substitution() {
        let p = render("{a} and {b} and {c}", &[("a", "{b}"), ("b", "x")]);
        assert_eq!(p, "{b} and x and {c}");
    }

    #[test]
    fn every_template_classifies_to_its_stage() {
        let cases = [
            (STORY, Stage::Story),
            (CHARACTERS, Stage::Characters),
            (TILES, Stage::Tiles),
            (LEGEND, Stage::Legend),
            (WALKABLE, Stage::Walkable),
            (IMPORTANT, Stage::Important),
            (WORLD, Stage::World),
            (OBJECTIVES, Stage::Objectives),
            (CRITIQUE, Stage::Critique),
            (SCALING, Stage::ScalingTiles),
            (SIZES, Stage::ScalingSizes),
            (STRUCTURE, Stage::Structure),
            (BLOCKS, Stage::BlockMapping),
            (RECONSTRUCT, Stage::Reconstruction),
        ];
        for (template, stage) in cases {
            assert_eq!(Stage::classify(template), Some(stage), "{stage:?}");
            assert_eq!(Stage::classify(&retry(template, "bad")), Some(stage));
            assert_eq!(Stage::from_name(stage.name()), Some(stage));
        }
        assert_eq!(Stage::classify("hello"), None);
    }

    #[test]
    fn char_lists() {
        assert_eq!(char_list(&['g', '\'']), r"['g', '\'']");
    }
}
