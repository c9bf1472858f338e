//! Parsers for the free-form and literal responses of each prompt stage.

use std::collections::BTreeMap;

use super::PipelineError;
use crate::export::CharacterSketch;
use crate::map::literal::{find_dict, find_list, Literal};
use crate::map::{MapError, TileLegend, ANTAGONIST, PROTAGONIST};
use crate::scaling::StructureTemplate;

/// Splits a story into paragraphs on blank lines, dropping title lines
/// (markdown headings or short lines without closing punctuation).
pub fn story_paragraphs(text: &str) -> Vec<String> {
    text.split("\n\n")
        .flat_map(|block| block.split("\r\n\r\n"))
        .map(|block| block.lines().map(str::trim).collect::<Vec<_>>().join(" "))
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .filter(|p| !is_title(p))
        .collect()
}

fn is_title(p: &str) -> bool {
    if p.starts_with('#') {
        return true;
    }
    let ends_sentence = p.ends_with(['.', '!', '?', '"', '\'', '”', '’', ')']);
    !ends_sentence && p.len() < 100
}

pub fn parse_story(text: &str, min: usize, max: usize) -> Result<Vec<String>, PipelineError> {
    let paragraphs = story_paragraphs(text);
    if paragraphs.len() < min || paragraphs.len() > max {
        return Err(PipelineError::MalformedStory(format!(
            "expected {min} to {max} paragraphs, found {}",
            paragraphs.len()
        )));
    }
    Ok(paragraphs)
}

fn strip_decoration(s: &str) -> &str {
    s.trim()
        .trim_start_matches(|c: char| c.is_ascii_digit() || "-*#•.) ".contains(c))
        .trim_matches(|c: char| c == '*' || c == '_' || c.is_whitespace())
}

/// `Name: description` lines, tolerating bullets, numbering and bold marks.
pub fn parse_characters(text: &str) -> Result<Vec<CharacterSketch>, PipelineError> {
    let found: Vec<CharacterSketch> = text
        .lines()
        .filter_map(|line| {
            let (name, description) = line.split_once(':')?;
            let name = strip_decoration(name);
            let description = description.trim().trim_start_matches(['*', ' ']).trim();
            let plausible = !name.is_empty() && name.len() <= 60 && !description.is_empty();
            plausible.then(|| CharacterSketch {
                name: name.to_string(),
                description: description.to_string(),
            })
        })
        .collect();
    if found.is_empty() {
        return Err(PipelineError::ParseFailure {
            stage: "characters".into(),
            message: "no 'name: description' lines".into(),
        });
    }
    Ok(found)
}

/// Picks the protagonist and antagonist by role words in their
/// descriptions, falling back to the first two entries; the rest are NPCs.
pub fn cast_roles(characters: &[CharacterSketch]) -> (String, String, Vec<String>) {
    let find = |words: &[&str]| {
        characters.iter().position(|c| {
            let text = format!("{} {}", c.name, c.description).to_lowercase();
            words.iter().any(|w| text.contains(w))
        })
    };
    let hero = find(&["protagonist", "hero"]).unwrap_or(0);
    let villain = find(&["antagonist", "villain"])
        .filter(|&i| i != hero)
        .or_else(|| (0..characters.len()).find(|&i| i != hero));
    let name = |i: Option<usize>| i.map(|i| characters[i].name.clone()).unwrap_or_default();
    let npcs = (0..characters.len())
        .filter(|&i| i != hero && Some(i) != villain)
        .map(|i| characters[i].name.clone())
        .collect();
    (name(Some(hero)), name(villain), npcs)
}

/// Tile names from a bulleted or numbered list; `Name: detail` lines keep
/// only the name.
pub fn parse_tile_list(text: &str) -> Result<Vec<String>, PipelineError> {
    let names: Vec<String> = text
        .lines()
        .filter(|l| {
            let t = l.trim_start();
            t.starts_with(['-', '*', '•']) || t.chars().next().is_some_and(|c| c.is_ascii_digit())
        })
        .map(|l| strip_decoration(l.split(':').next().unwrap_or(l)).to_string())
        .filter(|n| !n.is_empty())
        .collect();
    if names.is_empty() {
        return Err(PipelineError::ParseFailure {
            stage: "tiles".into(),
            message: "no list items".into(),
        });
    }
    Ok(names)
}

fn literal_char(item: &Literal, legend: Option<&TileLegend>) -> Option<char> {
    let text = item.as_text()?;
    let mut chars = text.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => legend.and_then(|l| l.char_of(text.trim())),
    }
}

/// A list of tile characters, each of which must be in the legend.
pub fn parse_char_list(text: &str, legend: &TileLegend) -> Result<Vec<char>, PipelineError> {
    let items = find_list(text)
        .ok_or_else(|| PipelineError::ParseFailure {
            stage: "list".into(),
            message: "no list literal".into(),
        })?
        .map_err(MapError::from)?;
    let mut out = Vec::new();
    for item in &items {
        let ch = literal_char(item, Some(legend))
            .ok_or_else(|| MapError::Malformed(format!("list item {item:?} is not a tile character")))?;
        if !legend.contains_char(ch) {
            return Err(MapError::UnknownTile(ch).into());
        }
        if !out.contains(&ch) {
            out.push(ch);
        }
    }
    Ok(out)
}

/// One entry of the objective dictionary before repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawObjective {
    pub description: String,
    pub anchor: char,
    pub row: i64,
    pub col: i64,
}

/// `{'description': ['A', row, col], ...}`; `[char, [row, col]]` values
/// are accepted too. Malformed entries are skipped.
pub fn parse_objectives(text: &str) -> Result<Vec<RawObjective>, PipelineError> {
    let entries = find_dict(text).ok_or(MapError::NoDict)?.map_err(MapError::from)?;
    let mut out = Vec::new();
    for (key, value) in &entries {
        let Some(description) = key.as_text() else { continue };
        let Some(parts) = value.as_list() else {
            log::warn!("objective '{description}': value is not a list");
            continue;
        };
        let coords: Option<(i64, i64)> = match parts {
            [_, r, c] => r.as_int().zip(c.as_int()),
            [_, pair] => pair.as_list().and_then(|p| match p {
                [r, c] => r.as_int().zip(c.as_int()),
                _ => None,
            }),
            _ => None,
        };
        let anchor = parts.first().and_then(|a| literal_char(a, None));
        match (anchor, coords) {
            (Some(anchor), Some((row, col))) => out.push(RawObjective {
                description: description.trim().to_string(),
                anchor,
                row,
                col,
            }),
            _ => log::warn!("objective '{description}': expected [tile, row, col]"),
        }
    }
    if out.is_empty() {
        return Err(PipelineError::EmptyObjectives);
    }
    Ok(out)
}

/// Tile characters proposed for scaling, in response order. Names are
/// resolved through the legend; reserved characters are dropped.
pub fn parse_scaling_list(text: &str, legend: &TileLegend) -> Result<Vec<char>, PipelineError> {
    let items = find_list(text)
        .ok_or_else(|| PipelineError::ParseFailure {
            stage: "scaling_tiles".into(),
            message: "no list literal".into(),
        })?
        .map_err(MapError::from)?;
    let mut out = Vec::new();
    for item in &items {
        match literal_char(item, Some(legend)) {
            Some(ch) if ch == PROTAGONIST || ch == ANTAGONIST => {
                log::info!("dropping reserved tile '{ch}' from the scaling list")
            }
            Some(ch) if !out.contains(&ch) => out.push(ch),
            Some(_) => {}
            None => log::warn!("ignoring scaling item {item:?}"),
        }
    }
    Ok(out)
}

/// `{'H': 3, ...}` with integer values.
pub fn parse_sizes(text: &str, legend: &TileLegend) -> Result<BTreeMap<char, i64>, PipelineError> {
    let entries = find_dict(text).ok_or(MapError::NoDict)?.map_err(MapError::from)?;
    Ok(entries
        .iter()
        .filter_map(|(k, v)| Some((literal_char(k, Some(legend))?, v.as_int()?)))
        .collect())
}

/// `{'g': 'grass_block', ...}`; keys may be characters or tile names.
pub fn parse_block_mapping(text: &str, legend: &TileLegend) -> Result<BTreeMap<char, String>, PipelineError> {
    let entries = find_dict(text).ok_or(MapError::NoDict)?.map_err(MapError::from)?;
    let map: BTreeMap<char, String> = entries
        .iter()
        .filter_map(|(k, v)| {
            let ch = literal_char(k, Some(legend))?;
            let block = v.as_text()?.trim().trim_start_matches("minecraft:").to_string();
            (!block.is_empty()).then_some((ch, block))
        })
        .collect();
    if map.is_empty() {
        return Err(MapError::NoDict.into());
    }
    Ok(map)
}

/// The first JSON object in the response, checked against the requested
/// tile and footprint.
pub fn parse_structure(text: &str, tile: char, size: usize) -> Result<StructureTemplate, PipelineError> {
    let fail = |message: String| PipelineError::ParseFailure {
        stage: "structure".into(),
        message,
    };
    let start = text.find('{').ok_or_else(|| fail("no JSON object".into()))?;
    let end = text
        .rfind('}')
        .filter(|&e| e > start)
        .ok_or_else(|| fail("no JSON object".into()))?;
    let template = StructureTemplate::from_json(&text[start..=end]).map_err(|e| fail(e.to_string()))?;
    if template.tile != tile || template.footprint != size {
        return Err(fail(format!(
            "template is for '{}' size {}, wanted '{tile}' size {size}",
            template.tile, template.footprint
        )));
    }
    Ok(template)
}
