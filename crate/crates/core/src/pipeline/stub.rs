//! Offline backend that answers every prompt stage from seeded templates.
//!
//! The theme depends only on the seed; every other choice is drawn from an
//! RNG seeded by the seed and the exchange digest, so identical exchanges
//! get identical answers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backend::{
    exchange_digest, hashed_bag_of_words, BackendError, Message, Role, TextBackend, BAG_OF_WORDS_DIMS,
};
use super::prompts::Stage;
use crate::map::literal::quote;
use crate::map::{parse_grid, Pos, TileGrid, WalkableSet};
use crate::pathfind::{Flood, WalkMap};
use crate::scaling::{StructureTemplate, Voxel};

type Tile = (&'static str, char, &'static str);

struct Theme {
    setting: &'static str,
    hero: (&'static str, &'static str),
    villain: (&'static str, &'static str),
    npcs: [(&'static str, &'static str); 2],
    ground: [Tile; 6],
    features: [Tile; 6],
    structures: [Tile; 2],
    props: [Tile; 2],
    lair: &'static str,
    maze: &'static str,
    creatures: &'static str,
    treasure: &'static str,
    herbs: &'static str,
    artifact: &'static str,
}

const THEMES: [Theme; 3] = [
    Theme {
        setting: "Whispering Vale",
        hero: (
            "Elara",
            "a young ranger in a moss-green cloak who carries a longbow and a lantern",
        ),
        villain: (
            "Vorath",
            "a gaunt sorcerer in a cloak of crow feathers with a staff of black thorns",
        ),
        npcs: [
            ("Miro", "an old farmer with a straw hat and soil-stained hands"),
            ("Oren", "a hermit with a braided grey beard who lives among the ruins"),
        ],
        ground: [
            ("Grass", 'g', "grass_block"),
            ("Meadow", 'm', "moss_block"),
            ("Dirt Path", 'p', "dirt_path"),
            ("Fallen Leaves", 'l', "podzol"),
            ("Clover Patch", 'v', "rooted_dirt"),
            ("Mushroom Ring", 'u', "mycelium"),
        ],
        features: [
            ("Oak Tree", 't', "oak_log"),
            ("Pine Tree", 'n', "spruce_log"),
            ("Boulder", 'b', "stone"),
            ("Pond Water", 'w', "water"),
            ("Bramble Bush", 'r', "oak_leaves"),
            ("Stone Ruin", 's', "mossy_cobblestone"),
        ],
        structures: [("Cottage", 'H', "oak_planks"), ("Watchtower", 'T', "stone_bricks")],
        props: [("Hermit Camp", 'N', "bookshelf"), ("Treasure Chest", 'C', "chest")],
        lair: "Hollow Keep",
        maze: "Thornwood Labyrinth",
        creatures: "shadow wolves",
        treasure: "three moonstones",
        herbs: "healing herbs",
        artifact: "the Bloom of Night",
    },
    Theme {
        setting: "Sunscar Expanse",
        hero: (
            "Kael",
            "a nomad scout wrapped in sand-coloured robes with a curved blade",
        ),
        villain: (
            "Sethra",
            "a sand witch with glass-bead eyes and a cloak of shifting dust",
        ),
        npcs: [
            ("Senora Miro", "a herbalist who tends the last oasis garden"),
            ("Tamsin", "a caravan master with a brass spyglass"),
        ],
        ground: [
            ("Sand", 's', "sand"),
            ("Red Sand", 'r', "red_sand"),
            ("Dune Path", 'p', "smooth_sandstone"),
            ("Dry Grass", 'g', "coarse_dirt"),
            ("Salt Flat", 'f', "white_concrete"),
            ("Oasis Grass", 'o', "grass_block"),
        ],
        features: [
            ("Cactus", 'c', "cactus"),
            ("Sandstone Rock", 'k', "sandstone"),
            ("Oasis Water", 'w', "water"),
            ("Dead Tree", 'd', "stripped_oak_log"),
            ("Bone Pile", 'b', "bone_block"),
            ("Canyon Wall", 'y', "terracotta"),
        ],
        structures: [
            ("Adobe House", 'H', "cut_sandstone"),
            ("Ancient Pyramid", 'P', "chiseled_sandstone"),
        ],
        props: [("Merchant Stall", 'M', "barrel"), ("Relic Chest", 'C', "chest")],
        lair: "Glass Throne",
        maze: "Sand Serpent Dunes labyrinth",
        creatures: "giant scorpions",
        treasure: "samples from the Cactus Gates",
        herbs: "desert sage",
        artifact: "the Sunstone",
    },
    Theme {
        setting: "Frostmere Reach",
        hero: ("Bryn", "a trapper in a white fur coat with a bone-handled axe"),
        villain: ("Malgrim", "the Frost King, towering in armour of blue ice"),
        npcs: [
            ("Old Yuna", "a shaman who reads the northern lights"),
            ("Tor", "a fisher who knows every crack in the frozen lake"),
        ],
        ground: [
            ("Snow", 's', "snow_block"),
            ("Packed Ice", 'i', "packed_ice"),
            ("Tundra Grass", 'g', "grass_block"),
            ("Gravel Path", 'p', "gravel"),
            ("Frozen Moss", 'm', "moss_block"),
            ("Powder Drift", 'd', "calcite"),
        ],
        features: [
            ("Spruce Tree", 't', "spruce_log"),
            ("Ice Spike", 'k', "blue_ice"),
            ("Frozen Lake", 'w', "ice"),
            ("Glacier Rock", 'r', "stone"),
            ("Snowy Bush", 'b', "spruce_leaves"),
            ("Crystal Shard", 'c', "amethyst_block"),
        ],
        structures: [("Longhouse", 'H', "spruce_planks"), ("Ice Tower", 'T', "packed_ice")],
        props: [("Shaman Tent", 'Y', "white_wool"), ("Supply Chest", 'C', "chest")],
        lair: "Palace of Rime",
        maze: "Crevasse Labyrinth",
        creatures: "ice wraiths",
        treasure: "four aurora crystals",
        herbs: "frost lichen",
        artifact: "the Ember Heart",
    },
];

fn objective_templates(t: &Theme) -> Vec<(String, char)> {
    vec![
        (format!("Defeat {} in the {}", t.villain.0, t.lair), '#'),
        (format!("Navigate the {}", t.maze), t.structures[1].1),
        (format!("Survive waves of {}", t.creatures), t.ground[0].1),
        (format!("Collect {}", t.treasure), t.props[1].1),
        (format!("Talk to {} about {}", t.npcs[0].0, t.artifact), t.props[0].1),
        (format!("Gather {}", t.herbs), t.ground[1].1),
        (
            format!("Meet {} at the {}", t.npcs[1].0, t.structures[0].0),
            t.structures[0].1,
        ),
        (format!("Ask {} for the final blessing", t.npcs[0].0), t.props[0].1),
    ]
}

/// Seeded rule-based backend; see the module docs.
#[derive(Debug, Clone)]
pub struct StubBackend {
    seed: u64,
}

impl StubBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn theme(&self) -> &'static Theme {
        &THEMES[(self.seed % THEMES.len() as u64) as usize]
    }

    fn rng_for(&self, prompt: &str, history: &[Message]) -> ChaCha8Rng {
        let digest = exchange_digest(prompt, history);
        let salt = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
        ChaCha8Rng::seed_from_u64(self.seed ^ salt)
    }
}

fn number_after(text: &str, prefix: &str) -> Option<usize> {
    let rest = &text[text.find(prefix)? + prefix.len()..];
    let token: String = rest
        .trim_start()
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-')
        .collect();
    token.rsplit('-').next()?.parse().ok()
}

fn all_tiles(t: &Theme) -> impl Iterator<Item = &Tile> {
    t.ground.iter().chain(&t.features).chain(&t.structures).chain(&t.props)
}

fn story(t: &Theme, paragraphs: usize, objectives: usize) -> String {
    let goals = objective_templates(t);
    let listed: Vec<String> = (0..objectives)
        .map(|i| goals[i % goals.len()].0.to_lowercase())
        .collect();
    let mut parts = vec![
        format!(
            "In the {}, {}, a wanderer of the borderlands, learns that {} has stolen {} and plans to drown the land in endless night. \
             The villagers have lost hope, so {} sets out with a lantern and a worn map, knowing there are {} tasks ahead before the land is safe.",
            t.setting, t.hero.0, t.villain.0, t.artifact, t.hero.0, objectives
        ),
        format!(
            "First {} must {} and {}. The paths wind between {} and {}, and every step is watched by the servants of {}.",
            t.hero.0, listed[1 % listed.len()], listed[2 % listed.len()],
            t.features[0].0.to_lowercase(), t.features[3].0.to_lowercase(), t.villain.0
        ),
        format!(
            "Along the way {} meets {}, {}, and {}, {}. Their advice is simple: {} and {}.",
            t.hero.0, t.npcs[0].0, t.npcs[0].1, t.npcs[1].0, t.npcs[1].1,
            listed[3 % listed.len()], listed[4 % listed.len()]
        ),
        format!(
            "The journey grows harder near the {}. To prepare, {} will {}, {} and {}, gathering the courage for the final battle.",
            t.lair, t.hero.0, listed[5 % listed.len()], listed[6 % listed.len()], listed[7 % listed.len()]
        ),
        format!(
            "At last {} faces {} and must {}. With {} recovered, the {} wakes from its long night and the villagers return to their fields.",
            t.hero.0, t.villain.0, listed[0], t.artifact, t.setting
        ),
        format!(
            "Years later the people of the {} still tell how {} walked past the {} and the {} without fear.",
            t.setting, t.hero.0, t.structures[0].0.to_lowercase(), t.structures[1].0.to_lowercase()
        ),
    ];
    parts.truncate(paragraphs.clamp(1, parts.len()));
    parts.join("\n\n")
}

fn characters(t: &Theme) -> String {
    let mut lines = vec![
        format!("{}: the protagonist, {}.", t.hero.0, t.hero.1),
        format!("{}: the antagonist, {}.", t.villain.0, t.villain.1),
    ];
    lines.extend(t.npcs.iter().map(|(n, d)| format!("{n}: {d}.")));
    format!("Here are the characters:\n\n{}", lines.join("\n"))
}

fn legend_text(t: &Theme) -> String {
    let mut entries = vec![
        format!("{}: '@'", quote("Protagonist")),
        format!("{}: '#'", quote("Antagonist")),
    ];
    entries.extend(all_tiles(t).map(|(n, c, _)| format!("{}: {}", quote(n), quote(&c.to_string()))));
    format!("{{{}}}", entries.join(", "))
}

fn walkable_of(t: &Theme) -> WalkableSet {
    t.ground.iter().map(|g| g.1).collect()
}

/// Voronoi patches of ground tiles, clusters of obstacles that never split
/// the walkable area, and a few single-cell structures.
fn world(t: &Theme, rng: &mut ChaCha8Rng) -> TileGrid {
    let rows = rng.gen_range(18..=22);
    let cols = rng.gen_range(18..=24);
    let seeds: Vec<(Pos, char)> = (0..10)
        .map(|i| {
            (
                (rng.gen_range(0..rows), rng.gen_range(0..cols)),
                t.ground[i % t.ground.len()].1,
            )
        })
        .collect();
    let mut grid = TileGrid::filled(rows, cols, t.ground[0].1);
    for r in 0..rows {
        for c in 0..cols {
            let nearest = seeds
                .iter()
                .min_by_key(|((sr, sc), _)| sr.abs_diff(r) + sc.abs_diff(c))
                .expect("seeds");
            grid.set((r, c), nearest.1);
        }
    }
    let walkable = walkable_of(t);
    let mut blocked = 0;
    let target = rows * cols * 22 / 100;
    let mut tries = 0;
    while blocked < target && tries < 400 {
        tries += 1;
        let feature = t.features[rng.gen_range(0..t.features.len())].1;
        let mut at = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        for _ in 0..rng.gen_range(2..=7) {
            if blocked >= target {
                break;
            }
            if try_block(&mut grid, &walkable, at, feature) {
                blocked += 1;
            }
            let (dr, dc) = [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)][rng.gen_range(0..4)];
            at = (
                (at.0 as i64 + dr).clamp(0, rows as i64 - 1) as usize,
                (at.1 as i64 + dc).clamp(0, cols as i64 - 1) as usize,
            );
        }
    }
    for &(_, ch, _) in &t.structures {
        let mut placed = 0;
        while placed < 3 {
            let at = (rng.gen_range(2..rows - 2), rng.gen_range(2..cols - 2));
            if try_block(&mut grid, &walkable, at, ch) {
                placed += 1;
            }
        }
    }
    grid
}

fn try_block(grid: &mut TileGrid, walkable: &WalkableSet, at: Pos, ch: char) -> bool {
    let before = grid.get(at).expect("in bounds");
    if !walkable.contains(&before) {
        return false;
    }
    grid.set(at, ch);
    let walk = WalkMap::from_grid(grid, walkable);
    let open = walk.area() - walk.impassable_count();
    let Some(seed) = grid.cells().find(|(p, _)| walk.is_passable(*p)).map(|(p, _)| p) else {
        grid.set(at, before);
        return false;
    };
    if Flood::from(&walk, seed).flooded_count() == open {
        true
    } else {
        grid.set(at, before);
        false
    }
}

fn latest_grid(history: &[Message]) -> Option<TileGrid> {
    history
        .iter()
        .rev()
        .filter(|m| m.role == Role::Assistant)
        .find_map(|m| parse_grid(&m.content).ok())
}

fn objectives(t: &Theme, history: &[Message], rng: &mut ChaCha8Rng) -> String {
    let n = history
        .iter()
        .find(|m| m.role == Role::User)
        .and_then(|m| number_after(&m.content, "There should be"))
        .unwrap_or(8);
    let grid = latest_grid(history).unwrap_or_else(|| TileGrid::filled(10, 10, t.ground[0].1));
    let walkable = walkable_of(t);
    let goals = objective_templates(t);
    let entries: Vec<String> = (0..n)
        .map(|i| {
            let (desc, anchor) = &goals[i % goals.len()];
            let desc = if i < goals.len() {
                desc.clone()
            } else {
                format!("{desc} ({})", i / goals.len() + 1)
            };
            let mut cells = grid.positions_of(*anchor);
            if cells.is_empty() {
                cells = grid
                    .cells()
                    .filter(|(_, c)| walkable.contains(c))
                    .map(|(p, _)| p)
                    .collect();
            }
            let (r, c) = cells.choose(rng).copied().unwrap_or((0, 0));
            format!("{}: [{}, {r}, {c}]", quote(&desc), quote(&anchor.to_string()))
        })
        .collect();
    format!("{{{}}}", entries.join(", "))
}

fn structure(t: &Theme, prompt: &str) -> String {
    let tile = prompt
        .find("(notation '")
        .and_then(|i| prompt[i + 11..].chars().next())
        .unwrap_or('H');
    let size = number_after(prompt, "occupies a").unwrap_or(2).max(1);
    let block = all_tiles(t)
        .find(|x| x.1 == tile)
        .map(|x| x.2)
        .unwrap_or("stone_bricks");
    let s = size as i32;
    let door = (size - 1, size / 2);
    let height = if tile == t.structures[1].1 { 4 } else { 2 };
    let mut voxels = Vec::new();
    for z in 0..s {
        for x in 0..s {
            voxels.push(Voxel {
                x,
                y: 0,
                z,
                block: "cobblestone".into(),
            });
            let border = x == 0 || z == 0 || x == s - 1 || z == s - 1;
            if border && (z as usize, x as usize) != door {
                for y in 1..=height {
                    voxels.push(Voxel {
                        x,
                        y,
                        z,
                        block: block.into(),
                    });
                }
            }
            voxels.push(Voxel {
                x,
                y: height + 1,
                z,
                block: "dark_oak_planks".into(),
            });
        }
    }
    let template = StructureTemplate {
        tile,
        footprint: size,
        entrances: vec![door],
        voxels,
    };
    format!(
        "```json\n{}\n```",
        serde_json::to_string(&template).expect("template serializes")
    )
}

fn block_mapping(t: &Theme) -> String {
    let mut entries = vec!["'@': 'emerald_block'".to_string(), "'#': 'redstone_block'".to_string()];
    entries.extend(all_tiles(t).map(|(_, c, b)| format!("{}: {}", quote(&c.to_string()), quote(b))));
    format!("{{{}}}", entries.join(", "))
}

fn reconstruction(prompt: &str) -> String {
    let json = match (prompt.find('['), prompt.rfind(']')) {
        (Some(a), Some(b)) if b > a => &prompt[a..=b],
        _ => "[]",
    };
    let voxels: Vec<Voxel> = serde_json::from_str(json).unwrap_or_default();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &voxels {
        *counts.entry(v.block.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let names: Vec<String> = ranked.iter().take(6).map(|(b, _)| b.replace('_', " ")).collect();
    format!(
        "A traveller crosses a land of {}. Near its heart stand buildings of {}, and a lone hero must reach \
         every corner of it to defeat the villain who rules there.",
        names.first().cloned().unwrap_or_else(|| "empty plains".into()),
        if names.len() > 1 {
            names[1..].join(", ")
        } else {
            "stone".into()
        }
    )
}

impl TextBackend for StubBackend {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        let t = self.theme();
        let mut rng = self.rng_for(prompt, history);
        let text = match Stage::classify(prompt) {
            Some(Stage::Story) => story(
                t,
                number_after(prompt, "Write a").unwrap_or(5),
                number_after(prompt, "There should be").unwrap_or(8),
            ),
            Some(Stage::Characters) => characters(t),
            Some(Stage::Tiles) => {
                let lines: Vec<String> = all_tiles(t).map(|(n, _, _)| format!("- {n}")).collect();
                format!("Tiles for the {}:\n{}", t.setting, lines.join("\n"))
            }
            Some(Stage::Legend) => legend_text(t),
            Some(Stage::Walkable) => {
                let chars: Vec<String> = t.ground.iter().map(|g| quote(&g.1.to_string())).collect();
                format!("[{}]", chars.join(", "))
            }
            Some(Stage::Important) => {
                let chars: Vec<String> = t
                    .structures
                    .iter()
                    .chain(&t.props)
                    .map(|x| quote(&x.1.to_string()))
                    .collect();
                format!("[{}]", chars.join(", "))
            }
            Some(Stage::World) => format!("Here is the world:\n```\n{}\n```", world(t, &mut rng).to_text()),
            Some(Stage::Objectives) => objectives(t, history, &mut rng),
            Some(Stage::Critique) => format!(
                "The map fits the story well: the {} and the {} give the {} a clear identity, and the objectives are spread across it.",
                t.structures[0].0, t.structures[1].0, t.setting
            ),
            Some(Stage::ScalingTiles) => format!("[{}, {}]", t.structures[0].1, t.structures[1].1),
            Some(Stage::ScalingSizes) => format!(
                "{{{}: {}, {}: {}}}",
                quote(&t.structures[0].1.to_string()),
                rng.gen_range(2..=3),
                quote(&t.structures[1].1.to_string()),
                rng.gen_range(2..=3)
            ),
            Some(Stage::Structure) => structure(t, prompt),
            Some(Stage::BlockMapping) => block_mapping(t),
            Some(Stage::Reconstruction) => reconstruction(prompt),
            Some(Stage::Embed) | None => "I am not sure what you are asking for.".to_string(),
        };
        Ok(text)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(hashed_bag_of_words(text, BAG_OF_WORDS_DIMS))
    }
}
