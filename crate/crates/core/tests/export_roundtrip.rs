use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use storyforge::export::{
    export_block_json, import_block_json, render_grid, BlockWorld, ExportError, LevelBundle, RenderStyle,
    DEFAULT_CELL_SIZE, SCHEMA_VERSION,
};
use storyforge::map::TileGrid;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/golden/forest-01-seed7")
        .join(name)
}

#[test]
fn golden_bundle_round_trips_byte_for_byte() {
    let text = fs::read_to_string(golden("bundle.json")).unwrap();
    let bundle = LevelBundle::from_json(&text).unwrap();
    assert_eq!(bundle.schema_version, SCHEMA_VERSION);
    assert_eq!(bundle.to_json(), text);
}

#[test]
fn golden_blocks_round_trip_and_match_bundle() {
    let text = fs::read_to_string(golden("blocks.json")).unwrap();
    let world = import_block_json(&text).unwrap();
    assert_eq!(export_block_json(&world), text);
    let bundle = LevelBundle::from_json(&fs::read_to_string(golden("bundle.json")).unwrap()).unwrap();
    assert_eq!(world, bundle.blocks);
}

#[test]
fn golden_render_is_reproduced() {
    let bundle = LevelBundle::from_json(&fs::read_to_string(golden("bundle.json")).unwrap()).unwrap();
    let ppm = bundle.render(RenderStyle::Tiles, DEFAULT_CELL_SIZE).unwrap().to_ppm();
    assert_eq!(ppm, fs::read(golden("render.ppm")).unwrap());
}

#[test]
fn schema_version_is_checked() {
    let text = fs::read_to_string(golden("bundle.json")).unwrap();
    let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert_eq!(LevelBundle::from_json(&bumped), Err(ExportError::SchemaVersion(99)));
}

#[test]
fn render_header_and_size() {
    let grid = TileGrid::from_lines(&["ab", "ba", "cc"]);
    let raster = render_grid(&grid, 4).unwrap();
    let ppm = raster.to_ppm();
    assert!(ppm.starts_with(b"P6\n8 12\n255\n"));
    assert_eq!(ppm.len(), "P6\n8 12\n255\n".len() + 8 * 12 * 3);
    assert_eq!(raster.pixel(0, 0), raster.pixel(4, 4));
    assert_ne!(raster.pixel(0, 0), raster.pixel(4, 0));
}

fn world_strategy() -> impl Strategy<Value = Vec<(i32, i32, i32, String)>> {
    prop::collection::vec((-20i32..20, -5i32..10, -20i32..20, "[a-z_]{1,12}"), 0..60)
}

proptest! {
    #[test]
    fn block_json_round_trips(voxels in world_strategy()) {
        let mut world = BlockWorld::new();
        for (x, y, z, b) in &voxels {
            if world.get(*x, *y, *z).is_none() {
                world.insert(*x, *y, *z, b).unwrap();
            }
        }
        let text = export_block_json(&world);
        let back = import_block_json(&text).unwrap();
        prop_assert_eq!(&back, &world);
        prop_assert_eq!(export_block_json(&back), text);
        let value: serde_json::Value = serde_json::from_str(&export_block_json(&world)).unwrap();
        let records = value.as_array().unwrap();
        prop_assert_eq!(records.len(), world.len());
        for r in records {
            let keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).collect();
            prop_assert_eq!(keys.len(), 4);
            for k in ["x", "y", "z", "block"] {
                prop_assert!(keys.contains(&k));
            }
        }
    }
}
