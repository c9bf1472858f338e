use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MapError;

/// Zero-based `(row, col)` cell coordinate, origin at the top-left corner.
pub type Pos = (usize, usize);

/// Characters a player may stand on or walk through.
pub type WalkableSet = BTreeSet<char>;

/// A character grid holding a level layout.
///
/// Rows may have different lengths until [`pad_to_rectangle`] has run; every
/// other stage of the toolkit expects a rectangular grid.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TileGrid {
    rows: Vec<Vec<char>>,
}

impl TileGrid {
    pub fn new(rows: Vec<Vec<char>>) -> Self {
        Self { rows }
    }

    /// Builds a rectangular `rows × cols` grid filled with `fill`.
    pub fn filled(rows: usize, cols: usize, fill: char) -> Self {
        Self {
            rows: vec![vec![fill; cols]; rows],
        }
    }

    pub fn from_lines<S: AsRef<str>>(lines: &[S]) -> Self {
        Self {
            rows: lines.iter().map(|l| l.as_ref().chars().collect()).collect(),
        }
    }

    /// Parses the plain-text level format: one row per line, trailing
    /// whitespace stripped, blank trailing lines dropped.
    pub fn from_text(text: &str) -> Self {
        let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        Self::from_lines(&lines)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.area() + self.rows.len());
        for row in &self.rows {
            out.extend(row.iter());
            out.push('\n');
        }
        out
    }

    pub fn row_strings(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.iter().collect()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Length of the longest row.
    pub fn cols(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn row(&self, r: usize) -> &[char] {
        &self.rows[r]
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Number of cells actually present (equals `rows × cols` once rectangular).
    pub fn area(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_rectangular(&self) -> bool {
        let cols = self.cols();
        self.rows.iter().all(|r| r.len() == cols)
    }

    pub fn ensure_rectangular(&self) -> Result<(), MapError> {
        if self.is_rectangular() {
            Ok(())
        } else {
            Err(MapError::NotRectangular)
        }
    }

    pub fn in_bounds(&self, (r, c): Pos) -> bool {
        r < self.rows.len() && c < self.rows[r].len()
    }

    pub fn get(&self, (r, c): Pos) -> Option<char> {
        self.rows.get(r).and_then(|row| row.get(c)).copied()
    }

    /// Overwrites a cell. Panics when `pos` is out of bounds.
    pub fn set(&mut self, (r, c): Pos, ch: char) {
        self.rows[r][c] = ch;
    }

    /// Iterates every present cell in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Pos, char)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &ch)| ((r, c), ch)))
    }

    pub fn find(&self, ch: char) -> Option<Pos> {
        self.cells().find(|&(_, c)| c == ch).map(|(p, _)| p)
    }

    pub fn positions_of(&self, ch: char) -> Vec<Pos> {
        self.cells().filter(|&(_, c)| c == ch).map(|(p, _)| p).collect()
    }

    /// In-bounds 4-neighbours in N, S, W, E order.
    pub fn neighbors(&self, (r, c): Pos) -> impl Iterator<Item = Pos> + '_ {
        let candidates = [
            r.checked_sub(1).map(|nr| (nr, c)),
            Some((r + 1, c)),
            c.checked_sub(1).map(|nc| (r, nc)),
            Some((r, c + 1)),
        ];
        candidates.into_iter().flatten().filter(move |&p| self.in_bounds(p))
    }

    /// Distinct characters present in the grid.
    pub fn charset(&self) -> BTreeSet<char> {
        self.cells().map(|(_, c)| c).collect()
    }

    /// Clamps an arbitrary (possibly out-of-range) coordinate onto the grid.
    pub fn clamp(&self, r: i64, c: i64) -> Option<Pos> {
        if self.is_empty() {
            return None;
        }
        let r = r.clamp(0, self.rows.len() as i64 - 1) as usize;
        let row_len = self.rows[r].len();
        if row_len == 0 {
            return None;
        }
        let c = c.clamp(0, row_len as i64 - 1) as usize;
        Some((r, c))
    }
}

impl fmt::Debug for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.row_strings()).finish()
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Serialize for TileGrid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.row_strings().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TileGrid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(deserializer)?;
        Ok(TileGrid::from_lines(&rows))
    }
}

/// Right-pads every row with `fill` up to the longest row.
pub fn pad_to_rectangle(grid: &TileGrid, fill: char) -> TileGrid {
    let cols = grid.cols();
    let rows = grid
        .rows
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.resize(cols, fill);
            row
        })
        .collect();
    TileGrid { rows }
}

/// Exact per-character occurrence counts.
pub fn tile_frequencies(grid: &TileGrid) -> BTreeMap<char, usize> {
    let mut freqs = BTreeMap::new();
    for (_, ch) in grid.cells() {
        *freqs.entry(ch).or_insert(0) += 1;
    }
    freqs
}

/// The padding filler: the most frequent walkable character, ties going to
/// the lowest code point. Falls back to the most frequent character overall
/// when no walkable character is present.
pub fn default_fill(grid: &TileGrid, walkable: &WalkableSet) -> Option<char> {
    let freqs = tile_frequencies(grid);
    let pick = |allowed: &dyn Fn(char) -> bool| {
        freqs
            .iter()
            .filter(|(c, _)| allowed(**c))
            // BTreeMap iterates in ascending char order, so max_by_key with a
            // reversed tiebreak keeps the lowest code point.
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(c, _)| *c)
    };
    pick(&|c| walkable.contains(&c)).or_else(|| pick(&|_| true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_examples() {
        let g = TileGrid::from_lines(&["abc", "a"]);
        assert_eq!(pad_to_rectangle(&g, 'g').row_strings(), ["abc", "agg"]);

        let rect = TileGrid::from_lines(&["ab", "cd"]);
        assert_eq!(pad_to_rectangle(&rect, 'x'), rect);

        let g = TileGrid::from_lines(&["", "ab"]);
        assert_eq!(pad_to_rectangle(&g, 'x').row_strings(), ["xx", "ab"]);

        assert!(pad_to_rectangle(&TileGrid::default(), 'x').is_empty());
    }

    #[test]
    fn frequency_examples() {
        let f = tile_frequencies(&TileGrid::from_lines(&["gg", "gW"]));
        assert_eq!(f, BTreeMap::from([('g', 3), ('W', 1)]));
        assert!(tile_frequencies(&TileGrid::default()).is_empty());
        let f = tile_frequencies(&TileGrid::filled(15, 15, 'g'));
        assert_eq!(f, BTreeMap::from([('g', 225)]));
    }

    #[test]
    fn fill_prefers_frequent_walkable_then_low_codepoint() {
        let g = TileGrid::from_lines(&["TTTT", "ab", "ba"]);
        let walk: WalkableSet = ['a', 'b'].into();
        assert_eq!(default_fill(&g, &walk), Some('a'));
        let walk: WalkableSet = ['z'].into();
        assert_eq!(default_fill(&g, &walk), Some('T'));
    }

    #[test]
    fn neighbors_in_nswe_order() {
        let g = TileGrid::filled(3, 3, '.');
        let n: Vec<_> = g.neighbors((1, 1)).collect();
        assert_eq!(n, [(0, 1), (2, 1), (1, 0), (1, 2)]);
        let n: Vec<_> = g.neighbors((0, 0)).collect();
        assert_eq!(n, [(1, 0), (0, 1)]);
    }

    #[test]
    fn text_round_trip() {
        let g = TileGrid::from_text("ab  \ncd\n\n");
        assert_eq!(g.row_strings(), ["ab", "cd"]);
        assert_eq!(TileGrid::from_text(&g.to_text()), g);
    }
}
