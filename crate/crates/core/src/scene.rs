//! Static scene layouts and the text scene-file format.
//!
//! A scene file is a small sectioned text document:
//!
//! ```text
//! scene_id = house_01
//! name = Two-room flat
//! cell_size = 0.25
//!
//! [grid]
//! ##########
//! #........#
//! ##########
//!
//! [receptacles]
//! category x0 y0 x1 y1 openable
//! fridge 3 4 4 5 yes
//!
//! [spawns]
//! name x0 y0 x1 y1
//! human 1 1 3 3
//! ```
//!
//! Grid rows use `#` for wall and `.` for floor. Rectangles are inclusive
//! cell coordinates, `x` being the column. Table sections start with a
//! mandatory header row; lines beginning with `//` are comments.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, ErrorCode, Result};
use crate::geom::{Cell, Rect};

pub const MIN_SIDE: usize = 10;
pub const DEFAULT_CELL_SIZE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Floor,
    Wall,
}

/// Rectangular wall/floor map. Serialized as a list of `#`/`.` row strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
}

impl Grid {
    pub fn new(width: usize, height: usize, fill: CellKind) -> Self {
        Grid {
            width,
            height,
            cells: vec![fill; width * height],
        }
    }

    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len();
        if height == 0 {
            bail!(BadScene, "grid has no rows");
        }
        let width = rows[0].as_ref().chars().count();
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                bail!(
                    BadScene,
                    "grid row {y} has {} cells, expected {width} (grid must be rectangular)",
                    row.chars().count()
                );
            }
            for (x, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '#' => CellKind::Wall,
                    '.' => CellKind::Floor,
                    other => bail!(BadScene, "unexpected grid character {other:?} at ({x},{y})"),
                });
            }
        }
        Ok(Grid {
            width,
            height,
            cells,
        })
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|y| {
                self.cells[y * self.width..(y + 1) * self.width]
                    .iter()
                    .map(|k| match k {
                        CellKind::Wall => '#',
                        CellKind::Floor => '.',
                    })
                    .collect()
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn rect_in_bounds(&self, r: &Rect) -> bool {
        self.in_bounds(Cell::new(r.x0, r.y0)) && self.in_bounds(Cell::new(r.x1, r.y1))
    }

    pub fn get(&self, c: Cell) -> Option<CellKind> {
        self.in_bounds(c)
            .then(|| self.cells[c.y as usize * self.width + c.x as usize])
    }

    pub fn set(&mut self, c: Cell, kind: CellKind) {
        if self.in_bounds(c) {
            self.cells[c.y as usize * self.width + c.x as usize] = kind;
        }
    }

    pub fn is_floor(&self, c: Cell) -> bool {
        self.get(c) == Some(CellKind::Floor)
    }

    /// Out-of-bounds cells count as walls.
    pub fn is_wall(&self, c: Cell) -> bool {
        !self.is_floor(c)
    }

    pub fn floor_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32)
            .flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
            .filter(|c| self.is_floor(*c))
    }

    pub fn floor_count(&self) -> usize {
        self.cells.iter().filter(|k| **k == CellKind::Floor).count()
    }

    /// Floor cells 4-reachable from `start`.
    pub fn reachable_from(&self, start: Cell) -> Vec<Cell> {
        let mut seen = vec![false; self.width * self.height];
        let mut out = Vec::new();
        if !self.is_floor(start) {
            return out;
        }
        let mut queue = VecDeque::from([start]);
        seen[start.y as usize * self.width + start.x as usize] = true;
        while let Some(c) = queue.pop_front() {
            out.push(c);
            for n in c.neighbors4() {
                if self.is_floor(n) {
                    let i = n.y as usize * self.width + n.x as usize;
                    if !seen[i] {
                        seen[i] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        out
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        Grid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptacleAnchor {
    pub category: String,
    pub region: Rect,
    pub openable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub name: String,
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_id: String,
    pub name: String,
    pub cell_size: f64,
    pub grid: Grid,
    pub receptacle_anchors: Vec<ReceptacleAnchor>,
    pub spawn_regions: Vec<SpawnRegion>,
}

impl SceneSpec {
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn spawn(&self, name: &str) -> Option<&SpawnRegion> {
        self.spawn_regions.iter().find(|s| s.name == name)
    }

    /// Receptacle object ids paired with their anchors: `{category}_{n}`,
    /// numbered per category in anchor order.
    pub fn receptacle_instances(&self) -> Vec<(String, &ReceptacleAnchor)> {
        let mut counters: std::collections::BTreeMap<&str, usize> = Default::default();
        self.receptacle_anchors
            .iter()
            .map(|a| {
                let n = counters.entry(a.category.as_str()).or_default();
                *n += 1;
                (format!("{}_{}", a.category, n), a)
            })
            .collect()
    }

    pub fn has_receptacle(&self, category: &str) -> bool {
        self.receptacle_anchors.iter().any(|a| a.category == category)
    }

    /// Converts a length in meters to whole cells (rounded down).
    pub fn meters_to_cells(&self, meters: f64) -> i32 {
        (meters / self.cell_size + 1e-9).floor() as i32
    }

    /// Checks every scene invariant, naming the first offending element.
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            bail!(BadScene, "cell_size must be positive, got {}", self.cell_size);
        }
        if self.width() < MIN_SIDE || self.height() < MIN_SIDE {
            bail!(
                BadScene,
                "grid is {}x{}, minimum is {MIN_SIDE}x{MIN_SIDE}",
                self.width(),
                self.height()
            );
        }
        for (i, a) in self.receptacle_anchors.iter().enumerate() {
            if !self.grid.rect_in_bounds(&a.region) {
                bail!(BadScene, "receptacle #{i} ({}) region is out of bounds", a.category);
            }
            if let Some(c) = a.region.cells().find(|c| !self.grid.is_floor(*c)) {
                bail!(
                    BadScene,
                    "receptacle #{i} ({}) region overlaps wall cell {c}",
                    a.category
                );
            }
        }
        for s in &self.spawn_regions {
            if !self.grid.rect_in_bounds(&s.region) {
                bail!(BadScene, "spawn region {} is out of bounds", s.name);
            }
            if !s.region.cells().any(|c| self.grid.is_floor(c)) {
                bail!(BadScene, "spawn region {} has no floor cell", s.name);
            }
        }
        let total = self.grid.floor_count();
        let first = self.grid.floor_cells().next();
        let Some(first) = first else {
            bail!(BadScene, "scene has no floor cells");
        };
        let reached = self.grid.reachable_from(first).len();
        if reached != total {
            let reach: std::collections::HashSet<Cell> =
                self.grid.reachable_from(first).into_iter().collect();
            let stray = self.grid.floor_cells().find(|c| !reach.contains(c)).unwrap();
            bail!(
                BadScene,
                "floor is disconnected: cell {stray} is not reachable from {first}"
            );
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<SceneSpec> {
        parse_scene(text)
    }

    pub fn load(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
        parse_scene(&text).map_err(|e| Error::new(e.code, format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scene_id = {}", self.scene_id);
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "cell_size = {}", self.cell_size);
        out.push_str("\n[grid]\n");
        for row in self.grid.rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out.push_str("\n[receptacles]\ncategory x0 y0 x1 y1 openable\n");
        for a in &self.receptacle_anchors {
            let r = a.region;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                a.category,
                r.x0,
                r.y0,
                r.x1,
                r.y1,
                if a.openable { "yes" } else { "no" }
            );
        }
        out.push_str("\n[spawns]\nname x0 y0 x1 y1\n");
        for s in &self.spawn_regions {
            let r = s.region;
            let _ = writeln!(out, "{} {} {} {} {}", s.name, r.x0, r.y0, r.x1, r.y1);
        }
        out
    }
}

#[derive(PartialEq)]
enum Section {
    Header,
    Grid,
    Receptacles,
    Spawns,
}

fn parse_rect(fields: &[&str], line_no: usize) -> Result<Rect> {
    let nums: Vec<i32> = fields
        .iter()
        .map(|f| {
            f.parse::<i32>()
                .map_err(|_| Error::new(ErrorCode::Parse, format!("line {line_no}: bad coordinate {f:?}")))
        })
        .collect::<Result<_>>()?;
    Ok(Rect::new(nums[0], nums[1], nums[2], nums[3]))
}

fn parse_scene(text: &str) -> Result<SceneSpec> {
    let mut section = Section::Header;
    let mut scene_id = None;
    let mut name = None;
    let mut cell_size = DEFAULT_CELL_SIZE;
    let mut rows: Vec<&str> = Vec::new();
    let mut anchors = Vec::new();
    let mut spawns = Vec::new();
    let mut table_header_seen = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = match trimmed {
                "[grid]" => Section::Grid,
                "[receptacles]" => Section::Receptacles,
                "[spawns]" => Section::Spawns,
                other => bail!(Parse, "line {line_no}: unknown section {other}"),
            };
            table_header_seen = false;
            continue;
        }
        if section != Section::Grid && trimmed.starts_with("//") {
            continue;
        }
        match section {
            Section::Header => {
                let Some((k, v)) = trimmed.split_once('=') else {
                    bail!(Parse, "line {line_no}: expected `key = value`");
                };
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "scene_id" => scene_id = Some(v.to_string()),
                    "name" => name = Some(v.to_string()),
                    "cell_size" => {
                        cell_size = v
                            .parse()
                            .map_err(|_| Error::new(ErrorCode::Parse, format!("line {line_no}: bad cell_size {v:?}")))?
                    }
                    other => bail!(Parse, "line {line_no}: unknown header key {other:?}"),
                }
            }
            Section::Grid => rows.push(trimmed),
            Section::Receptacles | Section::Spawns => {
                let fields: Vec<&str> = trimmed.split_whitespace().collect();
                if !table_header_seen {
                    let expected: &[&str] = if section == Section::Receptacles {
                        &["category", "x0", "y0", "x1", "y1", "openable"]
                    } else {
                        &["name", "x0", "y0", "x1", "y1"]
                    };
                    if fields != expected {
                        bail!(Parse, "line {line_no}: expected table header {:?}", expected.join(" "));
                    }
                    table_header_seen = true;
                    continue;
                }
                if section == Section::Receptacles {
                    if fields.len() != 6 {
                        bail!(Parse, "line {line_no}: receptacle row needs 6 fields");
                    }
                    let openable = match fields[5] {
                        "yes" | "true" => true,
                        "no" | "false" => false,
                        other => bail!(Parse, "line {line_no}: openable must be yes/no, got {other:?}"),
                    };
                    anchors.push(ReceptacleAnchor {
                        category: fields[0].to_string(),
                        region: parse_rect(&fields[1..5], line_no)?,
                        openable,
                    });
                } else {
                    if fields.len() != 5 {
                        bail!(Parse, "line {line_no}: spawn row needs 5 fields");
                    }
                    spawns.push(SpawnRegion {
                        name: fields[0].to_string(),
                        region: parse_rect(&fields[1..5], line_no)?,
                    });
                }
            }
        }
    }

    let scene_id = scene_id.ok_or_else(|| Error::new(ErrorCode::Parse, "missing scene_id"))?;
    let spec = SceneSpec {
        name: name.unwrap_or_else(|| scene_id.clone()),
        scene_id,
        cell_size,
        grid: Grid::from_rows(&rows)?,
        receptacle_anchors: anchors,
        spawn_regions: spawns,
    };
    Ok(spec)
}

/// Loads every `*.scene` file in `dir`, sorted by scene id.
pub fn load_scene_dir(dir: &Path) -> Result<Vec<SceneSpec>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scene"))
        .collect();
    paths.sort();
    let mut scenes = paths
        .iter()
        .map(|p| SceneSpec::load(p))
        .collect::<Result<Vec<_>>>()?;
    scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    Ok(scenes)
}
