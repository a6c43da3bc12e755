//! Integer grid geometry: cells, rectangles, headings and line of sight.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A grid cell. `x` is the column, `y` the row (row 0 at the top).
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    /// Squared euclidean distance in cells.
    pub fn dist2(self, other: Cell) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    /// 4-neighbourhood in lexicographic (x, y) order.
    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(-1, 0),
            self.offset(0, -1),
            self.offset(0, 1),
            self.offset(1, 0),
        ]
    }

    /// 8-neighbourhood in lexicographic (x, y) order.
    pub fn neighbors8(self) -> [Cell; 8] {
        [
            self.offset(-1, -1),
            self.offset(-1, 0),
            self.offset(-1, 1),
            self.offset(0, -1),
            self.offset(0, 1),
            self.offset(1, -1),
            self.offset(1, 0),
            self.offset(1, 1),
        ]
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Rect {
            x0: x0.min(x1),
            y0: y0.min(y1),
            x1: x0.max(x1),
            y1: y0.max(y1),
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x <= self.x1 && c.y >= self.y0 && c.y <= self.y1
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        (self.width() * self.height()) as usize
    }

    pub fn center(&self) -> Cell {
        Cell::new((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }

    /// Cells in row-major order (y outer, x inner).
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
    }

    /// The one-cell ring surrounding the rectangle, row-major.
    pub fn ring(&self) -> impl Iterator<Item = Cell> + '_ {
        let outer = Rect::new(self.x0 - 1, self.y0 - 1, self.x1 + 1, self.y1 + 1);
        let inner = *self;
        (outer.y0..=outer.y1)
            .flat_map(move |y| (outer.x0..=outer.x1).map(move |x| Cell::new(x, y)))
            .filter(move |c| !inner.contains(*c))
    }

    /// Chebyshev distance from `c` to the nearest cell of the rectangle.
    pub fn chebyshev_to(&self, c: Cell) -> i32 {
        let dx = (self.x0 - c.x).max(c.x - self.x1).max(0);
        let dy = (self.y0 - c.y).max(c.y - self.y1).max(0);
        dx.max(dy)
    }

    /// Nearest member cell to `c` by Chebyshev distance, ties lexicographic.
    pub fn nearest_cell(&self, c: Cell) -> Cell {
        Cell::new(c.x.clamp(self.x0, self.x1), c.y.clamp(self.y0, self.y1))
    }
}

/// Yaw in degrees, always one of 0, 45, ..., 315. 0 points along +x, 90 along +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Heading(u16);

impl Heading {
    pub fn new(deg: i32) -> Option<Heading> {
        if deg.rem_euclid(45) != 0 {
            return None;
        }
        Some(Heading(deg.rem_euclid(360) as u16))
    }

    pub fn degrees(self) -> i32 {
        self.0 as i32
    }

    pub fn rotated(self, dtheta: i32) -> Option<Heading> {
        if dtheta % 45 != 0 {
            return None;
        }
        Heading::new(self.degrees() + dtheta)
    }

    /// Unit direction in cells (diagonals are (±1, ±1)).
    pub fn direction(self) -> (i32, i32) {
        match self.0 {
            0 => (1, 0),
            45 => (1, 1),
            90 => (0, 1),
            135 => (-1, 1),
            180 => (-1, 0),
            225 => (-1, -1),
            270 => (0, -1),
            _ => (1, -1),
        }
    }

    /// Heading closest to the direction (dx, dy); `None` for the zero vector.
    pub fn toward(dx: i32, dy: i32) -> Option<Heading> {
        if dx == 0 && dy == 0 {
            return None;
        }
        let deg = (dy as f64).atan2(dx as f64).to_degrees();
        let snapped = ((deg / 45.0).round() as i32) * 45;
        Heading::new(snapped)
    }

    /// Whether direction (dx, dy) lies within `fov_deg` centred on this heading.
    /// The zero vector is always inside.
    pub fn sees(self, dx: i32, dy: i32, fov_deg: f64) -> bool {
        if dx == 0 && dy == 0 {
            return true;
        }
        let (hx, hy) = self.direction();
        let (hx, hy) = (hx as f64, hy as f64);
        let (vx, vy) = (dx as f64, dy as f64);
        let cos = (hx * vx + hy * vy) / ((hx * hx + hy * hy).sqrt() * (vx * vx + vy * vy).sqrt());
        let half = (fov_deg / 2.0).to_radians().cos();
        cos >= half - 1e-12
    }
}

impl TryFrom<i32> for Heading {
    type Error = String;
    fn try_from(v: i32) -> Result<Self, Self::Error> {
        Heading::new(v).ok_or_else(|| format!("heading {v} is not a multiple of 45"))
    }
}

impl From<Heading> for i32 {
    fn from(h: Heading) -> i32 {
        h.degrees()
    }
}

/// Bresenham line from `a` to `b`, endpoints included.
fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let mut out = Vec::new();
    let (mut x, mut y) = (a.x, a.y);
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        out.push(Cell::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// The cells strictly between `a` and `b` on the grid line joining them.
/// The line is always traced from the lexicographically smaller endpoint so
/// that `line_between(a, b) == line_between(b, a)` as sets.
pub fn line_between(a: Cell, b: Cell) -> Vec<Cell> {
    let (p, q) = if a <= b { (a, b) } else { (b, a) };
    let mut line = bresenham(p, q);
    if line.len() <= 2 {
        return Vec::new();
    }
    line.pop();
    line.remove(0);
    line
}

/// Symmetric line of sight: no blocking cell strictly between the endpoints.
pub fn line_of_sight(a: Cell, b: Cell, blocks: impl Fn(Cell) -> bool) -> bool {
    line_between(a, b).into_iter().all(|c| !blocks(c))
}
