//! Bundled 1-degree land/sea grid.
//!
//! 180 rows by 360 columns, row-major from north to south, packed eight
//! cells per byte with the most significant bit first; a set bit is land.
//! Row `r` spans latitudes `(89 - r, 90 - r]` and column `c` spans
//! longitudes `[-180 + c, -179 + c)`. `scripts/gen_landmask.py` regenerates it.

pub const ROWS: usize = 180;
pub const COLS: usize = 360;

static MASK: &[u8; ROWS * COLS / 8] = include_bytes!("../../assets/simulators/landmask.bin");

/// Grid cell containing a point; edges clamp into the grid.
pub fn cell(lon: f64, lat: f64) -> (usize, usize) {
    let row = (90.0 - lat).floor().clamp(0.0, (ROWS - 1) as f64) as usize;
    let col = (lon + 180.0).floor().clamp(0.0, (COLS - 1) as f64) as usize;
    (row, col)
}

pub fn is_land_cell(row: usize, col: usize) -> bool {
    let idx = row * COLS + col;
    MASK[idx / 8] & (0x80 >> (idx % 8)) != 0
}

pub fn is_land(lon: f64, lat: f64) -> bool {
    let (r, c) = cell(lon, lat);
    is_land_cell(r, c)
}

/// "land" or "sea".
pub fn classify(lon: f64, lat: f64) -> &'static str {
    if is_land(lon, lat) {
        "land"
    } else {
        "sea"
    }
}
