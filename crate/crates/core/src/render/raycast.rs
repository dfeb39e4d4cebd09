use super::palette::{self, lerp, Rgb, BACKGROUND, CEILING, FLOOR};
use super::visibility::{visible_cells, VisibleSet};
use crate::maze::{Cell, Heading, MazeTask, Pos, SimState};

pub const FRAME_WIDTH: usize = 128;
pub const FRAME_HEIGHT: usize = 128;
pub const FRAME_BYTES: usize = FRAME_WIDTH * FRAME_HEIGHT * 3;
/// Rows at the top of the frame showing the commanded color.
pub const HUD_ROWS: usize = 8;
pub const BEAM_ALPHA: f64 = 0.5;
/// Beam width as a fraction of the cell size.
pub const BEAM_WIDTH: f64 = 1.0 / 3.0;

/// Row-major RGB8 image, `FRAME_WIDTH × FRAME_HEIGHT`.
#[derive(Clone, PartialEq, Eq)]
pub struct FrameRGB {
    pub pixels: Vec<u8>,
}

impl std::fmt::Debug for FrameRGB {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FrameRGB({}x{})", FRAME_WIDTH, FRAME_HEIGHT)
    }
}

impl FrameRGB {
    pub fn blank() -> Self {
        FrameRGB { pixels: vec![0; FRAME_BYTES] }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Option<Self> {
        (bytes.len() == FRAME_BYTES).then_some(FrameRGB { pixels: bytes })
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * FRAME_WIDTH + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * FRAME_WIDTH + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }
}

/// Per-column result of the wall pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnHit {
    pub cell: Pos,
    /// Perpendicular distance to the wall face, meters.
    pub distance: f64,
}

fn heading_vec(h: Heading) -> (f64, f64) {
    // (x = col, y = row)
    let (dr, dc) = h.delta();
    (dc as f64, dr as f64)
}

/// Fraction of the way faded to background at distance `d`.
fn fade(d: f64, range: f64) -> f64 {
    ((d - 0.5 * range) / (0.5 * range)).clamp(0.0, 1.0)
}

/// True when `cell` is visible or touches a visible cell (8-neighbourhood).
fn lit(visible: &VisibleSet, cell: Pos, n: usize) -> bool {
    let (r, c) = (cell.row as isize, cell.col as isize);
    (-1..=1).any(|dr| {
        (-1..=1).any(|dc| {
            let (rr, cc) = (r + dr, c + dc);
            rr >= 0 && cc >= 0 && (rr as usize) < n && (cc as usize) < n
                && visible.contains(Pos::new(rr as usize, cc as usize))
        })
    })
}

/// Casts one ray per column; `None` where no lit wall lies within view
/// range. Walls reached only by grazing past a corner, outside the visible
/// set and its boundary, stay unlit so the frame never shows more of the
/// map than the agents can know.
pub fn cast_columns(task: &MazeTask, state: &SimState) -> Vec<Option<(ColumnHit, f64, bool)>> {
    let cfg = &task.config;
    let visible = visible_cells(task, state);
    let n = task.size() as i64;
    let (dx, dy) = heading_vec(state.heading);
    let tan_half = (cfg.fov_deg.to_radians() * 0.5).tan();
    let (px, py) = (-dy * tan_half, dx * tan_half);
    let (ox, oy) = (state.cell.col as f64 + 0.5, state.cell.row as f64 + 0.5);
    let max_cells = cfg.view_range / cfg.cell_size;

    (0..FRAME_WIDTH)
        .map(|x| {
            let cam = 2.0 * (x as f64 + 0.5) / FRAME_WIDTH as f64 - 1.0;
            let (rx, ry) = (dx + px * cam, dy + py * cam);
            let (mut mx, mut my) = (ox.floor() as i64, oy.floor() as i64);
            let ddx = if rx == 0.0 { f64::INFINITY } else { (1.0 / rx).abs() };
            let ddy = if ry == 0.0 { f64::INFINITY } else { (1.0 / ry).abs() };
            let (step_x, mut side_x) =
                if rx < 0.0 { (-1, (ox - mx as f64) * ddx) } else { (1, (mx as f64 + 1.0 - ox) * ddx) };
            let (step_y, mut side_y) =
                if ry < 0.0 { (-1, (oy - my as f64) * ddy) } else { (1, (my as f64 + 1.0 - oy) * ddy) };
            loop {
                let (dist, vertical) = if side_x < side_y {
                    let d = side_x;
                    side_x += ddx;
                    mx += step_x;
                    (d, true)
                } else {
                    let d = side_y;
                    side_y += ddy;
                    my += step_y;
                    (d, false)
                };
                if dist > max_cells || mx < 0 || my < 0 || mx >= n || my >= n {
                    return None;
                }
                let cell = Pos::new(my as usize, mx as usize);
                if task.cell(cell) == Cell::Wall {
                    if !lit(&visible, cell, n as usize) {
                        return None;
                    }
                    // face coordinate along the wall
                    let u = if vertical { oy + dist * ry } else { ox + dist * rx };
                    let u = u - u.floor();
                    return Some((ColumnHit { cell, distance: dist * cfg.cell_size }, u, vertical));
                }
            }
        })
        .collect()
}

/// First-person view of `state`.
pub fn render_fp(task: &MazeTask, state: &SimState) -> FrameRGB {
    let mut frame = FrameRGB::blank();
    render_fp_into(task, state, &mut frame);
    frame
}

/// Renders into an existing buffer, avoiding allocation in hot loops.
pub fn render_fp_into(task: &MazeTask, state: &SimState, frame: &mut FrameRGB) {
    let cfg = &task.config;
    let (w, h) = (FRAME_WIDTH as f64, FRAME_HEIGHT as f64);
    let horizon = h * 0.5;
    let tan_half = (cfg.fov_deg.to_radians() * 0.5).tan();
    let focal = (w * 0.5) / tan_half;
    let range = cfg.view_range;

    // floor and ceiling depend only on the row
    for y in 0..FRAME_HEIGHT {
        let dy = y as f64 + 0.5 - horizon;
        let color = if dy > 0.0 {
            let d = focal * cfg.view_height / dy;
            if d > range { BACKGROUND } else { lerp(FLOOR, BACKGROUND, fade(d, range)) }
        } else {
            let d = focal * (cfg.ceiling_height - cfg.view_height) / -dy;
            if d > range { BACKGROUND } else { lerp(CEILING, BACKGROUND, fade(d, range)) }
        };
        for x in 0..FRAME_WIDTH {
            frame.set(x, y, color);
        }
    }

    let columns = cast_columns(task, state);
    let mut zbuf = [f64::INFINITY; FRAME_WIDTH];
    for (x, col) in columns.iter().enumerate() {
        let Some((hit, u, _)) = col else { continue };
        let d = hit.distance;
        zbuf[x] = d;
        let top = horizon - focal * (cfg.ceiling_height - cfg.view_height) / d;
        let bottom = horizon + focal * cfg.view_height / d;
        let y0 = top.max(0.0).floor() as usize;
        let y1 = (bottom.ceil().max(0.0) as usize).min(FRAME_HEIGHT);
        let tex = task.texture(hit.cell);
        let f = fade(d, range);
        for y in y0..y1 {
            let yc = y as f64 + 0.5;
            if yc < top || yc >= bottom {
                continue;
            }
            let height = cfg.view_height + (horizon - yc) * d / focal;
            let v = (height / cfg.ceiling_height).clamp(0.0, 0.999_999);
            let c = palette::texel(tex, *u, v);
            frame.set(x, y, if f > 0.0 { lerp(c, BACKGROUND, f) } else { c });
        }
    }

    draw_beams(task, state, frame, &zbuf, focal, tan_half);

    let hud = palette::pnt_color(state.command(task));
    for y in 0..HUD_ROWS {
        for x in 0..FRAME_WIDTH {
            frame.set(x, y, hud);
        }
    }
}

fn draw_beams(task: &MazeTask, state: &SimState, frame: &mut FrameRGB, zbuf: &[f64], focal: f64, tan_half: f64) {
    let cfg = &task.config;
    let cs = cfg.cell_size;
    let (dx, dy) = heading_vec(state.heading);
    let (rx, ry) = (-dy, dx);
    let (ox, oy) = ((state.cell.col as f64 + 0.5) * cs, (state.cell.row as f64 + 0.5) * cs);
    let horizon = FRAME_HEIGHT as f64 * 0.5;

    let mut beams: Vec<(f64, f64, Rgb)> = task
        .pnts
        .iter()
        .filter_map(|p| {
            let (bx, by) = ((p.pos.col as f64 + 0.5) * cs - ox, (p.pos.row as f64 + 0.5) * cs - oy);
            let depth = bx * dx + by * dy;
            let lateral = bx * rx + by * ry;
            (depth > 0.1 * cs && depth <= cfg.view_range).then(|| (depth, lateral, palette::pnt_color(p.color)))
        })
        .collect();
    // back to front
    beams.sort_by(|a, b| b.0.total_cmp(&a.0));

    for (depth, lateral, color) in beams {
        let centre = FRAME_WIDTH as f64 * 0.5 * (1.0 + lateral / (depth * tan_half));
        let half = 0.5 * BEAM_WIDTH * cs * focal / depth;
        let x0 = (centre - half).floor().max(0.0) as usize;
        let x1 = ((centre + half).ceil().max(0.0) as usize).min(FRAME_WIDTH);
        let top = horizon - focal * (cfg.ceiling_height - cfg.view_height) / depth;
        let bottom = horizon + focal * cfg.view_height / depth;
        let y0 = top.max(0.0).floor() as usize;
        let y1 = (bottom.ceil().max(0.0) as usize).min(FRAME_HEIGHT);
        let alpha = BEAM_ALPHA * (1.0 - fade(depth, cfg.view_range));
        for x in x0..x1 {
            let xc = x as f64 + 0.5;
            if xc < centre - half || xc >= centre + half || depth >= zbuf[x] {
                continue;
            }
            for y in y0..y1 {
                let yc = y as f64 + 0.5;
                if yc < top || yc >= bottom {
                    continue;
                }
                let under = frame.get(x, y);
                frame.set(x, y, lerp(under, color, alpha));
            }
        }
    }
}
