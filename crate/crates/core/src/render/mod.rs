//! First-person and top-down observations, plus line-of-sight queries.

pub mod palette;
mod raycast;
mod topdown;
mod visibility;

pub use raycast::{
    cast_columns, render_fp, render_fp_into, ColumnHit, FrameRGB, BEAM_ALPHA, BEAM_WIDTH, FRAME_BYTES,
    FRAME_HEIGHT, FRAME_WIDTH, HUD_ROWS,
};
pub use topdown::{render_topdown, TopDownClass, TopDownObs};
pub use visibility::{line_of_sight, visible_cells, visible_from, CellClass, VisibleSet};

/// Crop radius used for top-down observations on the wire.
pub const WIRE_TOPDOWN_K: usize = 5;
pub const TOPDOWN_BYTES: usize = (2 * WIRE_TOPDOWN_K + 1) * (2 * WIRE_TOPDOWN_K + 1);
