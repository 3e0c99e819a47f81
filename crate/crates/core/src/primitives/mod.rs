//! Builders for conditioning primitives: edge maps, one-hot segmentation
//! and their channel stack.

mod edges;
mod encode;
pub(crate) mod io;

pub use edges::{extract_edges, EdgeParams, LUMA_WEIGHTS};
pub use encode::{
    compose_combined, decode_segmentation, encode_segmentation, primitive_to_display,
};
pub use io::{load_edge_map, save_edge_map, PrimitiveFiles};
