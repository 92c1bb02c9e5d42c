//! Page geometry: clustering text elements into utterances, bounding boxes,
//! and reading order.

mod optics;
mod order;

pub use optics::{
    cluster_boxes, optics_cluster, optics_ordering, ClusterParams, Clustering, OpticsOrdering,
    Point2,
};
pub use order::{estimate_reading_order, order_disagreement, xy_cut_order, OrderedRegions};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("invalid cluster parameters: {0}")]
    InvalidParams(&'static str),
    #[error("point {0} is not finite and nonnegative")]
    InvalidPoint(usize),
}
