//! Vessel trajectory extraction from AIS records.
//!
//! The crate covers the full path from raw `!AIVDM`/`!AIVDO` sentences to
//! assessed trajectories:
//!
//! * [`decode`] — NMEA 0183 framing, multipart assembly, and payload decoding
//!   for message types 1/2/3/5/18/24.
//! * [`ingest`] — day-file CSV reading, multi-station deduplication, and
//!   grouping of messages into per-MMSI time-ordered streams.
//! * [`geo`] — haversine distance, bounding boxes, transverse Mercator.
//! * [`filters`] — per-message exclusion (spatial bounds, speed window).
//! * [`metrics`] — pairwise metrics between consecutive messages.
//! * [`quantiles`] — length-binned empirical quantile calibration of the five
//!   split metrics, backed by a mergeable rank-error sketch.
//! * [`splitter`] — split-point detection, singleton removal, and rejoining.
//! * [`baselines`] — two reference extraction methods and a comparison report.
//! * [`assess`] — convex hull area, trajectory complexity, rule recipes.
//! * [`export`] — CSV/GeoJSON trajectory output and density grids.
//!
//! Splitting is data driven: thresholds come from empirical quantiles of the
//! training corpus, binned by ship length as a maneuverability proxy, and a
//! single tail probability `alpha` controls how aggressively streams are cut.

pub mod assess;
pub mod baselines;
pub mod decode;
pub mod export;
pub mod filters;
pub mod geo;
pub mod ingest;
pub mod metrics;
pub mod quantiles;
pub mod splitter;

pub use decode::{AisMessage, VesselStatic};
pub use geo::BoundingBox;
pub use ingest::MessageStream;
pub use quantiles::{LengthBins, QuantileTable, SplitThresholds};
pub use splitter::{TargetShip, Trajectory};
