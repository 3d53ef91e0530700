//! No library surface; this crate carries the criterion bench target.
