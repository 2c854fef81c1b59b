//! Ring interaction sums (placeholder).
