//! Rank certification (placeholder).
