//! Radial method-of-lines evolution and diagnostics.
