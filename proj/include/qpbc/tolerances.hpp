#pragma once

namespace qpbc::tol {

// Absolute feasibility tolerance shared by the conic backend and all
// LP-based membership tests.
inline constexpr double feas = 1e-8;

// Relative duality-gap tolerance: a solve is optimal when the absolute
// gap is below gap_rel * (1 + |objective|).
inline constexpr double gap_rel = 1e-8;

// Scale factor for PSD checks: a symmetric matrix M counts as PSD when
// its minimum eigenvalue is >= -psd_rel * (1 + ||M||_inf).
inline constexpr double psd_rel = 1e-7;

// Tolerance for equality of two independently solved bound programs
// (two stacked 1e-8-gap solves).
inline constexpr double dual_pair = 1e-5;

// Strict-improvement threshold for vertex descent.
inline constexpr double improve = 1e-9;

// Absolute tolerance when deduplicating enumerated vertices.
inline constexpr double vertex_dedup = 1e-9;

// Relative cutoff for "negative" eigenvalues of Q when building the
// reduced-multiplier bound.
inline constexpr double eig_rel = 1e-8;

// Input symmetry check for instance files.
inline constexpr double input_sym = 1e-12;

inline double psd(double scale) { return psd_rel * (1.0 + scale); }

} // namespace qpbc::tol
