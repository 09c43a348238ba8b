#pragma once

#include "sticky/matrix.hpp"
#include "sticky/model.hpp"

#include <limits>
#include <span>

namespace sticky {

/// Symmetric eigendecomposition A = U diag(values) U^T.
struct EigenPairs {
    Vector values;  // ascending
    Matrix vectors; // column i pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric positive semidefinite
/// matrix.
///
/// The input is symmetrized as (A + A^T) / 2. Sweeps stop once the
/// off-diagonal Frobenius norm drops to 1e-13 ||A||_F. Structural zeros are
/// preserved: a row/column that is exactly zero yields the matching unit
/// vector with eigenvalue exactly 0.
///
/// Output conventions, fixed so seeds reproduce across runs: eigenvalues
/// ascending (ties keep Jacobi's diagonal order); each eigenvector signed so
/// its largest-magnitude entry is positive, lowest index winning ties;
/// eigenvalues in [-1e-10, 0) clamped to 0.
///
/// Throws NotPsd if any eigenvalue is below -1e-8, std::invalid_argument if
/// A is not square or is asymmetric beyond 1e-12 entrywise.
EigenPairs eigh_symmetric(const Matrix& a);

bool is_strictly_diagonally_dominant(const Matrix& a);

/// Always +infinity when no drift component is nonzero.
inline constexpr double kNoStepConstraint = std::numeric_limits<double>::infinity();

/// Largest h for which finite-difference axis rates are nonnegative at every
/// sample state: min over states and i of (A^ii - sum_{j!=i} |A^ij|) / |mu^i|.
/// Components with mu^i = 0 impose no constraint. Throws NotDominant if A is
/// not strictly diagonally dominant at some sample.
double dominance_threshold(const StickyModel& model, std::span<const State> sample_states);

} // namespace sticky
