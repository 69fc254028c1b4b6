#pragma once

#include <stdexcept>

namespace smearfm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input shape / content problems.
struct DimensionMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Geometric degeneracies.
struct DegenerateLine : Error { using Error::Error; };
struct DegenerateMotion : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct RankDeficientConstraints : Error { using Error::Error; };
struct AllDegenerate : Error { using Error::Error; };
struct AllHypothesesDegenerate : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct SparseScene : Error { using Error::Error; };

}  // namespace smearfm
