#pragma once

#include <cstdint>

namespace crookmap {

// Piece budgets are explicit parameters with deterministic failure.
// Composition piece counts multiply, and the crooked-generator recipe can
// exceed any feasible budget, so exhaustion must be reported, never hidden.
inline constexpr std::uint64_t kDefaultPieceBudget = 5'000'000;

struct PieceBudget {
    std::uint64_t max_pieces = kDefaultPieceBudget;
};

struct CheckBudget {
    std::uint64_t max_candidates = 250'000;
    // Candidate-arc endpoint meshes larger than this are deterministically
    // thinned (uniform stride, endpoints kept) and the verdict is flagged.
    std::uint64_t max_mesh = 4'096;
};

}  // namespace crookmap
