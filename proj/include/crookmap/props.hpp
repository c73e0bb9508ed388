#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crookmap/crooking.hpp"

namespace crookmap {

// Seeded property-check families over randomized instances, shared by the
// command-line verifier and the acceptance suite. Every check is exact; a
// violation carries a reproducible description.
struct PropertyResult {
    std::string family;
    unsigned instances = 0;
    unsigned violations = 0;
    std::string first_violation;
    bool ok() const { return instances > 0 && violations == 0; }
    std::string to_json() const;
};

// Families:
//   iterate-distance   d(f^j,F^j) < (s+1)^(j-1) * eta for j <= 4
//   neighborhood-image f(N(A,r)) inside N(f(A), s*r)
//   crooked-stability  d(f,F) < eta keeps F (eps, delta+2*eta)-crooked
//   iterated-neighborhood  F^j(N(A,r)) inside N(F^j(A), s^j(r+2*gamma))
//   doubling           induced shift doubles beta-length on fold-free arcs
//   coherence          checker vs falsifier on random interval maps
PropertyResult run_property(const std::string& family, unsigned instances,
                            std::uint64_t seed, const CrookingBudgets& budgets = {});

std::vector<std::string> property_families();

// Random continuous piecewise-affine self-map of a single-component model
// (used by the randomized families; exported for tests).
FiberMap random_chain_selfmap(const ModelPtr& model, std::mt19937_64& rng,
                              unsigned max_cuts);

// Random rational in [0,1] with denominator up to ~1000.
Rat random_unit_rational(std::mt19937_64& rng);

}  // namespace crookmap
