#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crookmap/budget.hpp"
#include "crookmap/rational.hpp"

namespace crookmap {

// Exact piecewise-linear map on [0,1]. Values may extend into [-1,2]
// (the range the crooked generator needs); ordinary interval maps stay in
// [0,1]. The map is the linear interpolation between consecutive
// (node, value) pairs.
//
// Canonical form: at least 2 nodes, nodes strictly increasing from 0 to 1,
// values in [-1,2], and no two consecutive segments with the same slope
// (collinear nodes merged). Canonical form makes map equality a plain
// node/value list comparison.
class PLMap {
public:
    // Validates and canonicalizes. Throws ParamError on contract violations.
    PLMap(std::vector<Rat> nodes, std::vector<Rat> values);

    static PLMap identity();

    const std::vector<Rat>& nodes() const { return nodes_; }
    const std::vector<Rat>& values() const { return values_; }
    std::size_t piece_count() const { return nodes_.size() - 1; }

    bool operator==(const PLMap& o) const {
        return nodes_ == o.nodes_ && values_ == o.values_;
    }
    bool operator!=(const PLMap& o) const { return !(*this == o); }

    Rat min_value() const;
    Rat max_value() const;

    std::string to_json() const;
    static PLMap from_json(const std::string& text);

private:
    std::vector<Rat> nodes_;
    std::vector<Rat> values_;
};

// Exact value of the interpolation at x in [0,1]. Throws DomainError
// outside the domain.
Rat pl_eval(const PLMap& f, const Rat& x);

// Canonical composite f(g(x)). Requires range of g within [0,1]. The piece
// count is estimated exactly before construction; if it would exceed the
// budget a BudgetError reports the required size.
PLMap pl_compose(const PLMap& f, const PLMap& g, const PieceBudget& guard = {});

// n-fold composite of f with itself, n >= 1. Requires range of f in [0,1].
PLMap pl_iterate(const PLMap& f, unsigned n, const PieceBudget& guard = {});

// Exact (min |slope|, max |slope|) over pieces.
std::pair<Rat, Rat> slope_bounds(const PLMap& f);

// Connected components of f^{-1}([lo,hi]) in ascending order, exact
// endpoints. The target must be nondegenerate and within [0,1].
std::vector<std::pair<Rat, Rat>> preimage_components(const PLMap& f, const Rat& lo,
                                                     const Rat& hi);

// The k-lap uniform tent map: lap j rises 0->1 for even j, falls for odd j,
// slope magnitude k. tent(1) is the identity.
PLMap tent(unsigned k);

}  // namespace crookmap
