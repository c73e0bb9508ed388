#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crookmap/budget.hpp"
#include "crookmap/fibmap.hpp"

namespace crookmap {

// A map f is (eps,delta)-crooked when for every pair of arcs A, C with
// 2*delta < len(A) < eps and f(C) = A there are two disjoint subarcs of C
// each mapping exactly onto the core K(A,delta) (A trimmed by delta at both
// ends).
//
// The checker decides this over a finite candidate family: arcs A with
// endpoints drawn from the critical mesh of f (breakpoint images and gluing
// points) refined by offsets at the delta, 2*delta and eps boundaries plus
// midpoints. For piecewise-affine maps a violating arc stays violating
// while its endpoints slide inside one cell of that arrangement; the
// reduction is a design decision backed empirically by grid_falsifier, not
// a theorem.

struct CrookedWitness {
    Arc arc;        // the arc A
    Arc component;  // preimage component C with f(C) = A
    std::string reason;
};

struct CrookednessVerdict {
    bool crooked = false;
    std::optional<CrookedWitness> witness;  // present exactly when !crooked
    std::uint64_t candidates_checked = 0;
    Rat eps, delta;
    bool vacuous = false;       // no arc satisfies 2*delta < len < eps
    bool mesh_thinned = false;  // candidate mesh was deterministically thinned

    std::string to_json() const;
};

// Decision procedure. Deterministic: the lexicographically least violating
// candidate (component, lo, hi) is reported. Exceeding the candidate budget
// raises BudgetError with progress in the message.
CrookednessVerdict check_crooked(const FiberMap& f, const Rat& eps, const Rat& delta,
                                 const CheckBudget& budget = {});

// Independent re-check of a single arc: returns the first preimage
// component C with f(C) = A whose covering subarcs lack two disjoint
// core windows, or nullopt if A exhibits no violation. Exact rational
// arithmetic throughout; shared by the falsifier and witness validation.
std::optional<Arc> arc_violation(const FiberMap& f, const Rat& eps, const Rat& delta,
                                 const Arc& A);

// Constructive split: for each preimage component C with f(C) = A, disjoint
// subarcs mapping exactly onto the two one-sided cores K1(A,delta) and
// K2(A,delta). Requires 2*delta < len(A) < eps and a map that passed
// check_crooked at (eps, delta).
struct SplitPair {
    Arc component;
    Arc onto_k1;
    Arc onto_k2;
};
std::vector<SplitPair> crooked_split(const FiberMap& f, const Rat& eps, const Rat& delta,
                                     const Arc& A);

// Grid falsifier: samples arcs with endpoints on a uniform grid of the
// given resolution plus seeded random rational arcs, and reports a
// violation if one is found. Never claims crookedness.
struct FoundViolation {
    Arc arc;
    Arc component;
};
std::optional<FoundViolation> grid_falsifier(const FiberMap& f, const Rat& eps,
                                             const Rat& delta, unsigned resolution,
                                             std::uint64_t seed);

}  // namespace crookmap
