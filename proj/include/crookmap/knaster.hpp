#pragma once

#include <map>
#include <string>

#include "crookmap/budget.hpp"
#include "crookmap/continuum.hpp"
#include "crookmap/fibmap.hpp"

namespace crookmap {

// Finite-depth model of the inverse limit of [0,1] under the n-fold tent
// map. A depth-d point is a tuple (x0..xd) with x_k = tent(n)(x_{k+1});
// fibers are the lap itineraries of x1..xd (words over 0..n-1, digits
// base-36 for n > 10) and x0 serves as beta. The embedding carries the
// full coordinate tuple, affine in beta per fiber, and the gluing
// involutions fall out of endpoint-coordinate matching.
struct SnModel {
    ModelPtr model;
    unsigned n = 0;
    unsigned depth = 0;
};

// Fiber count n^depth is guarded by the piece budget.
SnModel build_sn(unsigned n, unsigned depth, const PieceBudget& guard = {});

// The self-map induced by the roof-top map acting on every coordinate.
// Exact; routing read off from the image itineraries.
FiberMap induced_shift(const SnModel& m);

struct SpecialPoints {
    ModelPoint e;  // (0,0,...)
    ModelPoint d;  // (1, 1/n, 1/n^2, ...)
    Arc j;         // the arc between them
};
SpecialPoints special_points(const SnModel& m);

// 2*(4^1-1)*(4^2-1)*...*(4^j-1)
Int solenoid_index(unsigned j);

// Finite-depth verdicts for the shift-structure facts. The subcontinuum
// and endpoint facts hold for the model class by construction and are not
// re-proved here.
struct SnPropertyReport {
    bool orbit_escapes = false;  // the orbit of d eventually leaves the probe arc
    long escape_step = -1;       // least m0 with g^m(d) outside for all tested m >= m0
    bool shift_doubles_lattice = false;  // each fold branch maps gluing points
                                         // bijectively onto the doubled lattice
    bool preimage_inside_j = false;      // e-side component of g^{-1}(J) inside J \ {d}
    std::size_t truncation_artifacts = 0;  // other preimage components (finite-depth
                                           // wraparound)
    std::string to_json() const;
};
SnPropertyReport check_model_properties(const SnModel& m, unsigned orbit_steps = 32);

// Depth+1 model plus the fiber-word truncation projection.
std::pair<SnModel, std::map<std::string, std::string>> refine(const SnModel& m,
                                                              const PieceBudget& guard = {});

// Model reference resolver for "interval", "sn:<n>:depth=<d>" and inline
// JSON objects (anything starting with '{').
ModelPtr resolve_model_ref(const std::string& ref);

}  // namespace crookmap
