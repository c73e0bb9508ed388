#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crookmap/budget.hpp"
#include "crookmap/continuum.hpp"
#include "crookmap/plmap.hpp"
#include "crookmap/rational.hpp"

namespace crookmap {

// One affine lap of one fiber: on [t0,t1] the image is
// (target, slope*beta + intercept), staying within the target fiber.
struct MapLap {
    Rat t0, t1;
    Rat slope, intercept;
    std::string target;
};

// One affine piece in chain coordinates.
struct ChainPiece {
    Rat c0, c1;
    Rat slope, intercept;  // image chain coordinate = slope*c + intercept
};

// A self-map of a fibered model given per fiber as a lap partition with an
// affine piece and a target fiber per lap. Validated for continuity within
// fibers and across gluings; total on the model. Immutable; operations are
// pure.
//
// Each source component maps into a single target component (forced by
// continuity), so internally the map is a piecewise-affine map between
// chain coordinate spaces.
class FiberMap {
public:
    // Empty map; every operation requires a map built by a factory or the
    // lap constructor.
    FiberMap() = default;

    FiberMap(ModelPtr model, const std::map<std::string, std::vector<MapLap>>& laps);

    static FiberMap identity(const ModelPtr& model);
    // Wraps a PLMap with range in [0,1] as a self-map of the interval model.
    static FiberMap from_interval_map(const PLMap& f);

    const ModelPtr& model() const { return model_; }
    std::size_t piece_count() const;

    // chain form access (read-only)
    std::size_t target_component(std::size_t comp) const { return target_comp_[comp]; }
    const std::vector<ChainPiece>& chain_pieces(std::size_t comp) const {
        return pieces_[comp];
    }

    // image chain coordinate of a chain point
    std::pair<std::size_t, Rat> eval_chain(std::size_t comp, const Rat& c) const;

    bool operator==(const FiberMap& o) const;
    bool operator!=(const FiberMap& o) const { return !(*this == o); }

    // Per-fiber lap form (canonical; derived from the chain form).
    std::map<std::string, std::vector<MapLap>> laps() const;

    std::string to_json() const;
    // `resolve` maps a model reference (string or inline JSON object,
    // passed verbatim) to a model; defaults to interval/inline handling.
    static FiberMap from_json(const std::string& text,
                              const std::function<ModelPtr(const std::string&)>& resolve);

private:
    ModelPtr model_;
    std::vector<std::vector<ChainPiece>> pieces_;  // per source component
    std::vector<std::size_t> target_comp_;
    friend FiberMap chain_map_from_pieces(ModelPtr, std::vector<std::vector<ChainPiece>>,
                                          std::vector<std::size_t>);
};

// Internal factory used by composition and the lift: canonicalizes and
// validates chain pieces.
FiberMap chain_map_from_pieces(ModelPtr model, std::vector<std::vector<ChainPiece>> pieces,
                               std::vector<std::size_t> target_comp);

// Image point of p under f, canonicalized across gluings.
ModelPoint fr_eval(const FiberMap& f, const ModelPoint& p);

// Canonical composite f(g(.)). Both maps must share the model. The piece
// count is estimated exactly first; exceeding the budget raises BudgetError
// with the required size.
FiberMap fr_compose(const FiberMap& f, const FiberMap& g, const PieceBudget& guard = {});

// n-fold composite, n >= 1.
FiberMap fr_iterate(const FiberMap& f, unsigned n, const PieceBudget& guard = {});

// (sigma, s): exact min and max |slope| over all laps. For fiber-routed
// piecewise-affine maps these realize the arc-length stretch/Lipschitz
// ratios; callers needing a strict Lipschitz constant take
// working_lipschitz below.
std::pair<Rat, Rat> stretch_lipschitz(const FiberMap& f);

// Strict working Lipschitz constant: max(3, max|slope| + 1).
Rat working_lipschitz(const FiberMap& f);

// Image of an arc (an arc again; continuity keeps it in one component).
Arc image_arc(const FiberMap& f, const Arc& a);

// Maximal arcs C with f(C) inside A, filtered to those with f(C) = A
// exactly; ascending by (component, position).
std::vector<Arc> preimage_arc_components(const FiberMap& f, const Arc& a);

// Supremum of the beta-length of [f(t), g(t)] over the model; infinite when
// some t has images in different arc components.
struct LambdaDistance {
    bool infinite = false;
    Rat value;  // meaningful when !infinite

    bool operator==(const LambdaDistance& o) const {
        return infinite == o.infinite && (infinite || value == o.value);
    }
};
LambdaDistance map_distance(const FiberMap& f, const FiberMap& g);

}  // namespace crookmap
