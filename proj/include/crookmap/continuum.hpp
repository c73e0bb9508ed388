#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crookmap/rational.hpp"

namespace crookmap {

// A point of a fibered model: a fiber id plus a coordinate beta in [0,1].
// Points at beta=0 are identified across tau_minus pairs, points at beta=1
// across tau_plus pairs; the canonical representative uses the
// lexicographically least fiber id.
struct ModelPoint {
    std::string fiber;
    Rat beta;

    bool operator==(const ModelPoint& o) const {
        return fiber == o.fiber && beta == o.beta;
    }
};

// Optional metric embedding: each fiber's coordinate tuple is affine in
// beta, pinned by its two end tuples. Glued ends must embed identically.
struct FiberEmbedding {
    std::vector<Rat> at0;  // coordinates of the beta=0 end
    std::vector<Rat> at1;  // coordinates of the beta=1 end
};

// Finite model of a continuum as fibers glued end-to-end by two
// involutions: tau_minus pairs fibers sharing a beta=0 endpoint, tau_plus
// pairs fibers sharing a beta=1 endpoint. A fiber fixed by an involution
// has an unshared (model-endpoint) end on that side.
//
// After validation every component is a simple chain of fibers, so each
// component carries an exact "chain coordinate": an isometric (for the
// beta-length) parametrization by [0, L] with L = fiber count of the chain.
class Model {
public:
    Model(std::vector<std::string> fibers, std::map<std::string, std::string> tau_minus,
          std::map<std::string, std::string> tau_plus,
          std::map<std::string, FiberEmbedding> embedding = {});

    // Single fiber "0", both involutions identity, embedding = beta itself.
    static std::shared_ptr<const Model> interval();

    // Short reference string ("interval", "sn:2:depth=3") used by factories;
    // empty for ad-hoc models, which serialize inline.
    const std::string& ref_name() const { return ref_name_; }
    void set_ref_name(std::string name) { ref_name_ = std::move(name); }

    const std::vector<std::string>& fibers() const { return fibers_; }
    std::size_t fiber_count() const { return fibers_.size(); }
    bool has_fiber(const std::string& f) const;
    const std::string& tau_minus(const std::string& f) const;
    const std::string& tau_plus(const std::string& f) const;
    bool has_embedding() const { return !embedding_.empty(); }
    const std::map<std::string, FiberEmbedding>& embedding() const { return embedding_; }

    // --- chain structure ---
    std::size_t component_count() const { return chains_.size(); }
    // component id and chain coordinate of a (canonicalized) point
    std::pair<std::size_t, Rat> to_chain(const ModelPoint& p) const;
    ModelPoint from_chain(std::size_t comp, const Rat& c) const;
    Rat chain_length(std::size_t comp) const;
    // ordered fibers of a component with orientation (true = beta increases
    // with the chain coordinate)
    const std::vector<std::pair<std::size_t, bool>>& chain_fibers(std::size_t comp) const {
        return chains_[comp];
    }
    const std::string& fiber_name(std::size_t idx) const { return fibers_[idx]; }
    // (component, position, beta-forward) of a fiber
    struct FiberSlot {
        std::size_t comp;
        std::size_t pos;
        bool forward;
    };
    FiberSlot fiber_slot(const std::string& f) const;

    ModelPoint canonical(const ModelPoint& p) const;

    // Embedded coordinates of a point (requires an embedding).
    std::vector<Rat> embed(const ModelPoint& p) const;

    std::string to_json() const;
    static std::shared_ptr<const Model> from_json(const std::string& text);

private:
    std::vector<std::string> fibers_;  // sorted
    std::string ref_name_;
    std::vector<std::size_t> tminus_, tplus_;
    std::map<std::string, FiberEmbedding> embedding_;
    std::vector<std::vector<std::pair<std::size_t, bool>>> chains_;
    std::vector<std::pair<std::size_t, std::size_t>> fiber_chain_;  // fiber -> (chain, pos)

    std::size_t index_of(const std::string& f) const;
    void build_chains();
};

using ModelPtr = std::shared_ptr<const Model>;

// An arc: a chain of fiber segments. Externally a segment list with gluing
// data; internally an exact interval [c1,c2] in one component's chain
// coordinate.
struct ArcSegment {
    std::string fiber;
    Rat from, to;  // beta coordinates; from > to encodes a descending pass
};

class Arc {
public:
    Arc(ModelPtr model, std::size_t comp, Rat c1, Rat c2);

    static Arc join(const ModelPoint& a, const ModelPoint& b, const ModelPtr& model);

    const ModelPtr& model() const { return model_; }
    std::size_t component() const { return comp_; }
    const Rat& lo() const { return c1_; }
    const Rat& hi() const { return c2_; }
    bool degenerate() const { return c1_ == c2_; }

    Rat beta_length() const { return c2_ - c1_; }
    std::pair<ModelPoint, ModelPoint> endpoints() const;
    std::vector<ArcSegment> segments() const;

    bool contains(const Arc& other) const {
        return comp_ == other.comp_ && c1_ <= other.c1_ && other.c2_ <= c2_;
    }
    bool operator==(const Arc& o) const {
        return comp_ == o.comp_ && c1_ == o.c1_ && c2_ == o.c2_;
    }

    std::string to_json() const;
    static Arc from_json(const std::string& text, const ModelPtr& model);

private:
    ModelPtr model_;
    std::size_t comp_;
    Rat c1_, c2_;  // c1 <= c2
};

// beta-length of an arc (sum of segment extents; 0 for a degenerate arc).
Rat beta_length(const Arc& a);

// Trimming operators: keep_first contains the arc's first endpoint with
// length l-delta, keep_second the other endpoint likewise, core their
// intersection (length l-2*delta). Requires 0 < delta < l/2.
struct CoreSplit {
    Arc keep_first, keep_second, core;
};
CoreSplit core_split(const Arc& a, const Rat& delta);

// The arc of points reachable from endpoint `a` of A, moving away from A,
// with beta-length at most eps; truncates at model endpoints. `a` must be
// an endpoint of the nondegenerate arc A, eps > 0.
Arc arc_extension(const ModelPoint& a, const Arc& A, const Rat& eps);

// A together with both eps-extensions.
Arc arc_neighborhood(const Arc& A, const Rat& eps);

// Positive epsilon such that every arc with beta-length < epsilon has
// embedded (sup-metric) diameter < eta. Conservative; requires an
// embedding.
Rat length_modulus(const ModelPtr& model, const Rat& eta);

// Exact sup-metric diameter of an arc under the model embedding.
Rat arc_diameter(const Arc& a);

}  // namespace crookmap
