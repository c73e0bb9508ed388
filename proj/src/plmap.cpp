#include "crookmap/plmap.hpp"

#include <algorithm>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

// slope of the piece [n0,n1] -> [v0,v1]
Rat piece_slope(const Rat& n0, const Rat& n1, const Rat& v0, const Rat& v1) {
    return Rat(v1 - v0) / Rat(n1 - n0);
}

}  // namespace

PLMap::PLMap(std::vector<Rat> nodes, std::vector<Rat> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() < 2) throw ParamError("PLMap needs at least 2 nodes");
    if (nodes_.size() != values_.size())
        throw ParamError("PLMap node/value length mismatch");
    if (nodes_.front() != 0 || nodes_.back() != 1)
        throw ParamError("PLMap nodes must start at 0 and end at 1");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i - 1] < nodes_[i]))
            throw ParamError("PLMap nodes must be strictly increasing");
    for (const Rat& v : values_)
        if (v < -1 || v > 2) throw ParamError("PLMap value outside [-1,2]");

    // Merge collinear interior nodes.
    std::vector<Rat> cn{nodes_[0]}, cv{values_[0]};
    for (std::size_t i = 1; i + 1 < nodes_.size(); ++i) {
        Rat s_in = piece_slope(cn.back(), nodes_[i], cv.back(), values_[i]);
        Rat s_out = piece_slope(nodes_[i], nodes_[i + 1], values_[i], values_[i + 1]);
        if (s_in != s_out) {
            cn.push_back(nodes_[i]);
            cv.push_back(values_[i]);
        }
    }
    cn.push_back(nodes_.back());
    cv.push_back(values_.back());
    nodes_ = std::move(cn);
    values_ = std::move(cv);
}

PLMap PLMap::identity() { return PLMap({Rat(0), Rat(1)}, {Rat(0), Rat(1)}); }

Rat PLMap::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
Rat PLMap::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

Rat pl_eval(const PLMap& f, const Rat& x) {
    if (x < 0 || x > 1) throw DomainError("pl_eval: point outside [0,1]");
    const auto& n = f.nodes();
    const auto& v = f.values();
    // rightmost node <= x
    auto it = std::upper_bound(n.begin(), n.end(), x);
    std::size_t i = static_cast<std::size_t>(it - n.begin()) - 1;
    if (i + 1 == n.size()) return v.back();
    Rat t = Rat(x - n[i]) / Rat(n[i + 1] - n[i]);
    return v[i] + t * (v[i + 1] - v[i]);
}

namespace {

// Points y in (lo,hi) strictly between the endpoints of the affine piece
// [a,b], expressed as preimages, ascending.
void interior_preimages(const Rat& x0, const Rat& x1, const Rat& y0, const Rat& y1,
                        const std::vector<Rat>& cuts, std::vector<Rat>& out) {
    if (y0 == y1) return;
    Rat lo = std::min(y0, y1), hi = std::max(y0, y1);
    Rat slope = (y1 - y0) / (x1 - x0);
    std::vector<Rat> xs;
    for (const Rat& c : cuts) {
        if (c > lo && c < hi) xs.push_back(x0 + (c - y0) / slope);
    }
    std::sort(xs.begin(), xs.end());
    for (auto& x : xs) out.push_back(std::move(x));
}

}  // namespace

PLMap pl_compose(const PLMap& f, const PLMap& g, const PieceBudget& guard) {
    if (g.min_value() < 0 || g.max_value() > 1)
        throw DomainError("pl_compose: range of inner map must lie in [0,1]");

    const auto& gn = g.nodes();
    const auto& gv = g.values();
    const auto& fn = f.nodes();

    // Exact piece-count estimate before construction.
    std::uint64_t required = 0;
    for (std::size_t i = 0; i + 1 < gn.size(); ++i) {
        Rat lo = std::min(gv[i], gv[i + 1]), hi = std::max(gv[i], gv[i + 1]);
        std::size_t crossings = 0;
        if (lo != hi) {
            auto a = std::upper_bound(fn.begin(), fn.end(), lo);
            auto b = std::lower_bound(fn.begin(), fn.end(), hi);
            crossings = a < b ? static_cast<std::size_t>(b - a) : 0;
        }
        required += crossings + 1;
        if (required > guard.max_pieces)
            throw BudgetError("pl_compose: piece budget exceeded",
                              std::to_string(required) + "+", guard.max_pieces);
    }
    if (required > guard.max_pieces)
        throw BudgetError("pl_compose: piece budget exceeded", std::to_string(required),
                          guard.max_pieces);

    std::vector<Rat> nodes, values;
    nodes.reserve(required + 1);
    values.reserve(required + 1);
    nodes.push_back(Rat(0));
    values.push_back(pl_eval(f, gv[0]));
    std::vector<Rat> mids;
    for (std::size_t i = 0; i + 1 < gn.size(); ++i) {
        mids.clear();
        interior_preimages(gn[i], gn[i + 1], gv[i], gv[i + 1], fn, mids);
        for (const Rat& x : mids) {
            nodes.push_back(x);
            values.push_back(pl_eval(f, pl_eval(g, x)));
        }
        nodes.push_back(gn[i + 1]);
        values.push_back(pl_eval(f, gv[i + 1]));
    }
    return PLMap(std::move(nodes), std::move(values));
}

PLMap pl_iterate(const PLMap& f, unsigned n, const PieceBudget& guard) {
    if (n == 0) throw ParamError("pl_iterate: n must be positive");
    if (f.min_value() < 0 || f.max_value() > 1)
        throw DomainError("pl_iterate: range must lie in [0,1]");
    PLMap acc = f;
    for (unsigned i = 1; i < n; ++i) acc = pl_compose(f, acc, guard);
    return acc;
}

std::pair<Rat, Rat> slope_bounds(const PLMap& f) {
    const auto& n = f.nodes();
    const auto& v = f.values();
    Rat mn, mx;
    for (std::size_t i = 0; i + 1 < n.size(); ++i) {
        Rat s = rat_abs(piece_slope(n[i], n[i + 1], v[i], v[i + 1]));
        if (i == 0) {
            mn = s;
            mx = s;
        } else {
            if (s < mn) mn = s;
            if (s > mx) mx = s;
        }
    }
    return {mn, mx};
}

std::vector<std::pair<Rat, Rat>> preimage_components(const PLMap& f, const Rat& lo,
                                                     const Rat& hi) {
    if (!(lo < hi)) throw DomainError("preimage_components: degenerate target");
    if (lo < 0 || hi > 1)
        throw DomainError("preimage_components: target must lie within [0,1]");

    const auto& n = f.nodes();
    const auto& v = f.values();
    std::vector<std::pair<Rat, Rat>> out;
    bool open = false;
    Rat start;
    auto close_at = [&](const Rat& x) {
        if (open) {
            out.emplace_back(start, x);
            open = false;
        }
    };
    for (std::size_t i = 0; i + 1 < n.size(); ++i) {
        const Rat &x0 = n[i], &x1 = n[i + 1], &y0 = v[i], &y1 = v[i + 1];
        Rat plo = std::min(y0, y1), phi = std::max(y0, y1);
        if (phi < lo || plo > hi) {
            close_at(x0);
            continue;
        }
        // Sub-interval of [x0,x1] where the affine piece lies in [lo,hi].
        Rat a = x0, b = x1;
        if (y0 != y1) {
            Rat slope = (y1 - y0) / (x1 - x0);
            Rat ta = x0 + (lo - y0) / slope;
            Rat tb = x0 + (hi - y0) / slope;
            if (ta > tb) std::swap(ta, tb);
            a = std::max(x0, ta);
            b = std::min(x1, tb);
        }
        if (a > x0) close_at(x0);
        if (!open) {
            start = a;
            open = true;
        }
        if (b < x1) {
            close_at(b);
        }
    }
    close_at(Rat(1));
    return out;
}

PLMap tent(unsigned k) {
    if (k == 0) throw DomainError("tent: k must be positive");
    std::vector<Rat> nodes, values;
    nodes.reserve(k + 1);
    values.reserve(k + 1);
    for (unsigned j = 0; j <= k; ++j) {
        nodes.emplace_back(Rat(j, k));
        values.emplace_back(j % 2 == 0 ? 0 : 1);
    }
    return PLMap(std::move(nodes), std::move(values));
}

std::string PLMap::to_json() const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    j["values"] = nlohmann::ordered_json::array();
    for (const Rat& r : nodes_) j["nodes"].push_back(rat_str(r));
    for (const Rat& r : values_) j["values"].push_back(rat_str(r));
    return j.dump();
}

PLMap PLMap::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("PLMap: bad JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j.contains("values"))
        throw ParseError("PLMap: expected object with nodes/values");
    auto read = [](const nlohmann::json& arr, const char* what) {
        std::vector<Rat> out;
        if (!arr.is_array()) throw ParseError(std::string("PLMap: ") + what + " not an array");
        for (const auto& e : arr) {
            if (!e.is_string()) throw ParseError("PLMap: rationals must be strings");
            auto r = parse_rat(e.get<std::string>());
            if (!r) throw ParseError("PLMap: malformed rational '" + e.get<std::string>() + "'");
            out.push_back(*r);
        }
        return out;
    };
    try {
        return PLMap(read(j["nodes"], "nodes"), read(j["values"], "values"));
    } catch (const ParamError& e) {
        throw ParseError(std::string("PLMap: ") + e.what());
    }
}

}  // namespace crookmap
