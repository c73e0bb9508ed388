#include "crookmap/continuum.hpp"

#include <algorithm>
#include <set>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

std::size_t lookup(const std::vector<std::string>& sorted, const std::string& f) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), f);
    if (it == sorted.end() || *it != f) throw DomainError("unknown fiber '" + f + "'");
    return static_cast<std::size_t>(it - sorted.begin());
}

}  // namespace

Model::Model(std::vector<std::string> fibers, std::map<std::string, std::string> tau_minus,
             std::map<std::string, std::string> tau_plus,
             std::map<std::string, FiberEmbedding> embedding)
    : fibers_(std::move(fibers)), embedding_(std::move(embedding)) {
    if (fibers_.empty()) throw ParamError("model needs at least one fiber");
    std::sort(fibers_.begin(), fibers_.end());
    if (std::adjacent_find(fibers_.begin(), fibers_.end()) != fibers_.end())
        throw ParamError("duplicate fiber id");

    auto build_tau = [&](const std::map<std::string, std::string>& tau, const char* name) {
        std::vector<std::size_t> out(fibers_.size());
        for (std::size_t i = 0; i < fibers_.size(); ++i) {
            auto it = tau.find(fibers_[i]);
            out[i] = it == tau.end() ? i : lookup(fibers_, it->second);
        }
        for (std::size_t i = 0; i < fibers_.size(); ++i)
            if (out[out[i]] != i)
                throw ParamError(std::string(name) + " is not an involution");
        return out;
    };
    tminus_ = build_tau(tau_minus, "tau_minus");
    tplus_ = build_tau(tau_plus, "tau_plus");

    if (!embedding_.empty()) {
        std::size_t dim = 0;
        bool first = true;
        for (const auto& f : fibers_) {
            auto it = embedding_.find(f);
            if (it == embedding_.end())
                throw ParamError("embedding missing fiber '" + f + "'");
            if (first) {
                dim = it->second.at0.size();
                first = false;
            }
            if (it->second.at0.size() != dim || it->second.at1.size() != dim)
                throw ParamError("embedding dimension mismatch");
        }
        for (std::size_t i = 0; i < fibers_.size(); ++i) {
            if (tminus_[i] != i &&
                embedding_.at(fibers_[i]).at0 != embedding_.at(fibers_[tminus_[i]]).at0)
                throw ParamError("glued beta=0 ends embed differently");
            if (tplus_[i] != i &&
                embedding_.at(fibers_[i]).at1 != embedding_.at(fibers_[tplus_[i]]).at1)
                throw ParamError("glued beta=1 ends embed differently");
        }
    }

    build_chains();
}

void Model::build_chains() {
    const std::size_t n = fibers_.size();
    fiber_chain_.assign(n, {0, 0});
    std::vector<bool> visited(n, false);

    // Chain starts: fibers with a free end, least (fiber, side) first.
    for (std::size_t start = 0; start < n; ++start) {
        if (visited[start]) continue;
        bool free0 = tminus_[start] == start;
        bool free1 = tplus_[start] == start;
        if (!free0 && !free1) continue;  // interior fiber; reached by a walk
        std::vector<std::pair<std::size_t, bool>> chain;
        std::size_t cur = start;
        bool forward = free0;  // enter at the free end
        for (;;) {
            if (visited[cur]) throw ParamError("model gluing is not a simple chain");
            visited[cur] = true;
            fiber_chain_[cur] = {chains_.size(), chain.size()};
            chain.emplace_back(cur, forward);
            std::size_t next = forward ? tplus_[cur] : tminus_[cur];
            if (next == cur) break;  // other end free: chain complete
            // A forward fiber exits through beta=1, so the next fiber is
            // entered through its beta=1 end and runs in reverse (and vice
            // versa): orientations alternate along a chain.
            cur = next;
            forward = !forward;
        }
        chains_.push_back(std::move(chain));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!visited[i]) throw ParamError("model contains a cyclic gluing");
}

std::shared_ptr<const Model> Model::interval() {
    static const std::shared_ptr<const Model> m = [] {
        auto mm = std::make_shared<Model>(
            std::vector<std::string>{"0"}, std::map<std::string, std::string>{},
            std::map<std::string, std::string>{},
            std::map<std::string, FiberEmbedding>{{"0", FiberEmbedding{{Rat(0)}, {Rat(1)}}}});
        mm->set_ref_name("interval");
        return std::shared_ptr<const Model>(mm);
    }();
    return m;
}

bool Model::has_fiber(const std::string& f) const {
    return std::binary_search(fibers_.begin(), fibers_.end(), f);
}

std::size_t Model::index_of(const std::string& f) const { return lookup(fibers_, f); }

const std::string& Model::tau_minus(const std::string& f) const {
    return fibers_[tminus_[index_of(f)]];
}

const std::string& Model::tau_plus(const std::string& f) const {
    return fibers_[tplus_[index_of(f)]];
}

ModelPoint Model::canonical(const ModelPoint& p) const {
    std::size_t i = index_of(p.fiber);
    if (p.beta < 0 || p.beta > 1) throw DomainError("beta outside [0,1]");
    if (p.beta == 0) {
        std::size_t j = std::min(i, tminus_[i]);
        return {fibers_[j], Rat(0)};
    }
    if (p.beta == 1) {
        std::size_t j = std::min(i, tplus_[i]);
        return {fibers_[j], Rat(1)};
    }
    return {fibers_[i], p.beta};
}

std::pair<std::size_t, Rat> Model::to_chain(const ModelPoint& p) const {
    std::size_t i = index_of(p.fiber);
    if (p.beta < 0 || p.beta > 1) throw DomainError("beta outside [0,1]");
    auto [chain, pos] = fiber_chain_[i];
    bool forward = chains_[chain][pos].second;
    Rat c = forward ? Rat(pos) + p.beta : Rat(pos) + 1 - p.beta;
    return {chain, c};
}

ModelPoint Model::from_chain(std::size_t comp, const Rat& c) const {
    const auto& chain = chains_.at(comp);
    if (c < 0 || c > Rat(chain.size())) throw DomainError("chain coordinate out of range");
    Int posi = rat_floor(c);
    if (posi == Int(chain.size())) --posi;
    auto pos = static_cast<std::size_t>(posi.convert_to<std::uint64_t>());
    auto [fiber, forward] = chain[pos];
    Rat beta = forward ? c - Rat(pos) : Rat(pos) + 1 - c;
    return canonical({fibers_[fiber], beta});
}

Rat Model::chain_length(std::size_t comp) const { return Rat(chains_.at(comp).size()); }

Model::FiberSlot Model::fiber_slot(const std::string& f) const {
    std::size_t i = index_of(f);
    auto [chain, pos] = fiber_chain_[i];
    return {chain, pos, chains_[chain][pos].second};
}

std::vector<Rat> Model::embed(const ModelPoint& p) const {
    if (embedding_.empty()) throw CapabilityError("model has no embedding");
    const auto& e = embedding_.at(fibers_[index_of(p.fiber)]);
    std::vector<Rat> out;
    out.reserve(e.at0.size());
    for (std::size_t c = 0; c < e.at0.size(); ++c)
        out.push_back(e.at0[c] + p.beta * (e.at1[c] - e.at0[c]));
    return out;
}

// ---------------------------------------------------------------------------
// Arc

Arc::Arc(ModelPtr model, std::size_t comp, Rat c1, Rat c2)
    : model_(std::move(model)), comp_(comp), c1_(std::move(c1)), c2_(std::move(c2)) {
    if (!model_) throw ParamError("arc needs a model");
    if (comp_ >= model_->component_count()) throw ParamError("arc component out of range");
    if (c1_ > c2_) std::swap(c1_, c2_);
    if (c1_ < 0 || c2_ > model_->chain_length(comp_))
        throw ParamError("arc outside its component");
}

Arc Arc::join(const ModelPoint& a, const ModelPoint& b, const ModelPtr& model) {
    auto [ca, xa] = model->to_chain(a);
    auto [cb, xb] = model->to_chain(b);
    if (ca != cb) throw NoPathError("points lie in different arc components");
    return Arc(model, ca, xa, xb);
}

std::pair<ModelPoint, ModelPoint> Arc::endpoints() const {
    return {model_->from_chain(comp_, c1_), model_->from_chain(comp_, c2_)};
}

std::vector<ArcSegment> Arc::segments() const {
    std::vector<ArcSegment> out;
    const auto& chain = model_->chain_fibers(comp_);
    if (degenerate()) {
        ModelPoint p = model_->from_chain(comp_, c1_);
        out.push_back({p.fiber, p.beta, p.beta});
        return out;
    }
    Int first = rat_floor(c1_);
    Int last = rat_ceil(c2_) - 1;
    for (Int pi = first; pi <= last; ++pi) {
        auto pos = static_cast<std::size_t>(pi.convert_to<std::uint64_t>());
        Rat lo = std::max(c1_, Rat(pos));
        Rat hi = std::min(c2_, Rat(pos) + 1);
        if (!(lo < hi)) continue;
        auto [fiber, forward] = chain[pos];
        Rat bl = forward ? lo - Rat(pos) : Rat(pos) + 1 - lo;
        Rat bh = forward ? hi - Rat(pos) : Rat(pos) + 1 - hi;
        out.push_back({model_->fiber_name(fiber), bl, bh});
    }
    return out;
}

Rat beta_length(const Arc& a) { return a.beta_length(); }

CoreSplit core_split(const Arc& a, const Rat& delta) {
    Rat len = a.beta_length();
    if (!(delta > 0) || !(delta < len / 2))
        throw ParamError("core_split: need 0 < delta < length/2");
    return {Arc(a.model(), a.component(), a.lo(), a.hi() - delta),
            Arc(a.model(), a.component(), a.lo() + delta, a.hi()),
            Arc(a.model(), a.component(), a.lo() + delta, a.hi() - delta)};
}

Arc arc_extension(const ModelPoint& a, const Arc& A, const Rat& eps) {
    if (!(eps > 0)) throw ParamError("arc_extension: eps must be positive");
    if (A.degenerate()) throw ParamError("arc_extension: arc must be nondegenerate");
    auto [comp, c] = A.model()->to_chain(a);
    if (comp != A.component() || (c != A.lo() && c != A.hi()))
        throw ParamError("arc_extension: point is not an endpoint of the arc");
    if (c == A.lo()) {
        Rat lo = std::max(Rat(0), c - eps);
        return Arc(A.model(), comp, lo, c);
    }
    Rat hi = std::min(A.model()->chain_length(comp), c + eps);
    return Arc(A.model(), comp, c, hi);
}

Arc arc_neighborhood(const Arc& A, const Rat& eps) {
    if (!(eps > 0)) throw ParamError("arc_neighborhood: eps must be positive");
    if (A.degenerate()) throw ParamError("arc_neighborhood: arc must be nondegenerate");
    Rat lo = std::max(Rat(0), A.lo() - eps);
    Rat hi = std::min(A.model()->chain_length(A.component()), A.hi() + eps);
    return Arc(A.model(), A.component(), lo, hi);
}

Rat arc_diameter(const Arc& a) {
    const Model& m = *a.model();
    if (!m.has_embedding()) throw CapabilityError("arc_diameter: model has no embedding");
    // Coordinates are affine per fiber, so extremes sit at segment ends.
    std::vector<ModelPoint> pts;
    auto [e1, e2] = a.endpoints();
    pts.push_back(e1);
    Int first = rat_floor(a.lo()) + 1;
    Int last = rat_ceil(a.hi()) - 1;
    for (Int pi = first; pi <= last; ++pi)
        pts.push_back(m.from_chain(a.component(), Rat(pi)));
    pts.push_back(e2);
    Rat best(0);
    std::vector<std::vector<Rat>> coords;
    coords.reserve(pts.size());
    for (const auto& p : pts) coords.push_back(m.embed(p));
    if (coords.empty()) return best;
    std::size_t dim = coords[0].size();
    for (std::size_t c = 0; c < dim; ++c) {
        Rat mn = coords[0][c], mx = coords[0][c];
        for (const auto& v : coords) {
            if (v[c] < mn) mn = v[c];
            if (v[c] > mx) mx = v[c];
        }
        if (mx - mn > best) best = mx - mn;
    }
    return best;
}

Rat length_modulus(const ModelPtr& model, const Rat& eta) {
    if (!(eta > 0)) throw ParamError("length_modulus: eta must be positive");
    if (!model->has_embedding()) throw CapabilityError("length_modulus: model has no embedding");
    Rat slope_max(0);
    std::optional<std::vector<Rat>> lo, hi;
    for (const auto& [fiber, e] : model->embedding()) {
        for (std::size_t c = 0; c < e.at0.size(); ++c) {
            Rat s = rat_abs(e.at1[c] - e.at0[c]);
            if (s > slope_max) slope_max = s;
            if (!lo) {
                lo = e.at0;
                hi = e.at0;
            }
            auto upd = [&](const Rat& v) {
                if (v < (*lo)[c]) (*lo)[c] = v;
                if (v > (*hi)[c]) (*hi)[c] = v;
            };
            upd(e.at0[c]);
            upd(e.at1[c]);
        }
    }
    Rat max_len(0);
    for (std::size_t k = 0; k < model->component_count(); ++k)
        max_len = std::max(max_len, model->chain_length(k));
    if (slope_max == 0) return max_len + 1;
    Rat diam_bound(0);
    for (std::size_t c = 0; c < lo->size(); ++c)
        diam_bound = std::max(diam_bound, (*hi)[c] - (*lo)[c]);
    Rat eps = eta / slope_max;
    if (eta > diam_bound) return std::max(eps, max_len + 1);
    return eps;
}

// ---------------------------------------------------------------------------
// Serialization

std::string Model::to_json() const {
    nlohmann::ordered_json j;
    j["fibers"] = fibers_;
    nlohmann::ordered_json tm = nlohmann::ordered_json::object();
    nlohmann::ordered_json tp = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < fibers_.size(); ++i) {
        if (tminus_[i] != i) tm[fibers_[i]] = fibers_[tminus_[i]];
        if (tplus_[i] != i) tp[fibers_[i]] = fibers_[tplus_[i]];
    }
    j["tau_minus"] = tm;
    j["tau_plus"] = tp;
    if (!embedding_.empty()) {
        nlohmann::ordered_json em = nlohmann::ordered_json::object();
        for (const auto& f : fibers_) {
            const auto& e = embedding_.at(f);
            nlohmann::ordered_json fe;
            fe["at0"] = nlohmann::ordered_json::array();
            fe["at1"] = nlohmann::ordered_json::array();
            for (const auto& r : e.at0) fe["at0"].push_back(rat_str(r));
            for (const auto& r : e.at1) fe["at1"].push_back(rat_str(r));
            em[f] = fe;
        }
        j["embedding"] = em;
    }
    return j.dump();
}

namespace {

Rat parse_rat_or_throw(const nlohmann::json& v, const char* what) {
    if (!v.is_string()) throw ParseError(std::string(what) + ": rationals must be strings");
    auto r = parse_rat(v.get<std::string>());
    if (!r) throw ParseError(std::string(what) + ": malformed rational");
    return *r;
}

}  // namespace

std::shared_ptr<const Model> Model::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("model: bad JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("fibers"))
        throw ParseError("model: expected object with fibers");
    std::vector<std::string> fibers = j["fibers"].get<std::vector<std::string>>();
    auto read_tau = [&](const char* key) {
        std::map<std::string, std::string> out;
        if (j.contains(key))
            for (auto& [k, v] : j[key].items()) out[k] = v.get<std::string>();
        return out;
    };
    std::map<std::string, FiberEmbedding> em;
    if (j.contains("embedding") && !j["embedding"].is_null()) {
        for (auto& [k, v] : j["embedding"].items()) {
            FiberEmbedding e;
            for (const auto& r : v.at("at0")) e.at0.push_back(parse_rat_or_throw(r, "embedding"));
            for (const auto& r : v.at("at1")) e.at1.push_back(parse_rat_or_throw(r, "embedding"));
            em[k] = std::move(e);
        }
    }
    try {
        return std::make_shared<Model>(std::move(fibers), read_tau("tau_minus"),
                                       read_tau("tau_plus"), std::move(em));
    } catch (const ParamError& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

std::string Arc::to_json() const {
    nlohmann::ordered_json j;
    j["segments"] = nlohmann::ordered_json::array();
    for (const auto& s : segments()) {
        nlohmann::ordered_json seg;
        seg["fiber"] = s.fiber;
        seg["from"] = rat_str(s.from);
        seg["to"] = rat_str(s.to);
        j["segments"].push_back(seg);
    }
    auto [a, b] = endpoints();
    j["endpoints"] = nlohmann::ordered_json::array();
    for (const auto& p : {a, b}) {
        nlohmann::ordered_json pt;
        pt["fiber"] = p.fiber;
        pt["beta"] = rat_str(p.beta);
        j["endpoints"].push_back(pt);
    }
    return j.dump();
}

Arc Arc::from_json(const std::string& text, const ModelPtr& model) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("arc: bad JSON: ") + e.what());
    }
    if (!j.contains("endpoints") || j["endpoints"].size() != 2)
        throw ParseError("arc: expected two endpoints");
    auto read_pt = [&](const nlohmann::json& p) {
        return ModelPoint{p.at("fiber").get<std::string>(),
                          parse_rat_or_throw(p.at("beta"), "arc")};
    };
    try {
        return Arc::join(read_pt(j["endpoints"][0]), read_pt(j["endpoints"][1]), model);
    } catch (const Error& e) {
        throw ParseError(std::string("arc: ") + e.what());
    }
}

}  // namespace crookmap
