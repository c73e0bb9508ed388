#include "crookmap/fibmap.hpp"

#include <algorithm>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

Rat affine(const Rat& s, const Rat& b, const Rat& c) { return s * c + b; }

struct PieceLess {
    bool operator()(const ChainPiece& p, const Rat& c) const { return p.c0 < c; }
};

// rightmost piece containing c (pieces contiguous ascending)
std::size_t locate(const std::vector<ChainPiece>& pieces, const Rat& c) {
    std::size_t lo = 0, hi = pieces.size();
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (pieces[mid].c0 <= c)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

FiberMap chain_map_from_pieces(ModelPtr model, std::vector<std::vector<ChainPiece>> pieces,
                               std::vector<std::size_t> target_comp) {
    FiberMap out;
    if (pieces.size() != model->component_count() ||
        target_comp.size() != model->component_count())
        throw ParamError("chain map must cover every component");
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        auto& ps = pieces[k];
        if (ps.empty()) throw ParamError("chain map misses a component");
        std::sort(ps.begin(), ps.end(),
                  [](const ChainPiece& a, const ChainPiece& b) { return a.c0 < b.c0; });
        if (ps.front().c0 != 0 || ps.back().c1 != model->chain_length(k))
            throw ParamError("chain pieces must cover [0, L]");
        Rat tlen = model->chain_length(target_comp[k]);
        std::vector<ChainPiece> merged;
        for (auto& p : ps) {
            if (!(p.c0 < p.c1)) throw ParamError("degenerate chain piece");
            Rat v0 = affine(p.slope, p.intercept, p.c0);
            Rat v1 = affine(p.slope, p.intercept, p.c1);
            if (v0 < 0 || v0 > tlen || v1 < 0 || v1 > tlen)
                throw RoutingError("piece image leaves the target component");
            if (!merged.empty()) {
                const auto& q = merged.back();
                if (q.c1 != p.c0) throw ParamError("chain pieces must be contiguous");
                if (affine(q.slope, q.intercept, q.c1) != v0)
                    throw ParamError("chain map discontinuous at a piece junction");
                if (q.slope == p.slope && q.intercept == p.intercept) {
                    merged.back().c1 = p.c1;
                    continue;
                }
            }
            merged.push_back(p);
        }
        pieces[k] = std::move(merged);
    }
    out.model_ = std::move(model);
    out.pieces_ = std::move(pieces);
    out.target_comp_ = std::move(target_comp);
    return out;
}

FiberMap::FiberMap(ModelPtr model, const std::map<std::string, std::vector<MapLap>>& laps) {
    if (!model) throw ParamError("fiber map needs a model");
    for (const auto& f : model->fibers())
        if (laps.find(f) == laps.end())
            throw ParamError("fiber map must be total: missing fiber '" + f + "'");
    for (const auto& [f, ls] : laps) {
        if (!model->has_fiber(f)) throw ParamError("fiber map names unknown fiber '" + f + "'");
        if (ls.empty()) throw ParamError("fiber '" + f + "' has no laps");
        if (ls.front().t0 != 0 || ls.back().t1 != 1)
            throw ParamError("laps of fiber '" + f + "' must cover [0,1]");
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const auto& l = ls[i];
            if (!(l.t0 < l.t1)) throw ParamError("degenerate lap");
            if (i > 0 && ls[i - 1].t1 != l.t0)
                throw ParamError("laps of fiber '" + f + "' must be contiguous");
            if (!model->has_fiber(l.target))
                throw ParamError("lap targets unknown fiber '" + l.target + "'");
            Rat v0 = affine(l.slope, l.intercept, l.t0);
            Rat v1 = affine(l.slope, l.intercept, l.t1);
            if (v0 < 0 || v0 > 1 || v1 < 0 || v1 > 1)
                throw ParamError("lap image leaves [0,1]");
        }
        // continuity at interior lap junctions, as model points
        for (std::size_t i = 0; i + 1 < ls.size(); ++i) {
            ModelPoint a{ls[i].target, affine(ls[i].slope, ls[i].intercept, ls[i].t1)};
            ModelPoint b{ls[i + 1].target,
                         affine(ls[i + 1].slope, ls[i + 1].intercept, ls[i + 1].t0)};
            if (!(model->canonical(a) == model->canonical(b)))
                throw ParamError("fiber '" + f + "' discontinuous at an interior node");
        }
    }
    // continuity across gluings
    auto end_image = [&](const std::string& f, bool at_one) {
        const auto& ls = laps.at(f);
        const MapLap& l = at_one ? ls.back() : ls.front();
        Rat t = at_one ? Rat(1) : Rat(0);
        return model->canonical({l.target, affine(l.slope, l.intercept, t)});
    };
    for (const auto& f : model->fibers()) {
        const std::string& m = model->tau_minus(f);
        if (m != f && !(end_image(f, false) == end_image(m, false)))
            throw ParamError("map discontinuous across the shared beta=0 end of '" + f +
                             "' and '" + m + "'");
        const std::string& p = model->tau_plus(f);
        if (p != f && !(end_image(f, true) == end_image(p, true)))
            throw ParamError("map discontinuous across the shared beta=1 end of '" + f +
                             "' and '" + p + "'");
    }

    // compile to chain pieces
    std::vector<std::vector<ChainPiece>> pieces(model->component_count());
    std::vector<std::optional<std::size_t>> tcomp(model->component_count());
    for (const auto& [f, ls] : laps) {
        auto slot = model->fiber_slot(f);
        std::size_t comp = slot.comp;
        Rat flo(static_cast<long>(slot.pos));
        for (const auto& l : ls) {
            // chain interval of the lap and source beta at its ends
            Rat c0 = slot.forward ? flo + l.t0 : flo + 1 - l.t1;
            Rat c1 = slot.forward ? flo + l.t1 : flo + 1 - l.t0;
            Rat beta0 = slot.forward ? l.t0 : l.t1;
            Rat beta1 = slot.forward ? l.t1 : l.t0;
            auto [tcA, vA] = model->to_chain({l.target, affine(l.slope, l.intercept, beta0)});
            auto [tcB, vB] = model->to_chain({l.target, affine(l.slope, l.intercept, beta1)});
            if (tcA != tcB) throw ParamError("lap image spans two components");
            if (tcomp[comp] && *tcomp[comp] != tcA)
                throw ParamError("component maps into two different components");
            tcomp[comp] = tcA;
            Rat cslope = (vB - vA) / (c1 - c0);
            pieces[comp].push_back({c0, c1, cslope, vA - cslope * c0});
        }
    }
    std::vector<std::size_t> targets(model->component_count());
    for (std::size_t k = 0; k < tcomp.size(); ++k) {
        if (!tcomp[k]) throw ParamError("component has no pieces");
        targets[k] = *tcomp[k];
    }
    *this = chain_map_from_pieces(model, std::move(pieces), std::move(targets));
}

FiberMap FiberMap::identity(const ModelPtr& model) {
    std::vector<std::vector<ChainPiece>> pieces(model->component_count());
    std::vector<std::size_t> targets(model->component_count());
    for (std::size_t k = 0; k < model->component_count(); ++k) {
        pieces[k].push_back({Rat(0), model->chain_length(k), Rat(1), Rat(0)});
        targets[k] = k;
    }
    return chain_map_from_pieces(model, std::move(pieces), std::move(targets));
}

FiberMap FiberMap::from_interval_map(const PLMap& f) {
    if (f.min_value() < 0 || f.max_value() > 1)
        throw DomainError("from_interval_map: range must lie in [0,1]");
    auto model = Model::interval();
    std::vector<std::vector<ChainPiece>> pieces(1);
    const auto& n = f.nodes();
    const auto& v = f.values();
    for (std::size_t i = 0; i + 1 < n.size(); ++i) {
        Rat slope = (v[i + 1] - v[i]) / (n[i + 1] - n[i]);
        Rat icept = v[i] - slope * n[i];
        pieces[0].push_back({n[i], n[i + 1], slope, icept});
    }
    return chain_map_from_pieces(model, std::move(pieces), {0});
}

std::size_t FiberMap::piece_count() const {
    std::size_t total = 0;
    for (const auto& ps : pieces_) total += ps.size();
    return total;
}

std::pair<std::size_t, Rat> FiberMap::eval_chain(std::size_t comp, const Rat& c) const {
    const auto& ps = pieces_.at(comp);
    const ChainPiece& p = ps[locate(ps, c)];
    return {target_comp_[comp], affine(p.slope, p.intercept, c)};
}

bool FiberMap::operator==(const FiberMap& o) const {
    if (model_ != o.model_ || target_comp_ != o.target_comp_) return false;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        if (pieces_[k].size() != o.pieces_[k].size()) return false;
        for (std::size_t i = 0; i < pieces_[k].size(); ++i) {
            const auto& a = pieces_[k][i];
            const auto& b = o.pieces_[k][i];
            if (a.c0 != b.c0 || a.c1 != b.c1 || a.slope != b.slope ||
                a.intercept != b.intercept)
                return false;
        }
    }
    return true;
}

ModelPoint fr_eval(const FiberMap& f, const ModelPoint& p) {
    auto [comp, c] = f.model()->to_chain(p);
    auto [tc, v] = f.eval_chain(comp, c);
    return f.model()->from_chain(tc, v);
}

FiberMap fr_compose(const FiberMap& f, const FiberMap& g, const PieceBudget& guard) {
    if (f.model() != g.model()) throw ParamError("fr_compose: maps must share a model");
    const ModelPtr& model = g.model();
    std::vector<std::vector<ChainPiece>> pieces(model->component_count());
    std::vector<std::size_t> targets(model->component_count());

    // exact size estimate first
    std::uint64_t required = 0;
    for (std::size_t k = 0; k < model->component_count(); ++k) {
        std::size_t T = g.target_component(k);
        const auto& fp = f.chain_pieces(T);
        std::vector<Rat> cutvals;
        cutvals.reserve(fp.size() + 1);
        for (const auto& p : fp) cutvals.push_back(p.c0);
        cutvals.push_back(fp.back().c1);
        for (const auto& p : g.chain_pieces(k)) {
            Rat v0 = affine(p.slope, p.intercept, p.c0);
            Rat v1 = affine(p.slope, p.intercept, p.c1);
            Rat lo = std::min(v0, v1), hi = std::max(v0, v1);
            std::size_t crossings = 0;
            if (lo != hi) {
                auto a = std::upper_bound(cutvals.begin(), cutvals.end(), lo);
                auto b = std::lower_bound(cutvals.begin(), cutvals.end(), hi);
                crossings = a < b ? static_cast<std::size_t>(b - a) : 0;
            }
            required += crossings + 1;
            if (required > guard.max_pieces)
                throw BudgetError("fr_compose: piece budget exceeded",
                                  std::to_string(required) + "+", guard.max_pieces);
        }
    }

    for (std::size_t k = 0; k < model->component_count(); ++k) {
        std::size_t T = g.target_component(k);
        const auto& fp = f.chain_pieces(T);
        targets[k] = f.target_component(T);
        std::vector<Rat> cutvals;
        for (const auto& p : fp) cutvals.push_back(p.c0);
        cutvals.push_back(fp.back().c1);
        auto& out = pieces[k];
        for (const auto& p : g.chain_pieces(k)) {
            Rat v0 = affine(p.slope, p.intercept, p.c0);
            Rat v1 = affine(p.slope, p.intercept, p.c1);
            std::vector<Rat> cuts{p.c0};
            if (v0 != v1) {
                Rat lo = std::min(v0, v1), hi = std::max(v0, v1);
                std::vector<Rat> xs;
                for (auto it = std::upper_bound(cutvals.begin(), cutvals.end(), lo);
                     it != cutvals.end() && *it < hi; ++it)
                    xs.push_back((*it - p.intercept) / p.slope);
                std::sort(xs.begin(), xs.end());
                for (auto& x : xs) cuts.push_back(std::move(x));
            }
            cuts.push_back(p.c1);
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                Rat mid = (cuts[i] + cuts[i + 1]) / 2;
                Rat vm = affine(p.slope, p.intercept, mid);
                const ChainPiece& q = fp[locate(fp, vm)];
                // (f o g)(c) = q.slope * (p.slope*c + p.intercept) + q.intercept
                out.push_back({cuts[i], cuts[i + 1], q.slope * p.slope,
                               q.slope * p.intercept + q.intercept});
            }
        }
    }
    return chain_map_from_pieces(model, std::move(pieces), std::move(targets));
}

FiberMap fr_iterate(const FiberMap& f, unsigned n, const PieceBudget& guard) {
    if (n == 0) throw ParamError("fr_iterate: n must be positive");
    FiberMap acc = f;
    for (unsigned i = 1; i < n; ++i) acc = fr_compose(f, acc, guard);
    return acc;
}

std::pair<Rat, Rat> stretch_lipschitz(const FiberMap& f) {
    Rat mn, mx;
    bool first = true;
    for (std::size_t k = 0; k < f.model()->component_count(); ++k) {
        for (const auto& p : f.chain_pieces(k)) {
            Rat s = rat_abs(p.slope);
            if (first) {
                mn = s;
                mx = s;
                first = false;
            } else {
                if (s < mn) mn = s;
                if (s > mx) mx = s;
            }
        }
    }
    return {mn, mx};
}

Rat working_lipschitz(const FiberMap& f) {
    Rat mx = stretch_lipschitz(f).second;
    return std::max(Rat(3), mx + 1);
}

Arc image_arc(const FiberMap& f, const Arc& a) {
    std::size_t k = a.component();
    std::size_t T = f.target_component(k);
    const auto& ps = f.chain_pieces(k);
    std::size_t i = locate(ps, a.lo());
    Rat mn, mx;
    bool first = true;
    for (; i < ps.size() && ps[i].c0 < a.hi(); ++i) {
        Rat lo = std::max(a.lo(), ps[i].c0);
        Rat hi = std::min(a.hi(), ps[i].c1);
        if (lo > hi) continue;
        for (const Rat& v : {affine(ps[i].slope, ps[i].intercept, lo),
                             affine(ps[i].slope, ps[i].intercept, hi)}) {
            if (first) {
                mn = v;
                mx = v;
                first = false;
            } else {
                if (v < mn) mn = v;
                if (v > mx) mx = v;
            }
        }
        if (a.hi() <= ps[i].c1) break;
    }
    if (first) {  // degenerate arc
        auto [tc, v] = f.eval_chain(k, a.lo());
        return Arc(f.model(), tc, v, v);
    }
    return Arc(f.model(), T, mn, mx);
}

std::vector<Arc> preimage_arc_components(const FiberMap& f, const Arc& a) {
    if (a.degenerate()) throw ParamError("preimage_arc_components: arc must be nondegenerate");
    std::vector<Arc> out;
    const Rat& x = a.lo();
    const Rat& y = a.hi();
    for (std::size_t k = 0; k < f.model()->component_count(); ++k) {
        if (f.target_component(k) != a.component()) continue;
        const auto& ps = f.chain_pieces(k);
        std::vector<std::pair<Rat, Rat>> runs;
        for (const auto& p : ps) {
            Rat v0 = affine(p.slope, p.intercept, p.c0);
            Rat v1 = affine(p.slope, p.intercept, p.c1);
            Rat lo, hi;
            if (p.slope == 0) {
                if (v0 < x || v0 > y) continue;
                lo = p.c0;
                hi = p.c1;
            } else {
                Rat ta = (x - p.intercept) / p.slope;
                Rat tb = (y - p.intercept) / p.slope;
                if (ta > tb) std::swap(ta, tb);
                lo = std::max(p.c0, ta);
                hi = std::min(p.c1, tb);
                if (lo > hi) continue;
                (void)v1;
            }
            if (!runs.empty() && runs.back().second == lo)
                runs.back().second = hi;
            else
                runs.emplace_back(lo, hi);
        }
        for (const auto& [lo, hi] : runs) {
            if (!(lo < hi)) continue;  // folds touching the boundary
            Arc c(f.model(), k, lo, hi);
            Arc img = image_arc(f, c);
            if (img.lo() == x && img.hi() == y) out.push_back(std::move(c));
        }
    }
    return out;
}

LambdaDistance map_distance(const FiberMap& f, const FiberMap& g) {
    if (f.model() != g.model()) throw ParamError("map_distance: maps must share a model");
    LambdaDistance out;
    out.value = Rat(0);
    for (std::size_t k = 0; k < f.model()->component_count(); ++k) {
        if (f.target_component(k) != g.target_component(k)) {
            out.infinite = true;
            return out;
        }
        std::vector<Rat> mesh;
        for (const auto& p : f.chain_pieces(k)) mesh.push_back(p.c0);
        for (const auto& p : g.chain_pieces(k)) mesh.push_back(p.c0);
        mesh.push_back(f.model()->chain_length(k));
        std::sort(mesh.begin(), mesh.end());
        mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
        for (const Rat& c : mesh) {
            Rat d = rat_abs(f.eval_chain(k, c).second - g.eval_chain(k, c).second);
            if (d > out.value) out.value = d;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// per-fiber lap form and serialization

std::map<std::string, std::vector<MapLap>> FiberMap::laps() const {
    std::map<std::string, std::vector<MapLap>> out;
    for (std::size_t k = 0; k < model_->component_count(); ++k) {
        const auto& chain = model_->chain_fibers(k);
        std::size_t T = target_comp_[k];
        const auto& tchain = model_->chain_fibers(T);
        for (std::size_t pos = 0; pos < chain.size(); ++pos) {
            auto [fidx, forward] = chain[pos];
            const std::string& fname = model_->fiber_name(fidx);
            Rat flo = Rat(static_cast<long>(pos)), fhi = flo + 1;
            std::vector<MapLap> laps;
            const auto& ps = pieces_[k];
            for (std::size_t i = locate(ps, flo); i < ps.size() && ps[i].c0 < fhi; ++i) {
                Rat lo = std::max(flo, ps[i].c0);
                Rat hi = std::min(fhi, ps[i].c1);
                if (!(lo < hi)) continue;
                // split where the image crosses target fiber boundaries
                std::vector<Rat> cuts{lo};
                Rat v0 = affine(ps[i].slope, ps[i].intercept, lo);
                Rat v1 = affine(ps[i].slope, ps[i].intercept, hi);
                if (ps[i].slope != 0) {
                    Rat vlo = std::min(v0, v1), vhi = std::max(v0, v1);
                    for (Int m = rat_floor(vlo) + 1; Rat(m) < vhi; ++m) {
                        if (Rat(m) > vlo)
                            cuts.push_back((Rat(m) - ps[i].intercept) / ps[i].slope);
                    }
                    std::sort(cuts.begin(), cuts.end());
                }
                cuts.push_back(hi);
                for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
                    Rat a = cuts[j], b = cuts[j + 1];
                    Rat va = affine(ps[i].slope, ps[i].intercept, a);
                    Rat vb = affine(ps[i].slope, ps[i].intercept, b);
                    std::string target;
                    Rat tpos;
                    bool tforward;
                    if (va == vb) {
                        ModelPoint tp = model_->from_chain(T, va);
                        target = tp.fiber;
                        auto slot = model_->fiber_slot(target);
                        tpos = Rat(static_cast<long>(slot.pos));
                        tforward = slot.forward;
                    } else {
                        Rat interior = (va + vb) / 2;
                        Int m = rat_floor(interior);
                        auto mpos = static_cast<std::size_t>(m.convert_to<std::uint64_t>());
                        target = model_->fiber_name(tchain[mpos].first);
                        tpos = Rat(m);
                        tforward = tchain[mpos].second;
                    }
                    // source beta for chain c: forward ? c-pos : pos+1-c
                    // target beta for chain v: tforward ? v-tpos : tpos+1-v
                    // image beta as affine in source beta:
                    Rat cs = forward ? Rat(1) : Rat(-1);
                    Rat cb = forward ? flo : fhi;  // c = cb + cs*beta
                    // v(c) = slope*c + icept ; beta_t(v) = tforward? v-tpos : tpos+1-v
                    Rat vs = ps[i].slope * cs;
                    Rat vb2 = ps[i].slope * cb + ps[i].intercept;
                    Rat bs = tforward ? vs : -vs;
                    Rat bb = tforward ? vb2 - tpos : tpos + 1 - vb2;
                    Rat ta = forward ? a - flo : fhi - a;
                    Rat tb = forward ? b - flo : fhi - b;
                    if (ta > tb) std::swap(ta, tb);
                    laps.push_back({ta, tb, bs, bb, target});
                }
            }
            std::sort(laps.begin(), laps.end(),
                      [](const MapLap& a, const MapLap& b) { return a.t0 < b.t0; });
            // merge collinear laps with the same target
            std::vector<MapLap> merged;
            for (auto& l : laps) {
                if (!merged.empty() && merged.back().t1 == l.t0 &&
                    merged.back().slope == l.slope && merged.back().intercept == l.intercept &&
                    merged.back().target == l.target) {
                    merged.back().t1 = l.t1;
                } else {
                    merged.push_back(std::move(l));
                }
            }
            out[fname] = std::move(merged);
        }
    }
    return out;
}

std::string FiberMap::to_json() const {
    nlohmann::ordered_json j;
    if (!model_->ref_name().empty())
        j["model"] = model_->ref_name();
    else
        j["model"] = nlohmann::ordered_json::parse(model_->to_json());
    nlohmann::ordered_json pieces = nlohmann::ordered_json::object();
    for (const auto& [fiber, ls] : laps()) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& l : ls) {
            nlohmann::ordered_json lap;
            lap["dom"] = {rat_str(l.t0), rat_str(l.t1)};
            lap["slope"] = rat_str(l.slope);
            lap["intercept"] = rat_str(l.intercept);
            lap["target"] = l.target;
            arr.push_back(lap);
        }
        pieces[fiber] = arr;
    }
    j["pieces"] = pieces;
    return j.dump();
}

FiberMap FiberMap::from_json(const std::string& text,
                             const std::function<ModelPtr(const std::string&)>& resolve) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("fiber map: bad JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("model") || !j.contains("pieces"))
        throw ParseError("fiber map: expected object with model/pieces");
    ModelPtr model = resolve(j["model"].is_string() ? j["model"].get<std::string>()
                                                    : j["model"].dump());
    std::map<std::string, std::vector<MapLap>> laps;
    for (auto& [fiber, arr] : j["pieces"].items()) {
        std::vector<MapLap> ls;
        if (!arr.is_array()) throw ParseError("fiber map: laps must be an array");
        for (const auto& e : arr) {
            auto rd = [&](const nlohmann::json& v) {
                if (!v.is_string()) throw ParseError("fiber map: rationals must be strings");
                auto r = parse_rat(v.get<std::string>());
                if (!r) throw ParseError("fiber map: malformed rational");
                return *r;
            };
            MapLap l;
            l.t0 = rd(e.at("dom").at(0));
            l.t1 = rd(e.at("dom").at(1));
            l.slope = rd(e.at("slope"));
            l.intercept = rd(e.at("intercept"));
            l.target = e.at("target").get<std::string>();
            ls.push_back(std::move(l));
        }
        laps[fiber] = std::move(ls);
    }
    try {
        return FiberMap(model, laps);
    } catch (const ParamError& e) {
        throw ParseError(std::string("fiber map: ") + e.what());
    }
}

}  // namespace crookmap
