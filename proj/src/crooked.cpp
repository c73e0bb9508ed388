#include "crookmap/crooked.hpp"

#include <algorithm>
#include <random>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

enum class Ev : std::uint8_t { XHit, YHit, K1Hit, K2Hit, KReset, RunBreak };

// Emits the threshold events of one monotone piece with endpoint values
// (a,b), in traversal order. `first` marks the first piece of a component
// (its left boundary value is classified; interior junctions are classified
// once, by the left piece's right boundary).
template <typename V>
void emit_piece(std::vector<Ev>& out, const V& a, const V& b, const V& x, const V& k1,
                const V& k2, const V& y, bool first) {
    auto classify = [&](const V& v) {
        if (v == x)
            out.push_back(Ev::XHit);
        else if (v == y)
            out.push_back(Ev::YHit);
        else if (v == k1)
            out.push_back(Ev::K1Hit);
        else if (v == k2)
            out.push_back(Ev::K2Hit);
    };
    if (first) classify(a);
    if (a < b) {  // ascending: leaves the core band at k2, the run at y
        if (a == k2) out.push_back(Ev::KReset);
        if (a == y) out.push_back(Ev::RunBreak);
        if (a < x && x < b) out.push_back(Ev::XHit);
        if (a < k1 && k1 < b) out.push_back(Ev::K1Hit);
        if (a < k2 && k2 < b) {
            out.push_back(Ev::K2Hit);
            out.push_back(Ev::KReset);
        }
        if (a < y && y < b) {
            out.push_back(Ev::YHit);
            out.push_back(Ev::RunBreak);
        }
    } else if (b < a) {  // descending: leaves the core band at k1, the run at x
        if (a == k1) out.push_back(Ev::KReset);
        if (a == x) out.push_back(Ev::RunBreak);
        if (b < y && y < a) out.push_back(Ev::YHit);
        if (b < k2 && k2 < a) out.push_back(Ev::K2Hit);
        if (b < k1 && k1 < a) {
            out.push_back(Ev::K1Hit);
            out.push_back(Ev::KReset);
        }
        if (b < x && x < a) {
            out.push_back(Ev::XHit);
            out.push_back(Ev::RunBreak);
        }
    }
    classify(b);
}

// Two disjoint subarcs mapping exactly onto [k1,k2] within one cover:
// greedy earliest-completion pairing of K1/K2 hits, reset when the value
// leaves the band.
bool two_core_windows(const std::vector<Ev>& ev, std::size_t from, std::size_t to) {
    int windows = 0;
    bool h1 = false, h2 = false;
    for (std::size_t i = from; i < to; ++i) {
        switch (ev[i]) {
            case Ev::K1Hit:
                if (h2) {
                    if (++windows == 2) return true;
                    h1 = h2 = false;
                } else {
                    h1 = true;
                }
                break;
            case Ev::K2Hit:
                if (h1) {
                    if (++windows == 2) return true;
                    h1 = h2 = false;
                } else {
                    h2 = true;
                }
                break;
            case Ev::KReset:
            case Ev::RunBreak:
                h1 = h2 = false;
                break;
            default:
                break;
        }
    }
    return false;
}

// Analyses one component chain's event stream: every run that attains both
// x and y must have two disjoint core windows inside each minimal covering
// stretch (between consecutive opposite label hits).
bool stream_ok(const std::vector<Ev>& ev) {
    std::size_t run_start = 0;
    auto run_ok = [&](std::size_t lo, std::size_t hi) {
        bool sawx = false, sawy = false;
        for (std::size_t i = lo; i < hi; ++i) {
            if (ev[i] == Ev::XHit) sawx = true;
            if (ev[i] == Ev::YHit) sawy = true;
        }
        if (!sawx || !sawy) return true;  // image is a proper subset of A
        // minimal covers: last hit of one label block to first hit of the next
        std::size_t last_label = hi;  // index of previous label hit
        Ev prev = Ev::KReset;
        for (std::size_t i = lo; i < hi; ++i) {
            if (ev[i] != Ev::XHit && ev[i] != Ev::YHit) continue;
            if (last_label != hi && prev != ev[i]) {
                if (!two_core_windows(ev, last_label + 1, i)) return false;
            }
            last_label = i;
            prev = ev[i];
        }
        return true;
    };
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i] == Ev::RunBreak) {
            if (!run_ok(run_start, i)) return false;
            run_start = i + 1;
        }
    }
    return run_ok(run_start, ev.size());
}

// Values of one source component's pieces, as (v0, v1) pairs.
template <typename V>
struct PieceValues {
    std::vector<V> v0, v1;
};

template <typename V>
bool candidate_ok(const std::vector<PieceValues<V>>& sources, const V& x, const V& k1,
                  const V& k2, const V& y, std::vector<Ev>& scratch) {
    scratch.clear();
    for (const auto& src : sources) {
        for (std::size_t i = 0; i < src.v0.size(); ++i)
            emit_piece(scratch, src.v0[i], src.v1[i], x, k1, k2, y, i == 0);
        scratch.push_back(Ev::RunBreak);
    }
    return stream_ok(scratch);
}

// ---------------------------------------------------------------------------
// candidate mesh

std::vector<Rat> critical_mesh(const FiberMap& f, std::size_t compA, std::uint64_t max_mesh,
                               bool& thinned) {
    std::vector<Rat> m;
    const Model& model = *f.model();
    Rat L = model.chain_length(compA);
    for (Int i = 0; Rat(i) <= L; ++i) m.emplace_back(i);
    for (std::size_t k = 0; k < model.component_count(); ++k) {
        if (f.target_component(k) != compA) continue;
        for (const auto& p : f.chain_pieces(k)) {
            m.push_back(p.slope * p.c0 + p.intercept);
            m.push_back(p.slope * p.c1 + p.intercept);
        }
    }
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    if (m.size() > max_mesh) {
        std::vector<Rat> kept;
        std::size_t stride = (m.size() + max_mesh - 1) / max_mesh;
        for (std::size_t i = 0; i < m.size(); i += stride) kept.push_back(m[i]);
        if (kept.back() != m.back()) kept.push_back(m.back());
        m = std::move(kept);
        thinned = true;
    }
    return m;
}

std::vector<Rat> refine_mesh(const std::vector<Rat>& m, const Rat& eps, const Rat& delta,
                             const Rat& L) {
    std::vector<Rat> x;
    x.reserve(m.size() * 7);
    for (const Rat& v : m) {
        for (const Rat& off : {Rat(0), delta, -delta, 2 * delta, -2 * delta, eps, -eps}) {
            Rat w = v + off;
            if (w >= 0 && w <= L) x.push_back(w);
        }
    }
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    std::vector<Rat> out;
    out.reserve(x.size() * 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i > 0) out.push_back((x[i - 1] + x[i]) / 2);
        out.push_back(x[i]);
    }
    return out;
}

}  // namespace

std::optional<Arc> arc_violation(const FiberMap& f, const Rat& eps, const Rat& delta,
                                 const Arc& A) {
    Rat len = A.beta_length();
    if (!(2 * delta < len) || !(len < eps)) return std::nullopt;
    const Rat x = A.lo(), y = A.hi();
    const Rat k1 = x + delta, k2 = y - delta;
    for (const Arc& C : preimage_arc_components(f, A)) {
        // exact event stream over the component, positions implicit in order
        std::vector<Ev> ev;
        const auto& ps = f.chain_pieces(C.component());
        bool first = true;
        for (const auto& p : ps) {
            Rat lo = std::max(p.c0, C.lo());
            Rat hi = std::min(p.c1, C.hi());
            if (!(lo < hi)) continue;
            Rat a = p.slope * lo + p.intercept;
            Rat b = p.slope * hi + p.intercept;
            emit_piece(ev, a, b, x, k1, k2, y, first);
            first = false;
        }
        if (!stream_ok(ev)) return C;
    }
    return std::nullopt;
}

CrookednessVerdict check_crooked(const FiberMap& f, const Rat& eps, const Rat& delta,
                                 const CheckBudget& budget) {
    if (!(eps > 0) || !(delta > 0)) throw ParamError("check_crooked: eps, delta must be > 0");
    CrookednessVerdict verdict;
    verdict.eps = eps;
    verdict.delta = delta;
    if (eps <= 2 * delta) {
        verdict.crooked = true;
        verdict.vacuous = true;
        return verdict;
    }

    const Model& model = *f.model();
    std::uint64_t checked = 0;
    bool any_candidate = false;

    for (std::size_t compA = 0; compA < model.component_count(); ++compA) {
        Rat L = model.chain_length(compA);
        if (!(2 * delta < L)) continue;  // no arc in this component can qualify
        std::vector<Rat> mesh = critical_mesh(f, compA, budget.max_mesh, verdict.mesh_thinned);
        std::vector<Rat> xs = refine_mesh(mesh, eps, delta, L);

        // gather source components and their piece values
        std::vector<std::size_t> srcs;
        for (std::size_t k = 0; k < model.component_count(); ++k)
            if (f.target_component(k) == compA) srcs.push_back(k);

        // integer fast path when a common denominator fits
        Int D = 1;
        auto fold = [&D](const Rat& r) { D = boost::multiprecision::lcm(D, den(r)); };
        for (std::size_t k : srcs)
            for (const auto& p : f.chain_pieces(k)) {
                fold(p.slope * p.c0 + p.intercept);
                fold(p.slope * p.c1 + p.intercept);
            }
        for (const Rat& v : xs) fold(v);
        fold(delta);
        fold(eps);
        D *= 2;  // window-boundary fillers halve once more
        bool use_int = D * (rat_ceil(L) + 1) < Int("4611686018427387904");  // 2^62

        std::vector<PieceValues<long long>> ivals;
        std::vector<PieceValues<Rat>> rvals;
        if (use_int) {
            for (std::size_t k : srcs) {
                PieceValues<long long> pv;
                for (const auto& p : f.chain_pieces(k)) {
                    Rat v0 = p.slope * p.c0 + p.intercept;
                    Rat v1 = p.slope * p.c1 + p.intercept;
                    pv.v0.push_back(Int(num(v0) * (D / den(v0))).convert_to<long long>());
                    pv.v1.push_back(Int(num(v1) * (D / den(v1))).convert_to<long long>());
                }
                ivals.push_back(std::move(pv));
            }
        } else {
            for (std::size_t k : srcs) {
                PieceValues<Rat> pv;
                for (const auto& p : f.chain_pieces(k)) {
                    pv.v0.push_back(p.slope * p.c0 + p.intercept);
                    pv.v1.push_back(p.slope * p.c1 + p.intercept);
                }
                rvals.push_back(std::move(pv));
            }
        }
        auto to_int = [&](const Rat& r) {
            return Int(num(r) * (D / den(r))).convert_to<long long>();
        };
        long long idelta = use_int ? to_int(delta) : 0;

        std::vector<Ev> scratch;
        for (std::size_t xi = 0; xi < xs.size(); ++xi) {
            const Rat& x = xs[xi];
            Rat wlo = x + 2 * delta;
            Rat whi = std::min(x + eps, L);
            if (!(wlo < whi)) continue;
            // y candidates: refined mesh inside the window plus boundary fillers
            std::vector<Rat> ys;
            auto it = std::upper_bound(xs.begin(), xs.end(), wlo);
            for (; it != xs.end() && *it < whi; ++it) ys.push_back(*it);
            Rat first_inside = ys.empty() ? whi : ys.front();
            Rat last_inside = ys.empty() ? wlo : ys.back();
            ys.push_back((wlo + first_inside) / 2);
            ys.push_back((last_inside + whi) / 2);
            std::sort(ys.begin(), ys.end());
            ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

            for (const Rat& y : ys) {
                if (!(wlo < y) || !(y < whi)) continue;
                if (++checked > budget.max_candidates)
                    throw BudgetError("check_crooked: candidate budget exhausted after " +
                                          std::to_string(checked - 1) + " candidates",
                                      "", budget.max_candidates);
                any_candidate = true;
                bool ok;
                if (use_int) {
                    long long ix = to_int(x), iy = to_int(y);
                    ok = candidate_ok<long long>(ivals, ix, ix + idelta, iy - idelta, iy,
                                                 scratch);
                } else {
                    ok = candidate_ok<Rat>(rvals, x, x + delta, y - delta, y, scratch);
                }
                if (!ok) {
                    Arc A(f.model(), compA, x, y);
                    auto comp = arc_violation(f, eps, delta, A);
                    if (!comp)
                        throw Error("check_crooked: witness failed exact re-validation");
                    verdict.crooked = false;
                    verdict.candidates_checked = checked;
                    verdict.witness = CrookedWitness{
                        A, *comp,
                        "a covering subarc of the component admits fewer than two "
                        "disjoint subarcs mapping onto the core"};
                    return verdict;
                }
            }
        }
    }
    verdict.crooked = true;
    verdict.vacuous = !any_candidate;
    verdict.candidates_checked = checked;
    return verdict;
}

// ---------------------------------------------------------------------------
// constructive split

namespace {

struct HitEvent {
    Rat pos;
    int kind;  // 0 = lo hit, 1 = hi hit, 2 = reset
};

// Exact event list for band [lo,hi] along component `comp` restricted to
// [c0,c1], positions ascending.
std::vector<HitEvent> band_events(const FiberMap& f, std::size_t comp, const Rat& c0,
                                  const Rat& c1, const Rat& lo, const Rat& hi) {
    std::vector<HitEvent> ev;
    auto add = [&](const Rat& p, int kind) {
        if (!ev.empty() && ev.back().pos == p && ev.back().kind == kind) return;
        ev.push_back({p, kind});
    };
    bool first = true;
    for (const auto& p : f.chain_pieces(comp)) {
        Rat a = std::max(p.c0, c0), b = std::min(p.c1, c1);
        if (!(a < b)) continue;
        Rat va = p.slope * a + p.intercept;
        Rat vb = p.slope * b + p.intercept;
        auto classify = [&](const Rat& pos, const Rat& v) {
            if (v == lo) add(pos, 0);
            if (v == hi) add(pos, 1);
            if (v < lo || v > hi) add(pos, 2);
        };
        if (first) classify(a, va);
        first = false;
        if (va != vb) {
            Rat step = (vb - va) / (b - a);
            auto cross = [&](const Rat& t) { return a + (t - va) / step; };
            if (va < vb) {
                if (va == hi) add(a, 2);
                if (va < lo && lo < vb) add(cross(lo), 0);
                if (va < hi && hi < vb) {
                    add(cross(hi), 1);
                    add(cross(hi), 2);
                }
            } else {
                if (va == lo) add(a, 2);
                if (vb < hi && hi < va) add(cross(hi), 1);
                if (vb < lo && lo < va) {
                    add(cross(lo), 0);
                    add(cross(lo), 2);
                }
            }
        }
        classify(b, vb);
    }
    return ev;
}

// Earliest-ending subarc after `after` mapping exactly onto [lo,hi].
std::optional<std::pair<Rat, Rat>> first_window(const std::vector<HitEvent>& ev,
                                                const Rat& after) {
    std::optional<Rat> hlo, hhi;
    for (const auto& e : ev) {
        if (e.kind == 2) {
            hlo.reset();
            hhi.reset();
            continue;
        }
        if (!(e.pos > after)) continue;
        if (e.kind == 0) {
            if (hhi) return std::make_pair(*hhi, e.pos);
            hlo = e.pos;
        } else {
            if (hlo) return std::make_pair(*hlo, e.pos);
            hhi = e.pos;
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<SplitPair> crooked_split(const FiberMap& f, const Rat& eps, const Rat& delta,
                                     const Arc& A) {
    Rat len = A.beta_length();
    if (!(2 * delta < len) || !(len < eps))
        throw ParamError("crooked_split: need 2*delta < len(A) < eps");
    const Rat x = A.lo(), y = A.hi();
    std::vector<SplitPair> out;
    for (const Arc& C : preimage_arc_components(f, A)) {
        auto ev1 = band_events(f, C.component(), C.lo(), C.hi(), x, y - delta);
        auto ev2 = band_events(f, C.component(), C.lo(), C.hi(), x + delta, y);
        Rat before = C.lo() - 1;
        std::optional<std::pair<Rat, Rat>> w1, w2;
        if (auto a = first_window(ev1, before)) {
            if (auto b = first_window(ev2, a->second)) {
                w1 = a;
                w2 = b;
            }
        }
        if (!w1) {
            if (auto b = first_window(ev2, before)) {
                if (auto a = first_window(ev1, b->second)) {
                    w1 = a;
                    w2 = b;
                }
            }
        }
        if (!w1 || !w2)
            throw ParamError("crooked_split: no disjoint pair found (map not crooked here?)");
        out.push_back({C, Arc(f.model(), C.component(), w1->first, w1->second),
                       Arc(f.model(), C.component(), w2->first, w2->second)});
    }
    return out;
}

std::optional<FoundViolation> grid_falsifier(const FiberMap& f, const Rat& eps,
                                             const Rat& delta, unsigned resolution,
                                             std::uint64_t seed) {
    if (resolution < 2) throw ParamError("grid_falsifier: resolution must be >= 2");
    if (eps <= 2 * delta) return std::nullopt;
    const Model& model = *f.model();
    for (std::size_t comp = 0; comp < model.component_count(); ++comp) {
        Rat L = model.chain_length(comp);
        long n = (rat_floor(L * Rat(static_cast<long>(resolution)))).convert_to<long>();
        Rat step = Rat(1, static_cast<long>(resolution));
        for (long i = 0; i <= n; ++i) {
            for (long j = i + 1; j <= n; ++j) {
                Rat len = Rat(j - i) * step;
                if (!(2 * delta < len)) continue;
                if (!(len < eps)) break;
                Arc A(f.model(), comp, Rat(i) * step, Rat(j) * step);
                if (auto C = arc_violation(f, eps, delta, A))
                    return FoundViolation{A, *C};
            }
        }
        // seeded random rational arcs
        std::mt19937_64 rng(seed + comp);
        for (int t = 0; t < 64; ++t) {
            std::uint64_t d = 2 + rng() % 997;
            Rat span = std::min(eps, L);
            Rat lenr = 2 * delta +
                       (span - 2 * delta) * Rat(static_cast<long>(1 + rng() % (d - 1)),
                                                static_cast<long>(d));
            if (!(lenr < span)) continue;
            std::uint64_t d2 = 2 + rng() % 997;
            Rat xmax = L - lenr;
            Rat xr = xmax * Rat(static_cast<long>(rng() % (d2 + 1)), static_cast<long>(d2));
            Arc A(f.model(), comp, xr, xr + lenr);
            if (auto C = arc_violation(f, eps, delta, A)) return FoundViolation{A, *C};
        }
    }
    return std::nullopt;
}

std::string CrookednessVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["parameters"]["epsilon"] = rat_str(eps);
    j["parameters"]["delta"] = rat_str(delta);
    j["crooked"] = crooked;
    j["vacuous"] = vacuous;
    j["mesh_thinned"] = mesh_thinned;
    j["candidates_checked"] = candidates_checked;
    if (witness) {
        j["witness"]["arc"] = nlohmann::ordered_json::parse(witness->arc.to_json());
        j["witness"]["component"] =
            nlohmann::ordered_json::parse(witness->component.to_json());
        j["witness"]["reason"] = witness->reason;
    } else {
        j["witness"] = nullptr;
    }
    return j.dump();
}

}  // namespace crookmap
