#include "crookmap/knaster.hpp"

#include <algorithm>
#include <mutex>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

char digit_char(unsigned d) {
    return d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + (d - 10));
}

unsigned char_digit(char c) {
    return c <= '9' ? static_cast<unsigned>(c - '0') : static_cast<unsigned>(c - 'a' + 10);
}

// coordinate tuple of fiber word w as affine functions of beta:
// x_k = a[k] + b[k]*beta, with x_0 = beta and x_k the lap-w_k preimage of
// x_{k-1} under tent(n)
void coord_affines(const std::string& w, unsigned n, std::vector<Rat>& a,
                   std::vector<Rat>& b) {
    a.assign(w.size() + 1, Rat(0));
    b.assign(w.size() + 1, Rat(0));
    a[0] = Rat(0);
    b[0] = Rat(1);
    for (std::size_t k = 1; k <= w.size(); ++k) {
        unsigned j = char_digit(w[k - 1]);
        long nl = static_cast<long>(n);
        if (j % 2 == 0) {  // rising lap: x = (y + j)/n
            a[k] = (a[k - 1] + Rat(static_cast<long>(j))) / nl;
            b[k] = b[k - 1] / nl;
        } else {  // falling lap: x = (j + 1 - y)/n
            a[k] = (Rat(static_cast<long>(j) + 1) - a[k - 1]) / nl;
            b[k] = -b[k - 1] / nl;
        }
    }
}

Rat roof(const Rat& x) { return x <= Rat(1, 2) ? 2 * x : 2 - 2 * x; }

}  // namespace

SnModel build_sn(unsigned n, unsigned depth, const PieceBudget& guard) {
    if (n < 2) throw ParamError("build_sn: n must be at least 2");
    if (n > 36) throw ParamError("build_sn: n above 36 not supported");
    Int count = 1;
    for (unsigned k = 0; k < depth; ++k) {
        count *= n;
        if (count > Int(guard.max_pieces))
            throw BudgetError("build_sn: fiber count exceeds the guard", count.str(),
                              guard.max_pieces);
    }

    std::vector<std::string> fibers;
    fibers.emplace_back("");
    for (unsigned k = 0; k < depth; ++k) {
        std::vector<std::string> next;
        next.reserve(fibers.size() * n);
        for (const auto& w : fibers)
            for (unsigned d = 0; d < n; ++d) next.push_back(w + digit_char(d));
        fibers = std::move(next);
    }

    std::map<std::string, FiberEmbedding> embedding;
    std::vector<Rat> a, b;
    for (const auto& w : fibers) {
        coord_affines(w, n, a, b);
        FiberEmbedding e;
        e.at0 = a;
        e.at1.reserve(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) e.at1.push_back(a[k] + b[k]);
        embedding[w] = std::move(e);
    }

    // involutions by endpoint-coordinate matching
    auto pair_by = [&](bool at_one) {
        std::map<std::vector<Rat>, std::vector<std::string>> groups;
        for (const auto& w : fibers)
            groups[at_one ? embedding[w].at1 : embedding[w].at0].push_back(w);
        std::map<std::string, std::string> tau;
        for (const auto& [coords, ws] : groups) {
            if (ws.size() == 1) continue;  // unshared end: involution fixes the fiber
            if (ws.size() != 2)
                throw Error("build_sn: more than two fibers share an end");
            tau[ws[0]] = ws[1];
            tau[ws[1]] = ws[0];
        }
        return tau;
    };
    auto mm = std::make_shared<Model>(fibers, pair_by(false), pair_by(true),
                                      std::move(embedding));
    mm->set_ref_name("sn:" + std::to_string(n) + ":depth=" + std::to_string(depth));
    return SnModel{mm, n, depth};
}

FiberMap induced_shift(const SnModel& m) {
    const Model& model = *m.model;
    std::map<std::string, std::vector<MapLap>> laps;
    std::vector<Rat> a, b;
    for (const auto& w : model.fibers()) {
        coord_affines(w, m.n, a, b);
        // refine beta so that every image coordinate stays inside one lap:
        // cuts where x_k crosses 1/2 (roof fold) and where roof(x_k) crosses
        // a lap boundary j/n of the target itinerary
        std::vector<Rat> cuts{Rat(0), Rat(1)};
        auto add_cut = [&](const Rat& c) {
            if (c > 0 && c < 1) cuts.push_back(c);
        };
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (b[k] == 0) continue;
            add_cut((Rat(1, 2) - a[k]) / b[k]);
            if (k >= 1) {
                for (unsigned j = 1; j < m.n; ++j) {
                    Rat t(static_cast<long>(j), static_cast<long>(m.n));
                    // roof(x_k) = t on both branches of the fold
                    add_cut((t / 2 - a[k]) / b[k]);
                    add_cut(((Rat(2) - t) / 2 - a[k]) / b[k]);
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        std::vector<MapLap> ls;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            Rat mid = (cuts[i] + cuts[i + 1]) / 2;
            // image fiber word: lap itinerary of roof(x_1..x_depth)
            std::string target;
            target.reserve(m.depth);
            for (std::size_t k = 1; k <= m.depth; ++k) {
                Rat y = roof(a[k] + b[k] * mid);
                Int lap = rat_floor(y * Rat(static_cast<long>(m.n)));
                if (lap == m.n) --lap;
                target.push_back(digit_char(lap.convert_to<unsigned>()));
            }
            // beta' = roof(beta) on this sub-lap
            MapLap l;
            l.t0 = cuts[i];
            l.t1 = cuts[i + 1];
            if (mid <= Rat(1, 2)) {
                l.slope = Rat(2);
                l.intercept = Rat(0);
            } else {
                l.slope = Rat(-2);
                l.intercept = Rat(2);
            }
            l.target = std::move(target);
            ls.push_back(std::move(l));
        }
        laps[w] = std::move(ls);
    }
    return FiberMap(m.model, laps);
}

SpecialPoints special_points(const SnModel& m) {
    std::string zeros(m.depth, '0');
    ModelPoint e = m.model->canonical({zeros, Rat(0)});
    ModelPoint d = m.model->canonical({zeros, Rat(1)});
    return SpecialPoints{e, d, Arc::join(e, d, m.model)};
}

Int solenoid_index(unsigned j) {
    if (j == 0) throw ParamError("solenoid_index: j must be positive");
    Int out = 2;
    Int four = 4;
    for (unsigned k = 1; k <= j; ++k) {
        out *= four - 1;
        four *= 4;
    }
    return out;
}

SnPropertyReport check_model_properties(const SnModel& m, unsigned orbit_steps) {
    SnPropertyReport rep;
    FiberMap g = induced_shift(m);
    auto sp = special_points(m);
    const Model& model = *m.model;
    Rat L = model.chain_length(0);

    // the orbit of d must eventually leave a probe arc (the far end fiber,
    // which avoids the orbit's tail at e)
    {
        Arc probe(m.model, 0, std::max(Rat(0), L - 1), L);
        auto [comp, c] = model.to_chain(sp.d);
        long last_inside = -1;
        Rat cur = c;
        for (unsigned step = 1; step <= orbit_steps; ++step) {
            cur = g.eval_chain(comp, cur).second;
            if (cur >= probe.lo() && cur <= probe.hi()) last_inside = static_cast<long>(step);
        }
        rep.escape_step = last_inside + 1;
        rep.orbit_escapes = rep.escape_step <= static_cast<long>(orbit_steps);
    }

    // finite shadow of the shift being a homeomorphism: the chain form is a
    // single fold of two full branches, and each branch doubles the gluing
    // lattice bijectively
    {
        rep.shift_doubles_lattice = true;
        if (m.depth == 0) {
            rep.shift_doubles_lattice = stretch_lipschitz(g) == std::make_pair(Rat(2), Rat(2));
        } else {
            Rat half = L / 2;
            for (Int i = 0; Rat(i) <= half; ++i) {
                if (g.eval_chain(0, Rat(i)).second != Rat(2 * i)) {
                    rep.shift_doubles_lattice = false;
                    break;
                }
            }
            for (Int i = 0; Rat(i) <= half; ++i) {
                if (g.eval_chain(0, half + Rat(i)).second != L - Rat(2 * i)) {
                    rep.shift_doubles_lattice = false;
                    break;
                }
            }
        }
    }

    // the e-side component of g^{-1}(J) stays inside J and misses d
    {
        auto [jc, jlo] = model.to_chain(sp.e);
        Rat jhi = model.to_chain(sp.d).second;
        if (jlo > jhi) std::swap(jlo, jhi);
        // components of {c : g(c) in [jlo,jhi]}
        std::vector<std::pair<Rat, Rat>> runs;
        for (const auto& p : g.chain_pieces(jc)) {
            Rat v0 = p.slope * p.c0 + p.intercept;
            Rat v1 = p.slope * p.c1 + p.intercept;
            Rat lo = p.c0, hi = p.c1;
            if (p.slope != 0) {
                Rat ta = (jlo - p.intercept) / p.slope;
                Rat tb = (jhi - p.intercept) / p.slope;
                if (ta > tb) std::swap(ta, tb);
                lo = std::max(lo, ta);
                hi = std::min(hi, tb);
                if (lo > hi) continue;
            } else if (v0 < jlo || v0 > jhi) {
                continue;
            }
            (void)v1;
            if (!runs.empty() && runs.back().second == lo)
                runs.back().second = hi;
            else
                runs.emplace_back(lo, hi);
        }
        rep.preimage_inside_j = false;
        rep.truncation_artifacts = 0;
        Rat dpos = model.to_chain(sp.d).second;
        for (const auto& [lo, hi] : runs) {
            bool contains_e = lo <= model.to_chain(sp.e).second &&
                              model.to_chain(sp.e).second <= hi;
            if (contains_e) {
                rep.preimage_inside_j =
                    lo >= jlo && hi <= jhi && !(lo <= dpos && dpos <= hi);
            } else {
                ++rep.truncation_artifacts;
            }
        }
    }
    return rep;
}

std::pair<SnModel, std::map<std::string, std::string>> refine(const SnModel& m,
                                                              const PieceBudget& guard) {
    SnModel finer = build_sn(m.n, m.depth + 1, guard);
    std::map<std::string, std::string> projection;
    for (const auto& w : finer.model->fibers()) projection[w] = w.substr(0, m.depth);
    return {finer, projection};
}

std::string SnPropertyReport::to_json() const {
    nlohmann::ordered_json j;
    j["orbit_escapes"] = orbit_escapes;
    j["escape_step"] = escape_step;
    j["shift_doubles_lattice"] = shift_doubles_lattice;
    j["preimage_inside_j"] = preimage_inside_j;
    j["truncation_artifacts"] = truncation_artifacts;
    j["model_class_facts"] =
        "proper subcontinua are arcs; the zero itinerary end is the unique "
        "endpoint for even n; interior points have matchbox neighborhoods";
    return j.dump();
}

ModelPtr resolve_model_ref(const std::string& ref) {
    if (ref.empty()) throw ParseError("empty model reference");
    if (ref.front() == '{') return Model::from_json(ref);
    if (ref == "interval") return Model::interval();
    if (ref.rfind("sn:", 0) == 0) {
        static std::mutex cache_mutex;
        static std::map<std::string, ModelPtr> cache;
        {
            std::lock_guard<std::mutex> lock(cache_mutex);
            auto it = cache.find(ref);
            if (it != cache.end()) return it->second;
        }
        auto rest = ref.substr(3);
        auto colon = rest.find(':');
        if (colon == std::string::npos || rest.compare(colon, 7, ":depth=") != 0)
            throw ParseError("bad model reference '" + ref + "' (want sn:<n>:depth=<d>)");
        ModelPtr built;
        try {
            unsigned n = static_cast<unsigned>(std::stoul(rest.substr(0, colon)));
            unsigned d = static_cast<unsigned>(std::stoul(rest.substr(colon + 7)));
            built = build_sn(n, d).model;
        } catch (const std::invalid_argument&) {
            throw ParseError("bad model reference '" + ref + "'");
        } catch (const std::out_of_range&) {
            throw ParseError("bad model reference '" + ref + "'");
        }
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto [it, inserted] = cache.emplace(ref, built);
        return it->second;
    }
    throw ParseError("unknown model reference '" + ref + "'");
}

}  // namespace crookmap
