#include "crookmap/props.hpp"

#include <algorithm>

#include "crookmap/errors.hpp"
#include "crookmap/knaster.hpp"
#include "json.hpp"

namespace crookmap {

Rat random_unit_rational(std::mt19937_64& rng) {
    long d = 1 + static_cast<long>(rng() % 997);
    long n = static_cast<long>(rng() % static_cast<std::uint64_t>(d + 1));
    return Rat(n, d);
}

FiberMap random_chain_selfmap(const ModelPtr& model, std::mt19937_64& rng,
                              unsigned max_cuts) {
    if (model->component_count() != 1)
        throw ParamError("random_chain_selfmap: single-component models only");
    Rat L = model->chain_length(0);
    unsigned cuts = 2 + rng() % std::max(1u, max_cuts);
    std::vector<Rat> xs{Rat(0), L};
    for (unsigned i = 0; i + 2 < cuts; ++i) xs.push_back(L * random_unit_rational(rng));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<Rat> vs;
    vs.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vs.push_back(L * random_unit_rational(rng));
    std::vector<ChainPiece> pieces;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        Rat slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
        pieces.push_back({xs[i], xs[i + 1], slope, vs[i] - slope * xs[i]});
    }
    return chain_map_from_pieces(model, {std::move(pieces)}, {0});
}

namespace {

Arc random_arc(const ModelPtr& model, std::mt19937_64& rng) {
    Rat L = model->chain_length(0);
    Rat a = L * random_unit_rational(rng);
    Rat b = L * random_unit_rational(rng);
    if (a == b) b = (a < L) ? (a + L) / 2 : a / 2;
    return Arc(model, 0, a, b);
}

std::string arc_str(const Arc& a) {
    return "[" + rat_str(a.lo()) + "," + rat_str(a.hi()) + "]@" +
           std::to_string(a.component());
}

PropertyResult iterate_distance(unsigned instances, std::uint64_t seed,
                                const CrookingBudgets& budgets) {
    PropertyResult res{"iterate-distance"};
    std::mt19937_64 rng(seed);
    auto model = Model::interval();
    for (unsigned t = 0; t < instances; ++t) {
        FiberMap f = random_chain_selfmap(model, rng, 6);
        FiberMap F = random_chain_selfmap(model, rng, 6);
        LambdaDistance d0 = map_distance(f, F);
        if (d0.infinite || d0.value == 0) continue;
        ++res.instances;
        Rat s = working_lipschitz(f);
        Rat eta = d0.value * Rat(9, 8);  // strict premise d(f,F) < eta
        FiberMap fj = f, Fj = F;
        for (unsigned j = 2; j <= 4; ++j) {
            fj = fr_compose(f, fj, budgets.pieces);
            Fj = fr_compose(F, Fj, budgets.pieces);
            LambdaDistance dj = map_distance(fj, Fj);
            Rat bound = iterate_gap_bound(s, eta, j);
            if (dj.infinite || !(dj.value < bound)) {
                ++res.violations;
                if (res.first_violation.empty())
                    res.first_violation = "instance " + std::to_string(t) + " j=" +
                                          std::to_string(j) + ": distance " +
                                          (dj.infinite ? "INFINITE" : rat_str(dj.value)) +
                                          " !< " + rat_str(bound);
                break;
            }
        }
    }
    return res;
}

PropertyResult neighborhood_image(unsigned instances, std::uint64_t seed,
                                  const CrookingBudgets& budgets) {
    (void)budgets;
    PropertyResult res{"neighborhood-image"};
    std::mt19937_64 rng(seed);
    SnModel sn = build_sn(2, 2);
    std::vector<ModelPtr> models{Model::interval(), sn.model};
    for (unsigned t = 0; t < instances; ++t) {
        const ModelPtr& model = models[t % models.size()];
        FiberMap f = random_chain_selfmap(model, rng, 6);
        Rat s = working_lipschitz(f);
        Arc A = random_arc(model, rng);
        if (A.degenerate()) continue;
        ++res.instances;
        for (const Rat& r : {Rat(1, 16), Rat(1, 5), Rat(1, 2)}) {
            Arc n_in = arc_neighborhood(A, r);
            Arc lhs = image_arc(f, n_in);
            Arc rhs = arc_neighborhood(image_arc(f, A), s * r);
            if (!rhs.contains(lhs)) {
                ++res.violations;
                if (res.first_violation.empty())
                    res.first_violation = "instance " + std::to_string(t) + " A=" +
                                          arc_str(A) + " r=" + rat_str(r) + ": " +
                                          arc_str(lhs) + " not inside " + arc_str(rhs);
                break;
            }
        }
    }
    return res;
}

PropertyResult crooked_stability(unsigned instances, std::uint64_t seed,
                                 const CrookingBudgets& budgets) {
    PropertyResult res{"crooked-stability"};
    std::mt19937_64 rng(seed);
    auto model = Model::interval();
    FiberMap f = fold_lift(model, zigzag_map(8, 3));
    // certify a base crookedness scale for the generator lift
    Rat eps, delta;
    bool have = false;
    for (const auto& [e, d] : std::vector<std::pair<Rat, Rat>>{
             {Rat(1, 2), Rat(1, 16)}, {Rat(1, 2), Rat(1, 8)}, {Rat(1, 4), Rat(1, 16)}}) {
        CrookednessVerdict v = check_crooked(f, e, d, budgets.check);
        if (v.crooked && !v.vacuous) {
            eps = e;
            delta = d;
            have = true;
            break;
        }
    }
    if (!have) {
        res.first_violation = "no base crookedness certificate for the generator lift";
        res.violations = 1;
        res.instances = 1;
        return res;
    }
    for (unsigned t = 0; t < instances; ++t) {
        // small near-identity nudge composed on top of f
        Rat amp = Rat(1, 64) * random_unit_rational(rng);
        Rat center = Rat(1, 4) + Rat(1, 2) * random_unit_rational(rng);
        if (amp == 0) amp = Rat(1, 128);
        PLMap nudge({Rat(0), center, Rat(1)}, {Rat(0), center + amp, Rat(1)});
        FiberMap F = fr_compose(FiberMap::from_interval_map(nudge), f, budgets.pieces);
        LambdaDistance eta0 = map_distance(f, F);
        if (eta0.infinite) continue;
        ++res.instances;
        Rat eta = eta0.value == 0 ? Rat(1, 1024) : eta0.value * Rat(9, 8);
        CrookednessVerdict v = check_crooked(F, eps, delta + 2 * eta, budgets.check);
        if (!v.crooked) {
            ++res.violations;
            if (res.first_violation.empty())
                res.first_violation = "instance " + std::to_string(t) +
                                      ": perturbed map not crooked at delta+2*eta with eta=" +
                                      rat_str(eta);
        }
    }
    return res;
}

PropertyResult iterated_neighborhood(unsigned instances, std::uint64_t seed,
                                     const CrookingBudgets& budgets) {
    PropertyResult res{"iterated-neighborhood"};
    std::mt19937_64 rng(seed);
    auto model = Model::interval();
    FiberMap f = FiberMap::from_interval_map(tent(2));
    CrookingStep step = crooking_step(f, Rat(2), Rat(3, 4), Rat(1, 32), Rat(1, 4), budgets);
    const FiberMap& F = step.F;
    Rat gamma = Rat(4, step.q_built);  // the built generator's crookedness scale
    Rat s = working_lipschitz(F);
    for (unsigned t = 0; t < instances; ++t) {
        Arc A = random_arc(model, rng);
        if (!(A.beta_length() >= gamma)) {
            Rat lo = A.lo() > 1 - gamma ? Rat(0) : A.lo();
            A = Arc(model, 0, lo, std::min(Rat(1), lo + gamma));
        }
        ++res.instances;
        Rat r = random_unit_rational(rng) / 4;
        if (r == 0) r = Rat(1, 64);
        for (unsigned j = 1; j <= 3; ++j) {
            Arc lhs = arc_neighborhood(A, r);
            Arc rhs = A;
            for (unsigned i = 0; i < j; ++i) {
                lhs = image_arc(F, lhs);
                rhs = image_arc(F, rhs);
            }
            Rat q = rat_pow(s, j) * (r + 2 * gamma);
            Arc bound = arc_neighborhood(rhs, q);
            if (!bound.contains(lhs)) {
                ++res.violations;
                if (res.first_violation.empty())
                    res.first_violation = "instance " + std::to_string(t) + " j=" +
                                          std::to_string(j) + " A=" + arc_str(A) +
                                          " r=" + rat_str(r);
                break;
            }
        }
    }
    return res;
}

PropertyResult doubling(unsigned instances, std::uint64_t seed,
                        const CrookingBudgets& budgets) {
    (void)instances;
    (void)seed;
    (void)budgets;
    PropertyResult res{"doubling"};
    for (unsigned n : {2u, 4u}) {
        for (unsigned depth = 0; depth <= 4; ++depth) {
            SnModel m = build_sn(n, depth);
            FiberMap g = induced_shift(m);
            ++res.instances;
            // the canonical chain form must be a single two-branch fold
            const auto& ps = g.chain_pieces(0);
            Rat L = m.model->chain_length(0);
            bool structure = depth == 0
                                 ? ps.size() == 1
                                 : (ps.size() == 2 && ps[0].slope == 2 &&
                                    ps[1].slope == -2 && ps[0].c1 == L / 2);
            if (!structure) {
                ++res.violations;
                if (res.first_violation.empty())
                    res.first_violation = "sn:" + std::to_string(n) + " depth " +
                                          std::to_string(depth) +
                                          ": shift is not a two-branch fold";
                continue;
            }
            // fold-free critical arcs: all mesh pairs within one branch
            std::vector<Rat> mesh;
            for (Int i = 0; Rat(i) <= L; ++i) mesh.emplace_back(i);
            bool bad = false;
            for (const auto& branch : {std::make_pair(Rat(0), L / 2),
                                       std::make_pair(L / 2, L)}) {
                std::vector<Rat> pts;
                for (const Rat& c : mesh)
                    if (c >= branch.first && c <= branch.second) pts.push_back(c);
                for (std::size_t i = 0; i < pts.size() && !bad; ++i)
                    for (std::size_t j = i + 1; j < pts.size(); ++j) {
                        Arc a(m.model, 0, pts[i], pts[j]);
                        if (image_arc(g, a).beta_length() != 2 * a.beta_length()) {
                            bad = true;
                            res.first_violation = "sn:" + std::to_string(n) + " depth " +
                                                  std::to_string(depth) + " arc " +
                                                  arc_str(a);
                            break;
                        }
                    }
            }
            if (bad) ++res.violations;
        }
    }
    return res;
}

PropertyResult coherence(unsigned instances, std::uint64_t seed,
                         const CrookingBudgets& budgets) {
    PropertyResult res{"coherence"};
    std::mt19937_64 rng(seed);
    auto model = Model::interval();
    for (unsigned t = 0; t < instances; ++t) {
        FiberMap f = random_chain_selfmap(model, rng, 8);
        Rat eps = Rat(1, 1 + static_cast<long>(rng() % 3));
        Rat delta = eps / static_cast<long>(8 + rng() % 8);
        ++res.instances;
        CrookednessVerdict v = check_crooked(f, eps, delta, budgets.check);
        auto falsified = grid_falsifier(f, eps, delta, 512, seed + t);
        if (v.crooked && falsified) {
            ++res.violations;
            if (res.first_violation.empty())
                res.first_violation = "instance " + std::to_string(t) +
                                      ": checker certified but falsifier found " +
                                      arc_str(falsified->arc);
            continue;
        }
        if (!v.crooked) {
            // negative witness must re-validate independently
            auto confirm = arc_violation(f, eps, delta, v.witness->arc);
            if (!confirm || !(*confirm == v.witness->component)) {
                ++res.violations;
                if (res.first_violation.empty())
                    res.first_violation = "instance " + std::to_string(t) +
                                          ": witness failed re-validation";
            }
        }
    }
    return res;
}

}  // namespace

std::vector<std::string> property_families() {
    return {"iterate-distance", "neighborhood-image", "crooked-stability",
            "iterated-neighborhood", "doubling", "coherence"};
}

PropertyResult run_property(const std::string& family, unsigned instances,
                            std::uint64_t seed, const CrookingBudgets& budgets) {
    if (family == "iterate-distance") return iterate_distance(instances, seed, budgets);
    if (family == "neighborhood-image") return neighborhood_image(instances, seed, budgets);
    if (family == "crooked-stability") return crooked_stability(instances, seed, budgets);
    if (family == "iterated-neighborhood")
        return iterated_neighborhood(instances, seed, budgets);
    if (family == "doubling") return doubling(instances, seed, budgets);
    if (family == "coherence") return coherence(instances, seed, budgets);
    throw ParamError("unknown property family '" + family + "'");
}

std::string PropertyResult::to_json() const {
    nlohmann::ordered_json j;
    j["family"] = family;
    j["instances"] = instances;
    j["violations"] = violations;
    if (!first_violation.empty()) j["first_violation"] = first_violation;
    j["ok"] = ok();
    return j.dump();
}

}  // namespace crookmap
