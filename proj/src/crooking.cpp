#include "crookmap/crooking.hpp"

#include <algorithm>

#include "crookmap/errors.hpp"
#include "json.hpp"

namespace crookmap {

namespace {

constexpr long kMaxWalkSpan = 20;  // G(20) is ~1.6e7 segments already

// ascent patterns rel[d] = crooked walk 0 -> d, built bottom up
std::vector<std::vector<long>> ascent_patterns(long dmax) {
    std::vector<std::vector<long>> rel(static_cast<std::size_t>(dmax) + 1);
    rel[0] = {0};
    if (dmax >= 1) rel[1] = {0, 1};
    if (dmax >= 2) rel[2] = {0, 1, 2};
    for (long d = 3; d <= dmax; ++d) {
        const auto& a = rel[d - 1];
        const auto& b = rel[d - 2];
        std::vector<long> out;
        out.reserve(2 * a.size() + b.size());
        out.insert(out.end(), a.begin(), a.end());
        // descend from d-1 to 1: mirror of the ascent over span d-2
        for (std::size_t i = 1; i < b.size(); ++i) out.push_back(d - 1 - b[i]);
        // ascend from 1 to d
        for (std::size_t i = 1; i < a.size(); ++i) out.push_back(1 + a[i]);
        rel[d] = std::move(out);
    }
    return rel;
}

}  // namespace

std::vector<long> zigzag(long a, long b) {
    long span = a <= b ? b - a : a - b;
    if (span > kMaxWalkSpan)
        throw BudgetError("zigzag: span too large to materialize",
                          zigzag_segments(span).str(), 0);
    auto rel = ascent_patterns(span);
    std::vector<long> out;
    out.reserve(rel[span].size());
    if (a <= b)
        for (long v : rel[span]) out.push_back(a + v);
    else
        for (long v : rel[span]) out.push_back(a - v);
    return out;
}

Int zigzag_segments(long span) {
    if (span < 0) throw ParamError("zigzag_segments: negative span");
    if (span == 0) return 0;
    Int prev = 1, cur = 2;  // G(1), G(2)
    if (span == 1) return prev;
    for (long d = 3; d <= span; ++d) {
        Int next = 2 * cur + prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

Int generator_pieces_required(const Int& q, const Int& p) {
    long pl = p.convert_to<long>();
    return q * (zigzag_segments(pl) + zigzag_segments(2 * pl) + zigzag_segments(pl + 1));
}

GeneratorParams derive_generator_params(const Rat& eps, const Rat& gamma) {
    if (!(eps > 0) || !(eps < 1))
        throw ParamError("generator: need 0 < eps < 1");
    if (!(gamma > 0) || !(gamma < eps / 4))
        throw ParamError("generator: need 0 < gamma < eps/4");
    GeneratorParams out;
    out.eps = eps;
    out.gamma = gamma;
    out.q = rat_ceil(Rat(4) / gamma);
    out.mu = Rat(1) / Rat(out.q);
    out.p = rat_ceil(Rat(out.q) * eps / 2) + 1;
    // sanity against the defining double inequality and the range guard
    if (!(out.mu * Rat(out.p - 2) < eps / 2) || !(eps / 2 <= out.mu * Rat(out.p - 1)))
        throw Error("generator: internal parameter derivation failed");
    if (out.p > out.q) throw Error("generator: reach exceeds cell count");
    return out;
}

PLMap zigzag_map(long q, long p, const PieceBudget& guard) {
    if (q < 1 || p < 1 || p > q) throw ParamError("zigzag_map: need 1 <= p <= q");
    Int per_cell = zigzag_segments(p) + zigzag_segments(2 * p) + zigzag_segments(p + 1);
    Int required = Int(q) * per_cell;
    if (required > Int(guard.max_pieces))
        throw BudgetError("zigzag_map: piece budget exceeded", required.str(),
                          guard.max_pieces);
    if (2 * p > kMaxWalkSpan)
        throw BudgetError("zigzag_map: walk span too large to materialize", required.str(),
                          guard.max_pieces);

    auto rel = ascent_patterns(2 * p);
    // one cell's level walk relative to its base: up p, down to -p, up to 1
    std::vector<long> cell;
    cell.reserve(per_cell.convert_to<std::size_t>() + 1);
    for (long v : rel[p]) cell.push_back(v);
    for (std::size_t i = 1; i < rel[2 * p].size(); ++i) cell.push_back(p - rel[2 * p][i]);
    for (std::size_t i = 1; i < rel[p + 1].size(); ++i) cell.push_back(-p + rel[p + 1][i]);

    const long steps = static_cast<long>(cell.size()) - 1;
    std::vector<Rat> nodes, values;
    nodes.reserve(static_cast<std::size_t>(q) * steps + 1);
    values.reserve(nodes.capacity());
    for (long i = 0; i < q; ++i) {
        for (long j = (i == 0 ? 0 : 1); j <= steps; ++j) {
            nodes.emplace_back(Int(i) * steps + j, Int(q) * steps);
            values.emplace_back(Int(i) + cell[static_cast<std::size_t>(j)], Int(q));
        }
    }
    return PLMap(std::move(nodes), std::move(values));
}

std::pair<PLMap, GeneratorParams> build_generator(const Rat& eps, const Rat& gamma,
                                                  const PieceBudget& guard) {
    GeneratorParams params = derive_generator_params(eps, gamma);
    Int required = generator_pieces_required(params.q, params.p);
    if (required > Int(guard.max_pieces))
        throw BudgetError("build_generator: piece budget exceeded", required.str(),
                          guard.max_pieces);
    return {zigzag_map(params.q.convert_to<long>(), params.p.convert_to<long>(), guard),
            params};
}

FiberMap fold_lift(const ModelPtr& model, const PLMap& g0) {
    // split the template once; instantiate per fiber with routed targets
    struct Piece {
        Rat t0, t1, slope, icept;
        int zone;  // -1 below 0, 0 inside [0,1], +1 above 1
    };
    std::vector<Piece> tpl;
    const auto& n = g0.nodes();
    const auto& v = g0.values();
    for (std::size_t i = 0; i + 1 < n.size(); ++i) {
        Rat slope = (v[i + 1] - v[i]) / (n[i + 1] - n[i]);
        Rat icept = v[i] - slope * n[i];
        std::vector<Rat> cuts{n[i]};
        if (slope != 0) {
            for (const Rat& t : {Rat(0), Rat(1)}) {
                Rat c = (t - icept) / slope;
                if (c > n[i] && c < n[i + 1]) cuts.push_back(c);
            }
            std::sort(cuts.begin(), cuts.end());
        }
        cuts.push_back(n[i + 1]);
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
            Rat mid = slope * ((cuts[j] + cuts[j + 1]) / 2) + icept;
            int zone = mid > 1 ? 1 : (mid < 0 ? -1 : 0);
            tpl.push_back({cuts[j], cuts[j + 1], slope, icept, zone});
        }
    }
    std::map<std::string, std::vector<MapLap>> laps;
    for (const auto& z : model->fibers()) {
        std::vector<MapLap> ls;
        ls.reserve(tpl.size());
        for (const auto& p : tpl) {
            MapLap l;
            l.t0 = p.t0;
            l.t1 = p.t1;
            switch (p.zone) {
                case 0:
                    l.slope = p.slope;
                    l.intercept = p.icept;
                    l.target = z;
                    break;
                case 1:  // fold above 1 into the tau_plus partner
                    l.slope = -p.slope;
                    l.intercept = Rat(2) - p.icept;
                    l.target = model->tau_plus(z);
                    break;
                default:  // fold below 0 into the tau_minus partner
                    l.slope = -p.slope;
                    l.intercept = -p.icept;
                    l.target = model->tau_minus(z);
                    break;
            }
            ls.push_back(std::move(l));
        }
        laps[z] = std::move(ls);
    }
    return FiberMap(model, laps);
}

Arc core_subarc(const Arc& C, const Rat& eps, const Rat& gamma, const Rat& nu) {
    if (!(gamma > 0) || !(nu > 0) || !(eps > 0))
        throw ParamError("core_subarc: parameters must be positive");
    Rat len = C.beta_length();
    if (!(2 * gamma < len)) throw ParamError("core_subarc: need 2*gamma < len(C)");
    if (!(len < eps + 2 * nu)) throw ParamError("core_subarc: need len(C) < eps + 2*nu");
    if (len < eps) return C;
    Rat lo = len - eps;
    Rat hi = std::min(len - eps + gamma, 2 * nu);
    if (!(lo < hi)) throw ParamError("core_subarc: empty admissible interval");
    Rat kappa = (lo + hi) / 2;
    return core_split(C, kappa / 2).core;
}

Rat rat_pow(const Rat& base, unsigned exp) {
    Rat out(1), b = base;
    while (exp) {
        if (exp & 1) out *= b;
        b *= b;
        exp >>= 1;
    }
    return out;
}

Rat iterate_gap_bound(const Rat& s, const Rat& eta, unsigned j) {
    if (j == 0) throw ParamError("iterate_gap_bound: j must be positive");
    return rat_pow(s + 1, j - 1) * eta;
}

namespace {

// ten-power lower bound for the digit count of the required piece count
// when the exact Pell number is itself too large to evaluate
std::string required_lower_bound(const Int& q, const Int& p) {
    // G(d) > (1+sqrt(2))^(d-2) for d >= 2 and log10(1+sqrt(2)) > 0.38277
    Int d = 2 * p;
    Int digits = (d - 2) * 38277 / 100000;
    Int qdigits = static_cast<long>(q.str().size()) - 1;
    return ">=10^" + Int(digits + qdigits).str();
}

}  // namespace

CrookingStep crooking_step(const FiberMap& f, const Rat& sigma, const Rat& eta,
                           const Rat& delta, const Rat& mu, const CrookingBudgets& budgets) {
    if (!(sigma > 1)) throw ParamError("crooking_step: sigma must exceed 1");
    if (!(eta > 0) || !(delta > 0) || !(mu > 0))
        throw ParamError("crooking_step: eta, delta, mu must be positive");
    auto [min_slope_f, max_slope_f] = stretch_lipschitz(f);
    if (min_slope_f < sigma) throw ParamError("crooking_step: f does not stretch by sigma");
    Rat s = working_lipschitz(f);

    CrookingStep step;
    step.eps_recipe = eta / s;
    if (!(step.eps_recipe < 1))
        throw ParamError("crooking_step: eta/s must be below 1");
    // least n with sigma^n * eps > 2*mu
    {
        Rat power = sigma;
        long n = 1;
        while (!(power * step.eps_recipe > 2 * mu)) {
            power *= sigma;
            if (++n > 100000) throw Error("crooking_step: runaway exponent search");
        }
        step.n_recipe = n;
    }
    Rat spow_n = rat_pow(s, static_cast<unsigned>(step.n_recipe));
    step.gamma_bound = std::min(step.eps_recipe / 4, delta / (4 * spow_n));
    step.gamma_recipe = step.gamma_bound / 2;
    step.q_recipe = rat_ceil(Rat(4) / step.gamma_recipe);
    step.p_recipe = rat_ceil(Rat(step.q_recipe) * step.eps_recipe / 2) + 1;

    bool exact_count = step.p_recipe <= 20000;
    Int required;
    if (exact_count) {
        required = generator_pieces_required(step.q_recipe, step.p_recipe);
        step.required_pieces = required.str();
    } else {
        step.required_pieces = required_lower_bound(step.q_recipe, step.p_recipe);
    }

    PLMap g0 = PLMap::identity();
    if (exact_count && required <= Int(budgets.pieces.max_pieces)) {
        g0 = zigzag_map(step.q_recipe.convert_to<long>(), step.p_recipe.convert_to<long>(),
                        budgets.pieces);
        step.q_built = step.q_recipe.convert_to<long>();
        step.p_built = step.p_recipe.convert_to<long>();
    } else {
        // surrogate generator: smallest genuinely crooked reach, cell count
        // from the displacement bound max|g0(t)-t| <= (p+1)/q
        step.surrogate_build = true;
        const long p_s = 3;
        Int q_s = rat_floor(max_slope_f * Rat(p_s + 1) / eta) + 1;
        if (q_s < 2 * p_s) q_s = 2 * p_s;
        Int surrogate_required = q_s * generator_pieces_required(1, p_s);
        if (surrogate_required > Int(budgets.pieces.max_pieces))
            throw BudgetError("crooking_step: even the surrogate generator exceeds the "
                              "piece budget",
                              surrogate_required.str(), budgets.pieces.max_pieces);
        step.q_built = q_s.convert_to<long>();
        step.p_built = p_s;
        g0 = zigzag_map(step.q_built, step.p_built, budgets.pieces);
    }

    FiberMap g = fold_lift(f.model(), g0);
    step.F = fr_compose(f, g, budgets.pieces);

    auto& certs = step.certs;
    certs.min_slope = stretch_lipschitz(step.F).first;
    certs.stretches = certs.min_slope >= sigma;
    certs.distance = map_distance(f, step.F);
    certs.distance_ok = !certs.distance.infinite && certs.distance.value < eta;

    // largest feasible iterate under the piece budget
    FiberMap Fn = step.F;
    certs.n_star = 1;
    while (certs.n_star < static_cast<unsigned long>(step.n_recipe)) {
        try {
            Fn = fr_compose(step.F, Fn, budgets.pieces);
            ++certs.n_star;
        } catch (const BudgetError&) {
            break;
        }
    }

    // strongest feasible crookedness certificate on F^{n_star}
    bool found = false;
    for (int a = 0; a <= 6 && !found; ++a) {
        Rat mu_star = mu / rat_pow(Rat(2), static_cast<unsigned>(a));
        for (long div : {16L, 8L, 4L}) {
            Rat delta_star = mu_star / div;
            try {
                CrookednessVerdict v = check_crooked(Fn, mu_star, delta_star, budgets.check);
                if (v.crooked && !v.vacuous) {
                    certs.mu_star = mu_star;
                    certs.delta_star = delta_star;
                    certs.verdict = std::move(v);
                    found = true;
                    break;
                }
            } catch (const BudgetError&) {
                continue;
            }
        }
    }
    if (!found) {  // vacuous fallback, reported as such
        certs.mu_star = mu;
        certs.delta_star = mu / 2;
        certs.verdict = check_crooked(Fn, certs.mu_star, certs.delta_star, budgets.check);
    }
    step.surrogate = step.surrogate_build ||
                     certs.n_star < static_cast<unsigned long>(step.n_recipe) ||
                     certs.mu_star != mu || certs.delta_star != delta ||
                     certs.verdict.vacuous || certs.verdict.mesh_thinned;
    return step;
}

StagedRun staged_crooking(const FiberMap& f0, const Rat& sigma, const Rat& eps, int stages,
                          const CrookingBudgets& budgets) {
    if (stages < 1) throw ParamError("staged_crooking: stages must be positive");
    if (!(eps > 0)) throw ParamError("staged_crooking: eps must be positive");
    StagedRun run;
    FiberMap prev = f0;
    for (int i = 1; i <= stages; ++i) {
        StageReport rep;
        rep.stage = i;
        rep.delta_stage = rat_pow(Rat(1, 2), static_cast<unsigned>(i)) -
                          rat_pow(Rat(1, 2), static_cast<unsigned>(2 * i));
        rep.mu_stage = Rat(i);
        rep.condition_ii_bound = rat_pow(Rat(1, 2), static_cast<unsigned>(i)) * eps;

        Rat s_prev = working_lipschitz(prev);
        rep.eta_true = rep.condition_ii_bound;
        for (int k = 1; k < i; ++k) {
            unsigned nk = static_cast<unsigned>(run.stages[static_cast<std::size_t>(k - 1)]
                                                    .step.n_recipe);
            Rat bound = rat_pow(Rat(1, 2), static_cast<unsigned>(k + i + 1)) /
                        rat_pow(s_prev + 1, nk - 1);
            rep.eta_true = std::min(rep.eta_true, bound);
        }
        rep.eta_used = rep.eta_true;
        try {
            rep.step = crooking_step(prev, sigma, rep.eta_used, rep.delta_stage,
                                     rep.mu_stage, budgets);
        } catch (const BudgetError&) {
            rep.eta_relaxed = true;
            rep.eta_used = rep.condition_ii_bound;
            try {
                rep.step = crooking_step(prev, sigma, rep.eta_used, rep.delta_stage,
                                         rep.mu_stage, budgets);
            } catch (const BudgetError& e) {
                run.truncated = true;
                run.truncation_reason = "stage " + std::to_string(i) +
                                        ": piece budget exhausted (required " + e.required +
                                        ")";
                break;
            }
        }
        rep.condition_ii_ok = !rep.step.certs.distance.infinite &&
                              rep.step.certs.distance.value < rep.condition_ii_bound;
        prev = rep.step.F;
        run.stages.push_back(std::move(rep));
    }
    if (!run.stages.empty()) {
        run.total_drift = map_distance(f0, run.stages.back().step.F);
        run.drift_ok = !run.total_drift.infinite && run.total_drift.value < eps;
    }
    return run;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

nlohmann::ordered_json verdict_json(const CrookednessVerdict& v) {
    return nlohmann::ordered_json::parse(v.to_json());
}

nlohmann::ordered_json step_json(const CrookingStep& s, const std::string& map_file) {
    nlohmann::ordered_json j;
    j["recipe"]["epsilon"] = rat_str(s.eps_recipe);
    j["recipe"]["n"] = s.n_recipe;
    j["recipe"]["gamma_bound"] = rat_str(s.gamma_bound);
    j["recipe"]["gamma"] = rat_str(s.gamma_recipe);
    j["recipe"]["q"] = s.q_recipe.str();
    j["recipe"]["p"] = s.p_recipe.str();
    j["recipe"]["required_pieces"] = s.required_pieces;
    j["build"]["surrogate"] = s.surrogate_build;
    j["build"]["q"] = s.q_built;
    j["build"]["p"] = s.p_built;
    j["build"]["pieces"] = s.F.piece_count();
    if (!map_file.empty()) j["build"]["map_file"] = map_file;
    j["certificates"]["min_slope"] = rat_str(s.certs.min_slope);
    j["certificates"]["stretches"] = s.certs.stretches;
    j["certificates"]["distance"] =
        s.certs.distance.infinite ? "INFINITE" : rat_str(s.certs.distance.value);
    j["certificates"]["distance_ok"] = s.certs.distance_ok;
    j["certificates"]["n_star"] = s.certs.n_star;
    j["certificates"]["mu_star"] = rat_str(s.certs.mu_star);
    j["certificates"]["delta_star"] = rat_str(s.certs.delta_star);
    j["certificates"]["crookedness"] = verdict_json(s.certs.verdict);
    j["surrogate"] = s.surrogate;
    return j;
}

}  // namespace

std::string CrookingStep::to_json(const std::string& map_file) const {
    return step_json(*this, map_file).dump();
}

std::string StageReport::to_json() const {
    nlohmann::ordered_json j;
    j["stage"] = stage;
    j["eta_true"] = rat_str(eta_true);
    j["eta_used"] = rat_str(eta_used);
    j["eta_relaxed"] = eta_relaxed;
    j["delta"] = rat_str(delta_stage);
    j["mu"] = rat_str(mu_stage);
    j["condition_ii_bound"] = rat_str(condition_ii_bound);
    j["condition_ii_ok"] = condition_ii_ok;
    j["step"] = step_json(step, map_file);
    return j.dump();
}

std::string StagedRun::to_json() const {
    nlohmann::ordered_json j;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages)
        j["stages"].push_back(nlohmann::ordered_json::parse(s.to_json()));
    j["total_drift"] = total_drift.infinite ? "INFINITE" : rat_str(total_drift.value);
    j["drift_ok"] = drift_ok;
    j["truncated"] = truncated;
    if (truncated) j["truncation_reason"] = truncation_reason;
    return j.dump();
}

}  // namespace crookmap
