// crookmap: construction and verification commands for exact
// piecewise-linear crooked-map machinery on fibered interval models.
//
// Exit codes: 0 verified/constructed, 1 violation found (witness emitted),
// 2 input error, 3 resource guard tripped (inconclusive).

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crookmap/crooked.hpp"
#include "crookmap/crooking.hpp"
#include "crookmap/errors.hpp"
#include "crookmap/knaster.hpp"
#include "crookmap/plmap.hpp"
#include "crookmap/props.hpp"
#include "json.hpp"

using namespace crookmap;

namespace {

struct ManifestLog {
    std::string command;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::vector<std::string> inputs, outputs;
    std::uint64_t seed = 0;
    nlohmann::ordered_json budgets = nlohmann::ordered_json::object();
    std::string outcome = "error";
    std::string path;  // empty: no manifest requested

    void write() const {
        if (path.empty()) return;
        nlohmann::ordered_json j;
        j["command"] = command;
        j["parameters"] = parameters;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["seed"] = seed;
        j["budgets"] = budgets;
        j["outcome"] = outcome;
        std::ofstream out(path);
        out << j.dump() << "\n";
    }
};

Rat parse_rat_arg(const std::string& s, const std::string& what) {
    auto r = parse_rat(s);
    if (!r) throw ParseError("malformed rational for " + what + ": '" + s + "'");
    return *r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text << "\n";
}

std::uint64_t env_override(const char* name, std::uint64_t fallback) {
    if (const char* v = std::getenv(name)) {
        try {
            return std::stoull(v);
        } catch (...) {
            throw ParseError(std::string("bad value in ") + name);
        }
    }
    return fallback;
}

// A map file holds either a PLMap (nodes/values; wrapped onto the interval
// model) or a fiber-routed map (model/pieces).
FiberMap load_map(const std::string& path) {
    std::string text = slurp(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError("bad JSON in '" + path + "': " + e.what());
    }
    if (j.contains("nodes") && j.contains("values"))
        return FiberMap::from_interval_map(PLMap::from_json(text));
    if (j.contains("model") && j.contains("pieces"))
        return FiberMap::from_json(text, resolve_model_ref);
    throw ParseError("'" + path + "' is neither an interval map nor a fiber map");
}

int run(int argc, char** argv) {
    CLI::App app{"exact crooked-map construction and verification toolkit"};
    app.require_subcommand(1);

    std::uint64_t piece_budget = env_override("CROOKMAP_PIECE_BUDGET", kDefaultPieceBudget);
    std::uint64_t cand_budget = env_override("CROOKMAP_CANDIDATE_BUDGET", 250'000);
    std::string manifest_path;
    app.add_option("--piece-budget", piece_budget, "piece budget for constructions");
    app.add_option("--candidate-budget", cand_budget, "candidate budget for the checker");
    app.add_option("--manifest", manifest_path, "write a run manifest to this file");

    ManifestLog manifest;

    // ---- gen-g0 ----
    auto* gen = app.add_subcommand("gen-g0", "build a crooked generator and its lift");
    std::string gen_eps, gen_gamma, gen_out;
    long gen_q = 0, gen_p = 0;
    gen->add_option("--epsilon", gen_eps, "target epsilon (rational)");
    gen->add_option("--gamma", gen_gamma, "target gamma (rational)");
    gen->add_option("--q", gen_q, "explicit cell count (surrogate build)");
    gen->add_option("--p", gen_p, "explicit reach (surrogate build)");
    gen->add_option("--out", gen_out, "output file")->required();

    // ---- check-crooked ----
    auto* chk = app.add_subcommand("check-crooked", "decide (eps,delta)-crookedness");
    std::string chk_map, chk_eps, chk_delta, chk_out;
    chk->add_option("--map", chk_map, "map file")->required();
    chk->add_option("--epsilon", chk_eps, "epsilon (rational)")->required();
    chk->add_option("--delta", chk_delta, "delta (rational)")->required();
    chk->add_option("--out", chk_out, "verdict file (default: stdout)");

    // ---- lemma212 ----
    auto* lem = app.add_subcommand("lemma212", "one crooking step F = f o g");
    std::string lem_map, lem_sigma, lem_eta, lem_delta, lem_mu, lem_out, lem_map_out;
    lem->add_option("--map", lem_map, "map file for f")->required();
    lem->add_option("--sigma", lem_sigma, "stretch factor")->required();
    lem->add_option("--eta", lem_eta, "distance bound")->required();
    lem->add_option("--delta", lem_delta, "crookedness delta")->required();
    lem->add_option("--mu", lem_mu, "crookedness mu")->required();
    lem->add_option("--out", lem_out, "report file (default: stdout)");
    lem->add_option("--map-out", lem_map_out, "write F to this file");

    // ---- thm213 ----
    auto* thm = app.add_subcommand("thm213", "staged crooking driver");
    std::string thm_map, thm_eps, thm_report, thm_prefix;
    int thm_stages = 1;
    std::string thm_sigma = "2";
    thm->add_option("--map", thm_map, "map file for f0")->required();
    thm->add_option("--epsilon", thm_eps, "total drift bound")->required();
    thm->add_option("--stages", thm_stages, "number of stages")->required();
    thm->add_option("--sigma", thm_sigma, "stretch factor (default 2)");
    thm->add_option("--report", thm_report, "report file")->required();
    thm->add_option("--map-out-prefix", thm_prefix, "write stage maps to PREFIX<i>.json");

    // ---- sn-model ----
    auto* snc = app.add_subcommand("sn-model", "build a finite-depth solenoid model");
    unsigned sn_n = 2, sn_depth = 1;
    std::string sn_out;
    bool sn_check = false;
    snc->add_option("--n", sn_n, "tent degree")->required();
    snc->add_option("--depth", sn_depth, "model depth")->required();
    snc->add_option("--out", sn_out, "model file")->required();
    snc->add_flag("--check", sn_check, "include the structure report");

    // ---- plot ----
    auto* plo = app.add_subcommand("plot", "emit CSV samples of a map");
    std::string plot_map, plot_out;
    unsigned plot_res = 0;
    int plot_digits = 12;
    plo->add_option("--map", plot_map, "map file")->required();
    plo->add_option("--out", plot_out, "CSV file")->required();
    plo->add_option("--resolution", plot_res, "grid points per unit (default: breakpoints only)");
    plo->add_option("--digits", plot_digits, "decimal digits (lossy rendering)");

    // ---- verify-props ----
    auto* ver = app.add_subcommand("verify-props", "run a seeded property family");
    std::string ver_family, ver_out;
    unsigned ver_instances = 100;
    std::uint64_t ver_seed = 1;
    ver->add_option("--family", ver_family, "property family")->required();
    ver->add_option("--instances", ver_instances, "instance count");
    ver->add_option("--seed", ver_seed, "random seed");
    ver->add_option("--out", ver_out, "result file (default: stdout)");

    // ---- roundtrip ----
    auto* rtr = app.add_subcommand("roundtrip", "parse and re-emit canonically");
    std::string rt_in, rt_out;
    rtr->add_option("--in", rt_in, "input file")->required();
    rtr->add_option("--out", rt_out, "output file")->required();

    CLI11_PARSE(app, argc, argv);

    PieceBudget pieces{piece_budget};
    CheckBudget check;
    check.max_candidates = cand_budget;
    CrookingBudgets budgets{pieces, check};
    manifest.path = manifest_path;
    manifest.budgets["pieces"] = piece_budget;
    manifest.budgets["candidates"] = cand_budget;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    try {
        if (*gen) {
            manifest.command = "gen-g0";
            manifest.outputs.push_back(gen_out);
            PLMap g0 = PLMap::identity();
            nlohmann::ordered_json meta;
            if (!gen_eps.empty()) {
                Rat eps = parse_rat_arg(gen_eps, "--epsilon");
                Rat gamma = parse_rat_arg(gen_gamma, "--gamma");
                manifest.parameters["epsilon"] = gen_eps;
                manifest.parameters["gamma"] = gen_gamma;
                auto params = derive_generator_params(eps, gamma);
                meta["epsilon"] = rat_str(params.eps);
                meta["gamma"] = rat_str(params.gamma);
                meta["q"] = params.q.str();
                meta["mu"] = rat_str(params.mu);
                meta["p"] = params.p.str();
                meta["required_pieces"] =
                    generator_pieces_required(params.q, params.p).str();
                try {
                    g0 = build_generator(eps, gamma, pieces).first;
                } catch (const BudgetError& e) {
                    // metadata is still emitted so the guard is diagnosable
                    nlohmann::ordered_json j;
                    j["generator"] = meta;
                    j["error"] = e.what();
                    j["required_pieces"] = e.required;
                    j["piece_budget"] = e.limit;
                    spit(gen_out, j.dump());
                    manifest.outcome = "inconclusive";
                    manifest.write();
                    std::cerr << "gen-g0: " << e.what() << " (required " << e.required
                              << ", budget " << e.limit << ")\n";
                    return 3;
                }
            } else {
                if (gen_q <= 0 || gen_p <= 0)
                    throw ParseError("gen-g0 needs --epsilon/--gamma or --q/--p");
                manifest.parameters["q"] = gen_q;
                manifest.parameters["p"] = gen_p;
                g0 = zigzag_map(gen_q, gen_p, pieces);
                meta["q"] = gen_q;
                meta["p"] = gen_p;
                meta["surrogate"] = true;
            }
            FiberMap lift = fold_lift(Model::interval(), g0);
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(lift.to_json());
            meta["pieces"] = g0.piece_count();
            j["generator"] = meta;
            spit(gen_out, j.dump());
            manifest.outcome = "verified";
            manifest.write();
            std::cerr << "gen-g0: wrote " << gen_out << " in " << elapsed_ms() << " ms\n";
            return 0;
        }

        if (*chk) {
            manifest.command = "check-crooked";
            manifest.inputs.push_back(chk_map);
            manifest.parameters["epsilon"] = chk_eps;
            manifest.parameters["delta"] = chk_delta;
            FiberMap f = load_map(chk_map);
            CrookednessVerdict v = check_crooked(f, parse_rat_arg(chk_eps, "--epsilon"),
                                                 parse_rat_arg(chk_delta, "--delta"), check);
            std::string out = v.to_json();
            if (chk_out.empty())
                std::cout << out << "\n";
            else {
                spit(chk_out, out);
                manifest.outputs.push_back(chk_out);
            }
            manifest.outcome = v.crooked ? "verified" : "violated";
            manifest.write();
            std::cerr << "check-crooked: " << (v.crooked ? "crooked" : "violated") << " ("
                      << v.candidates_checked << " candidates, " << elapsed_ms() << " ms)\n";
            return v.crooked ? 0 : 1;
        }

        if (*lem) {
            manifest.command = "lemma212";
            manifest.inputs.push_back(lem_map);
            for (auto&& [k, s] : std::initializer_list<std::pair<const char*, std::string>>{
                     {"sigma", lem_sigma}, {"eta", lem_eta}, {"delta", lem_delta},
                     {"mu", lem_mu}})
                manifest.parameters[k] = s;
            FiberMap f = load_map(lem_map);
            CrookingStep step = crooking_step(
                f, parse_rat_arg(lem_sigma, "--sigma"), parse_rat_arg(lem_eta, "--eta"),
                parse_rat_arg(lem_delta, "--delta"), parse_rat_arg(lem_mu, "--mu"), budgets);
            if (!lem_map_out.empty()) {
                spit(lem_map_out, step.F.to_json());
                manifest.outputs.push_back(lem_map_out);
            }
            std::string rep = step.to_json(lem_map_out);
            if (lem_out.empty())
                std::cout << rep << "\n";
            else {
                spit(lem_out, rep);
                manifest.outputs.push_back(lem_out);
            }
            bool ok = step.certs.stretches && step.certs.distance_ok &&
                      step.certs.verdict.crooked;
            manifest.outcome = ok ? "verified" : "violated";
            manifest.write();
            std::cerr << "lemma212: done in " << elapsed_ms() << " ms\n";
            return ok ? 0 : 1;
        }

        if (*thm) {
            manifest.command = "thm213";
            manifest.inputs.push_back(thm_map);
            manifest.parameters["epsilon"] = thm_eps;
            manifest.parameters["stages"] = thm_stages;
            manifest.parameters["sigma"] = thm_sigma;
            FiberMap f0 = load_map(thm_map);
            StagedRun runr = staged_crooking(f0, parse_rat_arg(thm_sigma, "--sigma"),
                                             parse_rat_arg(thm_eps, "--epsilon"),
                                             thm_stages, budgets);
            if (!thm_prefix.empty()) {
                for (auto& st : runr.stages) {
                    std::string path = thm_prefix + std::to_string(st.stage) + ".json";
                    spit(path, st.step.F.to_json());
                    st.map_file = path;
                    manifest.outputs.push_back(path);
                }
            }
            spit(thm_report, runr.to_json());
            manifest.outputs.push_back(thm_report);
            bool ok = !runr.truncated && runr.drift_ok;
            for (const auto& st : runr.stages)
                ok = ok && st.condition_ii_ok && st.step.certs.stretches &&
                     st.step.certs.verdict.crooked;
            manifest.outcome = runr.truncated ? "inconclusive" : (ok ? "verified" : "violated");
            manifest.write();
            std::cerr << "thm213: " << runr.stages.size() << " stages in " << elapsed_ms()
                      << " ms\n";
            if (runr.truncated) return 3;
            return ok ? 0 : 1;
        }

        if (*snc) {
            manifest.command = "sn-model";
            manifest.parameters["n"] = sn_n;
            manifest.parameters["depth"] = sn_depth;
            manifest.outputs.push_back(sn_out);
            SnModel m = build_sn(sn_n, sn_depth, pieces);
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(m.model->to_json());
            auto sp = special_points(m);
            j["special_points"]["e"] = {{"fiber", sp.e.fiber}, {"beta", rat_str(sp.e.beta)}};
            j["special_points"]["d"] = {{"fiber", sp.d.fiber}, {"beta", rat_str(sp.d.beta)}};
            j["special_points"]["j_length"] = rat_str(sp.j.beta_length());
            if (sn_check)
                j["structure"] =
                    nlohmann::ordered_json::parse(check_model_properties(m).to_json());
            spit(sn_out, j.dump());
            manifest.outcome = "verified";
            manifest.write();
            std::cerr << "sn-model: " << m.model->fiber_count() << " fibers in "
                      << elapsed_ms() << " ms\n";
            return 0;
        }

        if (*plo) {
            manifest.command = "plot";
            manifest.inputs.push_back(plot_map);
            manifest.outputs.push_back(plot_out);
            manifest.parameters["resolution"] = plot_res;
            manifest.parameters["digits"] = plot_digits;
            FiberMap f = load_map(plot_map);
            if (f.model()->component_count() != 1)
                throw ParamError("plot: single-component models only");
            std::ostringstream csv;
            csv << "# decimal rendering with " << plot_digits
                << " digits (lossy); x is the chain coordinate\n";
            csv << "x,y,breakpoint\n";
            std::vector<std::pair<Rat, bool>> samples;
            for (const auto& p : f.chain_pieces(0)) samples.emplace_back(p.c0, true);
            samples.emplace_back(f.chain_pieces(0).back().c1, true);
            if (plot_res > 0) {
                Rat L = f.model()->chain_length(0);
                long n = (rat_floor(L * Rat(static_cast<long>(plot_res)))).convert_to<long>();
                for (long i = 0; i <= n; ++i)
                    samples.emplace_back(Rat(i, static_cast<long>(plot_res)), false);
            }
            std::sort(samples.begin(), samples.end());
            // a grid point landing on a breakpoint keeps the breakpoint flag
            std::vector<std::pair<Rat, bool>> uniq;
            for (const auto& s : samples) {
                if (!uniq.empty() && uniq.back().first == s.first) {
                    uniq.back().second = uniq.back().second || s.second;
                } else {
                    uniq.push_back(s);
                }
            }
            for (const auto& [x, is_bp] : uniq) {
                Rat y = f.eval_chain(0, x).second;
                csv << rat_decimal(x, plot_digits) << "," << rat_decimal(y, plot_digits)
                    << "," << (is_bp ? 1 : 0) << "\n";
            }
            spit(plot_out, csv.str());
            manifest.outcome = "verified";
            manifest.write();
            std::cerr << "plot: " << uniq.size() << " rows in " << elapsed_ms() << " ms\n";
            return 0;
        }

        if (*ver) {
            manifest.command = "verify-props";
            manifest.parameters["family"] = ver_family;
            manifest.parameters["instances"] = ver_instances;
            manifest.seed = ver_seed;
            PropertyResult res = run_property(ver_family, ver_instances, ver_seed, budgets);
            std::string out = res.to_json();
            if (ver_out.empty())
                std::cout << out << "\n";
            else {
                spit(ver_out, out);
                manifest.outputs.push_back(ver_out);
            }
            manifest.outcome = res.ok() ? "verified" : "violated";
            manifest.write();
            std::cerr << "verify-props: " << ver_family << " " << res.instances
                      << " instances, " << res.violations << " violations, " << elapsed_ms()
                      << " ms\n";
            return res.ok() ? 0 : 1;
        }

        if (*rtr) {
            manifest.command = "roundtrip";
            manifest.inputs.push_back(rt_in);
            manifest.outputs.push_back(rt_out);
            std::string text = slurp(rt_in);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(text);
            } catch (const std::exception& e) {
                throw ParseError(std::string("roundtrip: bad JSON: ") + e.what());
            }
            std::string out;
            if (j.contains("nodes"))
                out = PLMap::from_json(text).to_json();
            else if (j.contains("pieces"))
                out = FiberMap::from_json(text, resolve_model_ref).to_json();
            else if (j.contains("fibers"))
                out = Model::from_json(text)->to_json();
            else
                throw ParseError("roundtrip: unrecognized object");
            spit(rt_out, out);
            manifest.outcome = "verified";
            manifest.write();
            return 0;
        }
    } catch (const BudgetError& e) {
        manifest.outcome = "inconclusive";
        manifest.write();
        std::cerr << app.get_subcommands().front()->get_name() << ": " << e.what();
        if (!e.required.empty()) std::cerr << " (required " << e.required << ")";
        std::cerr << "\n";
        return 3;
    } catch (const Error& e) {
        manifest.outcome = "error";
        manifest.write();
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        manifest.outcome = "error";
        manifest.write();
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
