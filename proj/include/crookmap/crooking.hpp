#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crookmap/budget.hpp"
#include "crookmap/crooked.hpp"
#include "crookmap/fibmap.hpp"

namespace crookmap {

// The crooked level walk from a to b: shared-endpoint concatenation of
// walk(a,b-1), walk(b-1,a+1), walk(a+1,b) for spans above 2, the straight
// monotone run for spans up to 2, mirrored for descents. Consecutive
// entries differ by exactly 1. Lengths grow like Pell numbers
// (~2.414^span), which is what makes full-recipe generators astronomically
// large.
std::vector<long> zigzag(long a, long b);

// Segment count of the crooked walk over the given span (Pell recurrence).
Int zigzag_segments(long span);

// Pre-merge piece count of the generator with q cells and reach p:
// q * (segments(p) + segments(2p) + segments(p+1)).
Int generator_pieces_required(const Int& q, const Int& p);

struct GeneratorParams {
    Rat eps, gamma;
    Int q;   // least integer with q*gamma >= 4
    Rat mu;  // 1/q
    Int p;   // unique integer with mu*(p-2) < eps/2 <= mu*(p-1)
};

// Validates 0 < eps < 1 and 0 < gamma < eps/4 and derives the canonical
// cell parameters.
GeneratorParams derive_generator_params(const Rat& eps, const Rat& gamma);

// The crooked generator body at explicit cell parameters (q cells, reach
// p <= q): on each cell [i/q,(i+1)/q] the map walks crookedly from level i
// up to i+p, down to i-p, and up to i+1, with equal step widths inside the
// cell. Values live in [-1,2] and every cell boundary is fixed
// (g(i/q) = i/q).
PLMap zigzag_map(long q, long p, const PieceBudget& guard = {});

// Faithful generator at (eps, gamma): derives the canonical parameters and
// builds the zigzag map. For every admissible (eps, gamma) the reach p is
// at least 10, so the required piece count is at least ~2.7e8; the guard
// reports the exact requirement.
std::pair<PLMap, GeneratorParams> build_generator(const Rat& eps, const Rat& gamma,
                                                  const PieceBudget& guard = {});

// Lift of a [-1,2]-valued map onto a fibered model: values above 1 fold
// into the tau_plus partner fiber, values below 0 into the tau_minus
// partner. On the interval model this is the fold back into [0,1].
FiberMap fold_lift(const ModelPtr& model, const PLMap& g0);

// Core subarc G of C with 2*gamma < len(G) < eps and C inside the
// nu-neighborhood of G. Returns C itself when len(C) < eps, else trims by
// kappa/2 with kappa the midpoint of the admissible interval
// (len-eps, min(len-eps+gamma, 2*nu)).
Arc core_subarc(const Arc& C, const Rat& eps, const Rat& gamma, const Rat& nu);

// (s+1)^(j-1) * eta: exact bound on the iterate distance d(f^j, F^j) given
// d(f, F) < eta and Lipschitz constant s.
Rat iterate_gap_bound(const Rat& s, const Rat& eta, unsigned j);

Rat rat_pow(const Rat& base, unsigned exp);

struct CrookingBudgets {
    PieceBudget pieces;
    CheckBudget check;
};

// One crooking step: F = f o g with g a generator, F stretching like f,
// d(f,F) < eta, and an iterate of F crooked. The recipe parameters are
// always computed and reported exactly; when the recipe generator exceeds
// the piece budget the build falls back to a flagged surrogate generator
// (reach 3, cell count from the displacement bound) and the crookedness
// certificate is measured at the strongest feasible (mu*, delta*).
struct CrookingCertificates {
    Rat min_slope;           // exact min |slope| of F
    bool stretches = false;  // min_slope >= sigma
    LambdaDistance distance;  // d(f, F) exact
    bool distance_ok = false;
    unsigned n_star = 0;  // iterate actually checked
    Rat mu_star, delta_star;
    CrookednessVerdict verdict;  // of F^{n_star} at (mu_star, delta_star)
};

struct CrookingStep {
    // recipe, exact
    Rat eps_recipe;
    long n_recipe = 0;
    Rat gamma_bound, gamma_recipe;
    Int q_recipe, p_recipe;
    std::string required_pieces;  // exact count or a 10^k lower bound
    // build
    bool surrogate_build = false;
    long q_built = 0, p_built = 0;
    FiberMap F;
    CrookingCertificates certs;
    bool surrogate = false;  // any certificate used reduced parameters

    std::string to_json(const std::string& map_file = "") const;
};

CrookingStep crooking_step(const FiberMap& f, const Rat& sigma, const Rat& eta,
                           const Rat& delta, const Rat& mu, const CrookingBudgets& budgets = {});

// Staged convergence driver: stage i uses delta = 2^-i - 2^-2i, mu = i and
// eta = min(2^-i * eps, the iterate-gap bound preserving earlier
// certificates). When that eta is infeasible under the budgets the stage
// retries with eta = 2^-i * eps, flagged. Budget exhaustion truncates the
// run with an explicit record.
struct StageReport {
    int stage = 0;
    Rat eta_true, eta_used;
    bool eta_relaxed = false;
    Rat delta_stage, mu_stage;
    Rat condition_ii_bound;  // 2^-i * eps
    bool condition_ii_ok = false;
    CrookingStep step;
    std::string map_file;  // set by callers that persist the map

    std::string to_json() const;
};

struct StagedRun {
    std::vector<StageReport> stages;
    LambdaDistance total_drift;  // d(f0, f_last) exact
    bool drift_ok = false;       // total_drift < eps
    bool truncated = false;
    std::string truncation_reason;

    std::string to_json() const;
};

StagedRun staged_crooking(const FiberMap& f0, const Rat& sigma, const Rat& eps, int stages,
                          const CrookingBudgets& budgets = {});

}  // namespace crookmap
