#include <random>

#include "crookmap/errors.hpp"
#include "crookmap/plmap.hpp"
#include "doctest.h"

using namespace crookmap;

namespace {

Rat random_unit_rat(std::mt19937_64& rng) {
    std::uint64_t d = 1 + rng() % 997;
    std::uint64_t n = rng() % (d + 1);
    return Rat(static_cast<long>(n), static_cast<long>(d));
}

}  // namespace

TEST_CASE("tent maps have the expected canonical form") {
    PLMap t2 = tent(2);
    CHECK(t2.nodes() == std::vector<Rat>{Rat(0), Rat(1, 2), Rat(1)});
    CHECK(t2.values() == std::vector<Rat>{Rat(0), Rat(1), Rat(0)});

    PLMap t3 = tent(3);
    CHECK(t3.nodes() == std::vector<Rat>{Rat(0), Rat(1, 3), Rat(2, 3), Rat(1)});
    CHECK(t3.values() == std::vector<Rat>{Rat(0), Rat(1), Rat(0), Rat(1)});

    CHECK(tent(1) == PLMap::identity());
    CHECK_THROWS_AS(tent(0), DomainError);
}

TEST_CASE("pl_eval is exact") {
    CHECK(pl_eval(tent(2), Rat(1, 4)) == Rat(1, 2));
    CHECK(pl_eval(tent(3), Rat(1, 2)) == Rat(1, 2));
    CHECK(pl_eval(PLMap::identity(), Rat(7, 13)) == Rat(7, 13));
    CHECK_THROWS_AS(pl_eval(tent(2), Rat(3, 2)), DomainError);
    CHECK_THROWS_AS(pl_eval(tent(2), Rat(-1, 2)), DomainError);
}

TEST_CASE("composition agrees pointwise on the union mesh and random points") {
    std::mt19937_64 rng(20240817);
    const PLMap f = tent(3);
    const PLMap g = tent(2);
    PLMap h = pl_compose(f, g);
    std::vector<Rat> probes = h.nodes();
    for (const Rat& x : f.nodes()) probes.push_back(x);
    for (const Rat& x : g.nodes()) probes.push_back(x);
    for (int i = 0; i < 100; ++i) probes.push_back(random_unit_rat(rng));
    for (const Rat& x : probes) CHECK(pl_eval(h, x) == pl_eval(f, pl_eval(g, x)));
}

TEST_CASE("tent family composes multiplicatively") {
    for (unsigned a = 1; a <= 4; ++a)
        for (unsigned b = 1; b <= 4; ++b)
            CHECK(pl_compose(tent(a), tent(b)) == tent(a * b));
}

TEST_CASE("compose with identity and lap/slope audit") {
    PLMap f = tent(3);
    CHECK(pl_compose(f, PLMap::identity()) == f);
    CHECK(pl_compose(PLMap::identity(), f) == f);

    PLMap h = pl_compose(tent(2), tent(3));
    CHECK(h.piece_count() == 6);
    auto [mn, mx] = slope_bounds(h);
    CHECK(mn == Rat(6));
    CHECK(mx == Rat(6));
}

TEST_CASE("iteration") {
    CHECK(pl_iterate(tent(2), 2) == tent(4));
    CHECK(pl_iterate(tent(2), 3) == tent(8));
    PLMap f = tent(3);
    CHECK(pl_iterate(f, 1) == f);
    CHECK_THROWS_AS(pl_iterate(f, 0), ParamError);
}

TEST_CASE("slope bounds") {
    for (unsigned k = 1; k <= 8; ++k) {
        auto [mn, mx] = slope_bounds(tent(k));
        CHECK(mn == Rat(static_cast<long>(k)));
        CHECK(mx == Rat(static_cast<long>(k)));
    }
    auto [mn, mx] = slope_bounds(PLMap::identity());
    CHECK(mn == Rat(1));
    CHECK(mx == Rat(1));
}

TEST_CASE("preimage components") {
    auto c1 = preimage_components(tent(2), Rat(1, 2), Rat(1));
    REQUIRE(c1.size() == 1);
    CHECK(c1[0] == std::pair<Rat, Rat>(Rat(1, 4), Rat(3, 4)));

    auto c2 = preimage_components(tent(4), Rat(1, 2), Rat(1));
    REQUIRE(c2.size() == 2);
    CHECK(c2[0] == std::pair<Rat, Rat>(Rat(1, 8), Rat(3, 8)));
    CHECK(c2[1] == std::pair<Rat, Rat>(Rat(5, 8), Rat(7, 8)));

    auto c3 = preimage_components(PLMap::identity(), Rat(1, 5), Rat(4, 5));
    REQUIRE(c3.size() == 1);
    CHECK(c3[0] == std::pair<Rat, Rat>(Rat(1, 5), Rat(4, 5)));

    CHECK_THROWS_AS(preimage_components(tent(2), Rat(1, 2), Rat(1, 2)), DomainError);
}

TEST_CASE("preimage components are disjoint and map onto the target (tents)") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        unsigned k = 1 + rng() % 6;
        Rat a = random_unit_rat(rng), b = random_unit_rat(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        PLMap f = tent(k);
        auto comps = preimage_components(f, a, b);
        CHECK(!comps.empty());
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (i > 0) CHECK(comps[i - 1].second < comps[i].first);
            // exact image audit over the component
            Rat lo = pl_eval(f, comps[i].first), hi = lo;
            for (const Rat& nx : f.nodes()) {
                if (nx <= comps[i].first || nx >= comps[i].second) continue;
                Rat v = pl_eval(f, nx);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            Rat ve = pl_eval(f, comps[i].second);
            lo = std::min(lo, ve);
            hi = std::max(hi, ve);
            CHECK(lo == a);
            CHECK(hi == b);
        }
    }
}

TEST_CASE("canonical form is idempotent and merges collinear nodes") {
    PLMap spurious({Rat(0), Rat(1, 4), Rat(1, 2), Rat(1)}, {Rat(0), Rat(1, 4), Rat(1, 2), Rat(1)});
    CHECK(spurious == PLMap::identity());
    PLMap f = pl_compose(tent(2), tent(3));
    CHECK(PLMap(f.nodes(), f.values()) == f);
}

TEST_CASE("piece budget is a deterministic guard") {
    PieceBudget tiny{100};
    CHECK_THROWS_AS(pl_compose(tent(50), tent(50), tiny), BudgetError);
    try {
        pl_compose(tent(50), tent(50), tiny);
    } catch (const BudgetError& e) {
        CHECK(e.limit == 100);
        CHECK(!e.required.empty());
    }
}

TEST_CASE("serialization round trip is bit-exact") {
    PLMap f = pl_compose(tent(2), tent(3));
    std::string j = f.to_json();
    PLMap back = PLMap::from_json(j);
    CHECK(back == f);
    CHECK(back.to_json() == j);

    CHECK(tent(2).to_json() ==
          R"({"nodes":["0","1/2","1"],"values":["0","1","0"]})");
    CHECK_THROWS_AS(PLMap::from_json("{"), ParseError);
    CHECK_THROWS_AS(PLMap::from_json(R"({"nodes":["0","1"],"values":["0","3"]})"), ParseError);
}

TEST_CASE("value range validation") {
    CHECK_THROWS_AS(PLMap({Rat(0), Rat(1)}, {Rat(0), Rat(5, 2)}), ParamError);
    CHECK_THROWS_AS(PLMap({Rat(0), Rat(1, 2)}, {Rat(0), Rat(1)}), ParamError);
    // generator range [-1,2] is legal
    PLMap wide({Rat(0), Rat(1, 2), Rat(1)}, {Rat(-1), Rat(2), Rat(1)});
    CHECK(wide.min_value() == Rat(-1));
    CHECK(wide.max_value() == Rat(2));
    CHECK_THROWS_AS(pl_compose(tent(2), wide), DomainError);
}
