#include <catch2/catch_amalgamated.hpp>

#include "dynlab/transversality.hpp"

#include <cmath>

using namespace dynlab;

namespace {

Itinerary word_of(std::initializer_list<int> syms) {
    Itinerary w;
    w.orientation = Orientation::backward;
    w.symbols.assign(syms);
    return w;
}

Itinerary const_word(int sym, int len) {
    Itinerary w;
    w.orientation = Orientation::backward;
    w.symbols.assign(len, sym);
    return w;
}

} // namespace

TEST_CASE("unstable curves are leaf graphs with constant z") {
    MapParams p = ex1_defaults();
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        Itinerary w = const_word(1, 40);
        for (auto& s : w.symbols) s = 1 + static_cast<int>(rng.below(3));
        UnstableCurve c = make_unstable_curve(w, p, 40, 0.1, 0.9, 101);
        for (const auto& s : c.samples) CHECK(s.z == c.z_level);
        // chord slopes stay inside the unstable cone of the slope field
        for (std::size_t k = 1; k < c.samples.size(); ++k) {
            const double chord = (c.samples[k].y - c.samples[k - 1].y) /
                                 (c.samples[k].x - c.samples[k - 1].x);
            const double xm = 0.5 * (c.samples[k].x + c.samples[k - 1].x);
            const double slope = alpha_uu_series_at(xm, w, p, 40).value;
            REQUIRE(std::fabs(std::atan(chord) - std::atan(slope)) < 1e-3);
        }
    }
}

TEST_CASE("unstable curve length cap trims the footprint") {
    MapParams p = ex1_defaults();
    UnstableCurve c = make_unstable_curve(const_word(2, 30), p, 30, 0.0, 1.0, 101, 0.25);
    CHECK(c.length <= 0.25 * (1.0 + 1e-9));
}

TEST_CASE("stable distance of a curve to itself is zero") {
    MapParams p = ex1_defaults();
    UnstableCurve c = make_unstable_curve(const_word(2, 30), p, 30, 0.2, 0.8);
    CHECK(stable_distance(c, c, p) == 0.0);
}

TEST_CASE("stable distance between overlapping leaves is the z-gap") {
    MapParams p = ex1_defaults();
    UnstableCurve c1 = make_unstable_curve(word_of({1, 2, 2, 2, 2, 2, 2, 2, 2, 2}), p, 10, 0.2, 0.8);
    UnstableCurve c2 = make_unstable_curve(word_of({3, 2, 2, 2, 2, 2, 2, 2, 2, 2}), p, 10, 0.2, 0.8);
    const double expect = std::fabs(c1.z_level - c2.z_level);
    // these leaves sit ~0.4 apart in y, so give the center-unstable plane a
    // radius wide enough to reach across
    CHECK(stable_distance(c1, c2, p, /*R0=*/1.0) == Catch::Approx(expect));
    CHECK(expect == Catch::Approx(4.0 / 3.0).epsilon(1e-9)); // d_1 vs d_3 dominate
}

TEST_CASE("stable distance is infinite for disjoint footprints") {
    MapParams p = ex1_defaults();
    UnstableCurve c1 = make_unstable_curve(const_word(1, 20), p, 20, 0.05, 0.15);
    UnstableCurve c2 = make_unstable_curve(const_word(3, 20), p, 20, 0.75, 0.85);
    CHECK(std::isinf(stable_distance(c1, c2, p, 0.1)));
}

TEST_CASE("one forward step contracts stable distance by lambda_ss") {
    MapParams p = ex1_defaults();
    // two leaves over the same cell-2 footprint; push both forward one step
    Itinerary w1 = word_of({2, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
    Itinerary w2 = word_of({2, 3, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
    const double d0 = std::fabs(z_of_word(w1, p, 20) - z_of_word(w2, p, 20));
    // the image leaves have their common cell prepended to the word
    Itinerary s1 = w1, s2 = w2;
    s1.symbols.insert(s1.symbols.begin(), 2);
    s2.symbols.insert(s2.symbols.begin(), 2);
    const double d1 = std::fabs(z_of_word(s1, p, 21) - z_of_word(s2, p, 21));
    CHECK(d1 == Catch::Approx(p.lambda_ss * d0).epsilon(1e-12));
}

TEST_CASE("vertical projection: identity, isometry, idempotence") {
    Point pt{0.3, -0.2, 0.7};
    Point same = project_stable(pt, pt.z);
    CHECK(same.x == pt.x);
    CHECK(same.y == pt.y);
    CHECK(same.z == pt.z);

    Point a{0.1, 0.5, 0.9}, b{0.4, -0.3, -0.2};
    Point pa = project_stable(a, 0.0), pb = project_stable(b, 0.0);
    CHECK(std::hypot(pa.x - pb.x, pa.y - pb.y) ==
          Catch::Approx(std::hypot(a.x - b.x, a.y - b.y)));

    Point twice = project_stable(project_stable(a, 0.2), 0.2);
    CHECK(twice.x == a.x);
    CHECK(twice.y == a.y);
    CHECK(twice.z == 0.2);
}

TEST_CASE("exhaustive cylinder audit clears the closed-form floor") {
    MapParams p = ex1_defaults();
    const double eps = p.lambda_ss * p.lambda_ss;
    auto res = transversality_audit_exhaustive(p, eps, 6);
    CHECK(res.cylinders == 729);
    CHECK(res.pairs_compared > 100000);
    CHECK(res.min_gap >= res.floor_C);
    CHECK(res.pass);
}

TEST_CASE("per-pair slope gap tracks its first-disagreement term") {
    MapParams p = ex1_defaults();
    const int depth = 6;
    auto cyl = cylinder_field(p, depth);
    const double rho = p.rho();
    const double sup = p.slope_sup_bound();
    const double trunc = 2.0 * sup * std::pow(rho, depth);
    long checked = 0;
    for (std::size_t i = 0; i < cyl.size(); ++i) {
        for (std::size_t j = i + 1; j < cyl.size(); ++j) {
            int j0 = -1;
            for (int k = 0; k < depth; ++k)
                if (cyl[i].word.symbols[k] != cyl[j].word.symbols[k]) {
                    j0 = k;
                    break;
                }
            if (j0 < 0) continue;
            const double lead =
                std::fabs(p.slopes[cyl[i].word.symbols[j0] - 1] -
                          p.slopes[cyl[j].word.symbols[j0] - 1]) /
                p.lambda_uu() * std::pow(rho, j0);
            const double tail = 2.0 * sup * std::pow(rho, j0 + 1) / (1.0 - rho);
            const double gap = std::fabs(cyl[i].value - cyl[j].value);
            ++checked;
            REQUIRE(gap >= lead - tail - trunc - 1e-14);
        }
    }
    REQUIRE(checked == 729L * 728L / 2L);
}

TEST_CASE("sampled transversality audit passes for both examples") {
    MapParams p1 = ex1_defaults();
    const double eps_list[] = {0.1, 0.05};
    auto rep = transversality_audit(p1, eps_list, 400, 30, /*seed=*/17);
    REQUIRE(rep.audits.size() == 2);
    for (const auto& a : rep.audits) {
        CHECK(a.pairs_found > 0);
        CHECK(a.slope_gap_min >= a.closed_form_floor);
    }
    CHECK(rep.pass);

    // example 2 uses the K floor for chart-close pairs and K2 separation
    MapParams p2 = ex2_defaults();
    const double eps2[] = {0.25};
    auto rep2 = transversality_audit(p2, eps2, 300, 30, /*seed=*/23);
    CHECK(rep2.audits[0].pairs_found > 0);
    CHECK(rep2.audits[0].closed_form_floor ==
          Catch::Approx(example2_constants(p2).K).epsilon(1e-12));
}

TEST_CASE("sampled transversality audit is deterministic and needs enough depth") {
    MapParams p = ex1_defaults();
    const double eps_list[] = {0.05};
    auto a = transversality_audit(p, eps_list, 200, 25, 99);
    auto b = transversality_audit(p, eps_list, 200, 25, 99);
    CHECK(a.audits[0].slope_gap_min == b.audits[0].slope_gap_min);
    CHECK(a.audits[0].theta_hat == b.audits[0].theta_hat);
    CHECK(a.audits[0].pairs_found == b.audits[0].pairs_found);

    CHECK_THROWS_AS(transversality_audit(p, eps_list, 10, 4, 1), InsufficientDepth);
}

TEST_CASE("empirical min angle shrinks with epsilon") {
    MapParams p = ex1_defaults();
    const double eps_list[] = {0.1, 0.01, 0.001};
    auto rep = transversality_audit(p, eps_list, 500, 30, 7);
    REQUIRE(rep.audits.size() == 3);
    CHECK(rep.audits[0].theta_hat >= rep.audits[1].theta_hat);
    CHECK(rep.audits[1].theta_hat >= rep.audits[2].theta_hat);
}

TEST_CASE("cone width requirement vanishes at mu = 0 and shrinks with n") {
    MapParams p = ex1_defaults();
    FieldGrid grid;
    grid.n_words = 60;
    grid.seed = 9;
    auto zero = cone_family_margin(p, 0.0, 4, grid, 1e-12);
    CHECK(zero.omega_required < 1e-10);

    double prev = 1e9;
    for (int n : {2, 4, 6, 8}) {
        auto cm = cone_family_margin(p, 1.0, n, grid, 1e-11);
        CHECK(cm.omega_required < prev);
        prev = cm.omega_required;
    }
}

TEST_CASE("cone margin is positive at the deformed baseline n = 8") {
    MapParams p = ex1_defaults();
    FieldGrid grid;
    grid.n_words = 120;
    grid.seed = 9;
    auto cm = cone_family_margin(p, 1.0, 8, grid, 1e-11);
    CHECK(cm.omega_required < 1.5e-4);
    CHECK(cm.margin > 0.0);

    auto def = transversality_audit_deformed(p, 1.0, 8, grid);
    CHECK(def.pairs_found > 1000);
    CHECK(def.theta_hat >= def.floor_half_theta);
    CHECK(def.pass);
}
