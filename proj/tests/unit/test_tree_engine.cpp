#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"
#include "spinuniq/model.hpp"
#include "spinuniq/tree_engine.hpp"
#include "test_support.hpp"

using namespace spinuniq;
namespace ts = testsupport;

namespace {

const double kThreshold90 = 3 * std::log(90.0) + 91 * std::log(4.0);

}  // namespace

TEST_CASE("child_factor cases") {
    auto rng = ts::rng_for(1);
    ModelParams free5 = make_params(5, 1.0, Beta::finite(0.0));
    for (int j = 1; j <= 6; ++j) {
        CHECK(std::abs(child_factor(j, ts::random_message(5, rng), free5)) < 1e-15);
    }
    ModelParams p = make_params(5, 1.0, Beta::finite(std::numbers::ln2));
    CHECK(child_factor(4, LogSimplex::point_mass(5, 4), p) == doctest::Approx(-std::numbers::ln2));
    CHECK(child_factor(6, LogSimplex::point_mass(5, 5), p) == 0.0);
    // ln(1 - (1 - e^-beta) x) directly
    for (int t = 0; t < 100; ++t) {
        LogSimplex m = ts::random_message(5, rng);
        double beta = ts::uniform(rng, 0.0, 6.0);
        ModelParams pb = make_params(5, 0.0, Beta::finite(beta));
        double x1 = m.prob(1) + m.prob(6);
        double x3 = m.prob(3);
        double x6 = m.prob(1) + m.prob(2);
        CHECK(child_factor(1, m, pb) == doctest::Approx(std::log(1 - (1 - std::exp(-beta)) * x1)).epsilon(1e-10));
        CHECK(child_factor(3, m, pb) == doctest::Approx(std::log(1 - (1 - std::exp(-beta)) * x3)).epsilon(1e-10));
        CHECK(child_factor(6, m, pb) == doctest::Approx(std::log(1 - (1 - std::exp(-beta)) * x6)).epsilon(1e-10));
    }
}

TEST_CASE("tree_step at beta = 0 decouples the children") {
    auto rng = ts::rng_for(2);
    ModelParams p = make_params(3, 1.0, Beta::finite(0.0));
    auto out = tree_step(ts::random_family(3, rng), p);
    const double e = std::exp(1.0);
    for (int j = 1; j <= 3; ++j) {
        CHECK(out.prob(j) == doctest::Approx(1 / (3 + e)).epsilon(1e-14));
    }
    CHECK(out.prob(4) == doctest::Approx(e / (3 + e)).epsilon(1e-14));
    CHECK(tree_step_bruteforce(ts::random_family(3, rng), p).prob(4) == doctest::Approx(e / (3 + e)));
}

TEST_CASE("tree_step hard mode with every child in state 3") {
    ModelParams p = make_params(5, 0.0, Beta::hard());
    std::vector<LogSimplex> msgs(5, LogSimplex::point_mass(5, 3));
    auto out = tree_step(msgs, p);
    CHECK(out.prob(3) == 0.0);
    // Root states 1, 2, 4, 5, 6 all avoid conflict with a child in state 3.
    for (int j : {1, 2, 4, 5, 6}) {
        CHECK(out.prob(j) == doctest::Approx(0.2).epsilon(1e-14));
    }
    CHECK(ts::max_log_dev(out, tree_step_bruteforce(msgs, p)) < 1e-12);
}

TEST_CASE("tree_step matches brute force") {
    auto rng = ts::rng_for(3);
    for (int q : {3, 4, 5}) {
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            auto msgs = ts::random_family(q, rng);
            ModelParams p = make_params(q, ts::uniform(rng, -2, 4), Beta::finite(ts::uniform(rng, 0, 8)));
            auto a = tree_step(msgs, p);
            auto b = tree_step_bruteforce(msgs, p);
            CHECK(a.is_valid());
            worst = std::max(worst, ts::max_log_dev(a, b));
        }
        CHECK(worst < 1e-10);
    }
    std::vector<LogSimplex> uni(3, LogSimplex::uniform(3));
    ModelParams p = make_params(3, 0.4, Beta::finite(1.3));
    CHECK(ts::max_log_dev(tree_step(uni, p), tree_step_bruteforce(uni, p)) < 1e-12);
    ModelParams hard = make_params(4, 0.4, Beta::hard());
    for (int t = 0; t < 50; ++t) {
        auto msgs = ts::random_family(4, rng, 0.0);
        CHECK(ts::max_log_dev(tree_step(msgs, hard), tree_step_bruteforce(msgs, hard)) < 1e-10);
    }
}

TEST_CASE("tree_step errors and scale") {
    ModelParams p = make_params(4, 0.0, Beta::finite(1.0));
    std::vector<LogSimplex> three(3, LogSimplex::uniform(4));
    CHECK_THROWS_AS(tree_step(three, p), ParameterError);
    ModelParams p7 = make_params(7, 0.0, Beta::finite(1.0));
    std::vector<LogSimplex> seven(7, LogSimplex::uniform(7));
    CHECK_THROWS_AS(tree_step_bruteforce(seven, p7), RefusalError);

    auto rng = ts::rng_for(4);
    ModelParams big = make_params(90, kThreshold90 + 0.1, Beta::finite(2.0));
    auto out = tree_step(ts::random_family(90, rng), big);
    CHECK(out.is_valid());
    for (double x : out.log_probs()) {
        CHECK(!std::isnan(x));
    }
}

TEST_CASE("tree_step equivariance under the state symmetry group") {
    auto rng = ts::rng_for(5);
    for (int t = 0; t < 200; ++t) {
        int q = ts::uniform_int(rng, 3, 7);
        auto perm = ts::random_symmetry(q, rng);
        auto msgs = ts::random_family(q, rng);
        std::vector<LogSimplex> moved;
        for (const auto& m : msgs) {
            moved.push_back(ts::permute(m, perm));
        }
        ModelParams p = make_params(q, ts::uniform(rng, -1, 3), Beta::finite(ts::uniform(rng, 0, 5)));
        CHECK(ts::max_log_dev(ts::permute(tree_step(msgs, p), perm), tree_step(moved, p)) < 1e-12);
    }
}

TEST_CASE("unnormalized weights obey the product bounds") {
    auto rng = ts::rng_for(6);
    for (int q = 3; q <= 6; ++q) {
        for (int t = 0; t < 200; ++t) {
            auto msgs = ts::random_family(q, rng);
            ModelParams p = make_params(q, 1.0, Beta::finite(ts::uniform(rng, 0, 10)));
            auto w = tree_log_weights(msgs, p);
            for (int j = 1; j <= q; ++j) {
                CHECK(w[j - 1] <= 1e-12);
            }
            for (int j = 3; j <= q; ++j) {
                double prod = 1.0;
                for (const auto& m : msgs) {
                    prod *= 1 - m.prob(j);
                }
                CHECK(std::exp(w[j - 1]) >= prod - 1e-12);
            }
        }
    }
}

TEST_CASE("lemma1_bound") {
    const double expect = 1 / (1 + 88 * std::pow(90.0 / 91.0, 90));
    std::vector<LogSimplex> uni(90, LogSimplex::uniform(90));
    CHECK(lemma1_bound(uni, 1) == doctest::Approx(expect).epsilon(1e-12));
    std::vector<LogSimplex> three(3, LogSimplex::point_mass(3, 3));
    CHECK(lemma1_bound(three, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(lemma1_bound(three, 4), ParameterError);

    auto rng = ts::rng_for(7);
    for (int q : {3, 4}) {
        for (int t = 0; t < 1000; ++t) {
            auto msgs = ts::random_family(q, rng);
            ModelParams p = make_params(q, ts::uniform(rng, -1, 4), Beta::finite(ts::uniform(rng, 0, 10)));
            auto out = tree_step(msgs, p);
            for (int k = 1; k <= q; ++k) {
                REQUIRE(out.prob(k) <= lemma1_bound(msgs, k) + 1e-12);
            }
        }
    }
}

TEST_CASE("lemma2_check") {
    std::vector<LogSimplex> uni(90, LogSimplex::uniform(90));
    auto r = lemma2_check(uni, 1, 0.5);
    // j ranges over {3..90}: 88 terms, each (1 - 1/91)^90.
    CHECK(r.lhs == doctest::Approx(88 * std::pow(90.0 / 91.0, 90)).epsilon(1e-12));
    CHECK(r.lhs == doctest::Approx(32.4).epsilon(0.01));
    CHECK(r.bound == doctest::Approx(3.0));
    CHECK(r.holds);

    // Extremal family at q = 24, p = 1/2: every message splits 1/2, 1/2 over two Potts states.
    {
        const int q = 24;
        std::vector<LogSimplex> fam;
        for (int l = 0; l < q; ++l) {
            std::vector<double> w(q + 1, 0.0);
            w[(2 * l) % q] = 0.5;
            w[(2 * l + 1) % q] = 0.5;
            fam.push_back(LogSimplex::from_probabilities(w));
        }
        auto e = lemma2_check(fam, 1, 0.5);
        CHECK(e.bound == doctest::Approx(0.25));
        CHECK(e.lhs >= 0.25);
        CHECK(e.holds);
    }

    auto rng = ts::rng_for(8);
    {
        std::vector<LogSimplex> fam;
        for (int l = 0; l < 12; ++l) {
            fam.push_back(ts::random_capped(12, 0.7, rng));
        }
        auto n = lemma2_check(fam, 2, 0.7);
        CHECK(n.bound < 0.0);
        CHECK(n.holds);
    }
    std::vector<LogSimplex> pm(5, LogSimplex::point_mass(5, 3));
    CHECK_THROWS_AS(lemma2_check(pm, 1, 0.6), PreconditionError);
    CHECK_THROWS_AS(lemma2_check(uni, 1, 0.4), PreconditionError);
    CHECK_THROWS_AS(lemma2_check(uni, 1, 1.0), PreconditionError);

    for (int q : {24, 90}) {
        for (int t = 0; t < 300; ++t) {
            double p = ts::uniform(rng, 0.5, 0.999);
            std::vector<LogSimplex> fam;
            for (int l = 0; l < q; ++l) {
                fam.push_back(ts::random_capped(q, p, rng));
            }
            REQUIRE(lemma2_check(fam, ts::uniform_int(rng, 1, q), p).holds);
        }
    }
}

TEST_CASE("lemma2_extremal_min") {
    for (double p : {0.5, 0.7, 0.95}) {
        CHECK(lemma2_extremal_min(3, 1, p) == doctest::Approx(std::pow(1 - p, 3)).epsilon(1e-12));
    }
    CHECK(lemma2_extremal_min(7, 1, 0.9) <= lemma2_extremal_min(7, 1, 0.5));
    CHECK_THROWS_AS(lemma2_extremal_min(8, 1, 0.6), RefusalError);
    CHECK_THROWS_AS(lemma2_extremal_min(5, 1, 0.3), PreconditionError);

    // Exhaustive over families at q = 4 by direct enumeration.
    {
        const int q = 4;
        const double p = 0.62;
        double best = INFINITY;
        int assign[4][2];
        for (int code = 0; code < 65536; ++code) {
            int c = code;
            bool ok = true;
            for (int l = 0; l < q; ++l) {
                assign[l][0] = c % 4 + 1;
                c /= 4;
                assign[l][1] = c % 4 + 1;
                c /= 4;
                ok = ok && assign[l][0] != assign[l][1];
            }
            if (!ok) {
                continue;
            }
            double s = 0.0;
            for (int j = 3; j <= q; ++j) {
                double prod = 1.0;
                for (int l = 0; l < q; ++l) {
                    double m = assign[l][0] == j ? p : (assign[l][1] == j ? 1 - p : 0.0);
                    prod *= 1 - m;
                }
                s += prod;
            }
            best = std::min(best, s);
        }
        CHECK(lemma2_extremal_min(4, 2, p) == doctest::Approx(best).epsilon(1e-12));
    }

    auto rng = ts::rng_for(9);
    const double floor7 = lemma2_extremal_min(7, 1, 0.6);
    CHECK(floor7 >= 0.0);
    for (int t = 0; t < 300; ++t) {
        std::vector<LogSimplex> fam;
        for (int l = 0; l < 7; ++l) {
            fam.push_back(ts::random_capped(7, 0.6, rng));
        }
        REQUIRE(lemma2_check(fam, 1, 0.6).lhs >= floor7 - 1e-12);
    }
}

TEST_CASE("f_tree values and fixed points") {
    CHECK(f_tree(1.0, 90) == 1.0);
    const double r = 1 / std::sqrt(12.0);
    CHECK(std::abs(f_tree(r, 90) - r) < 1e-12);
    CHECK(f_tree(0.5, 90) == doctest::Approx(0.25).epsilon(1e-15));
    const double h = 1e-7;
    CHECK((f_tree(1 + h, 90) - f_tree(1 - h, 90)) / (2 * h) == doctest::Approx(12.0).epsilon(1e-5));
    CHECK_THROWS_AS(f_tree(0.5, 18), PreconditionError);
}

TEST_CASE("worst_case_trace") {
    ModelParams p = make_params(90, kThreshold90 + 0.1, Beta::finite(2.0));
    auto tr = worst_case_trace(p, 1000000);
    REQUIRE(tr.burnin_N.has_value());
    CHECK(tr.p1.log_delta() == doctest::Approx(-softplus(p.lambda - 2.0 * 90) + (p.lambda - 180.0)));
    std::int64_t n_quarter = *tr.burnin_N - 1;
    for (std::int64_t n = 1; n < n_quarter; ++n) {
        CHECK(tr.trace[n].log_delta() > tr.trace[n - 1].log_delta());
    }
    CHECK(tr.trace[n_quarter - 1].p() <= 0.25);
    CHECK(tr.trace[n_quarter - 2].p() > 0.25);
    CHECK(tr.orbit_limit == doctest::Approx(1 / std::sqrt(12.0)).epsilon(1e-9));

    ModelParams big = make_params(90, kThreshold90 + 0.1, Beta::finite(1e5));
    auto tb = worst_case_trace(big, 10000000);
    REQUIRE(tb.burnin_N.has_value());
    CHECK(tb.p1.log_delta() == doctest::Approx(big.lambda - 9e6).epsilon(1e-12));
    CHECK(tb.near_one_levels > 1000000);
    CHECK(std::abs(static_cast<double>(*tb.escape_level) - tb.closed_form_levels) <= 2.0);
    CHECK(std::abs(tb.orbit_limit - 1 / std::sqrt(12.0)) < 1e-9);

    auto cut = worst_case_trace(big, 100);
    CHECK_FALSE(cut.burnin_N.has_value());
    CHECK(cut.trace.size() == 100);

    CHECK_THROWS_AS(worst_case_trace(make_params(10, 1000.0, Beta::finite(2.0)), 100), PremiseError);
    CHECK_THROWS_AS(worst_case_trace(make_params(90, kThreshold90, Beta::hard()), 100), ParameterError);
}

TEST_CASE("contraction constant") {
    auto c = contraction_constant(make_params(90, kThreshold90 + 0.1, Beta::finite(2.0)));
    CHECK(c.c < std::exp(-0.1));
    CHECK(c.log_loose == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(c.c < c.loose);
    // 2 q^2 e^-lambda (2^q + 4^q (1 + q e^-lambda)) with e^-lambda factored as e^-(lambda - q ln 4)
    const double lam = kThreshold90 + 0.1;
    const double direct = 2 * 8100.0 * std::exp(-(lam - 90 * std::log(4.0))) *
                          (std::pow(0.5, 90) + 1 + 90 * std::exp(-lam));
    CHECK(c.c == doctest::Approx(direct).epsilon(1e-12));
    auto c5 = contraction_constant(make_params(90, kThreshold90 + 5, Beta::finite(2.0)));
    CHECK(c5.c < c.c);
    CHECK_THROWS_AS(contraction_constant(make_params(90, kThreshold90 - 1, Beta::finite(2.0))), PremiseError);
}

TEST_CASE("measure_contraction") {
    auto rng = ts::rng_for(10);
    ModelParams p = make_params(90, kThreshold90 + 0.1, Beta::finite(2.0));
    std::vector<LogSimplex> fam;
    for (int l = 0; l < 90; ++l) {
        fam.push_back(ts::random_special_heavy(90, rng));
    }
    CHECK(measure_contraction(fam, fam, p) == 0.0);
    const double c = contraction_constant(p).c;
    for (int t = 0; t < 50; ++t) {
        std::vector<LogSimplex> a, b;
        for (int l = 0; l < 90; ++l) {
            a.push_back(ts::random_special_heavy(90, rng));
            b.push_back(ts::random_special_heavy(90, rng));
        }
        CHECK(measure_contraction(a, b, p) <= c);
    }
    std::vector<LogSimplex> bad(3, LogSimplex::uniform(3));
    ModelParams small = make_params(3, 0.0, Beta::finite(5.0));
    CHECK_THROWS_AS(measure_contraction(bad, bad, small), PreconditionError);

    // Without the premises the ratio is only measured. Children split 1/2 on
    // state 4 and 1/2 on state 3 (P) or state 1 (Q): the root of P is near
    // uniform on {1,2,3}, the root of Q is pushed onto state 3.
    std::vector<LogSimplex> ep, eq;
    for (int l = 0; l < 3; ++l) {
        ep.push_back(LogSimplex::from_probabilities(std::vector<double>{0.0, 0.0, 0.5, 0.5}));
        eq.push_back(LogSimplex::from_probabilities(std::vector<double>{0.5, 0.0, 0.0, 0.5}));
    }
    ModelParams loose = make_params(3, -20.0, Beta::finite(30.0));
    CHECK(measure_contraction(ep, eq, loose) > 1.0);
    CHECK(measure_contraction(ep, eq, loose) == doctest::Approx(10.0 / 9.0).epsilon(1e-6));
}

TEST_CASE("tree uniqueness certificate") {
    for (double beta : {0.5, 2.0, 10.0}) {
        auto cert = certify_tree_uniqueness(make_params(90, kThreshold90 + 0.1, Beta::finite(beta)), 1e-6, 1000000);
        CHECK(cert.tv_bound < 1e-6);
        CHECK(cert.depth_n > cert.burnin_N);
        CHECK(cert.contraction.c < 1.0);
        CHECK(cert.log_special_mass_bound >= std::log(0.5));
        CHECK(cert.tv_bound == doctest::Approx(2 * std::pow(cert.contraction.c, cert.depth_n - cert.burnin_N)));
        // smallest such depth
        CHECK(2 * std::pow(cert.contraction.c, cert.depth_n - cert.burnin_N - 1) >= 1e-6);
    }
    CHECK_THROWS_AS(certify_tree_uniqueness(make_params(10, 1000, Beta::finite(2.0)), 1e-6, 1000), PremiseError);
    CHECK_THROWS_AS(certify_tree_uniqueness(make_params(90, kThreshold90 + 0.1, Beta::finite(2.0)), 0.0, 1000),
                    ParameterError);
}

TEST_CASE("one-level domination by f_tree at large q") {
    auto rng = ts::rng_for(12);
    for (int q : {24, 90}) {
        for (int t = 0; t < 100; ++t) {
            auto msgs = ts::random_family(q, rng);
            double prev = 0.0;
            for (const auto& m : msgs) {
                for (int j = 1; j <= q; ++j) {
                    prev = std::max(prev, m.prob(j));
                }
            }
            if (prev >= 1.0) {
                continue;
            }
            ModelParams p = make_params(q, ts::uniform(rng, 0, 5), Beta::finite(ts::uniform(rng, 0.1, 20)));
            auto out = tree_step(msgs, p);
            double bound = f_tree(std::max(prev, 0.5), q);
            for (int k = 1; k <= q; ++k) {
                REQUIRE(out.prob(k) <= bound + 1e-12);
            }
        }
    }
}
