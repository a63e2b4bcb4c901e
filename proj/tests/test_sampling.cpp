#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kafal/sampling.hpp"

using namespace kafal;

namespace {

// Long-double symmetric KL of two softmax distributions; independent of the
// library's softmax/KL path.
double symmetric_softmax_kl_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto soft = [](const std::vector<double>& v) {
        std::vector<long double> e(v.size());
        long double s = 0.0L;
        for (std::size_t i = 0; i < v.size(); ++i) {
            e[i] = expl(static_cast<long double>(v[i]));
            s += e[i];
        }
        for (auto& x : e) x /= s;
        return e;
    };
    auto p = soft(a), q = soft(b);
    long double d = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i)
        d += p[i] * logl(p[i] / q[i]) + q[i] * logl(q[i] / p[i]);
    return static_cast<double>(d);
}

// Direct re-implementation of greedy k-center used to cross-check traces.
std::vector<std::int64_t> greedy_kcenter_oracle(const Matrix& feats,
                                                const std::vector<std::int64_t>& ids,
                                                const std::vector<char>& labelled, std::size_t b) {
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (labelled[i]) centers.push_back(i);
    std::vector<std::int64_t> picked;
    while (picked.size() < b) {
        double best_d = -1.0;
        std::size_t best = ids.size();
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (labelled[j]) continue;
            bool already = false;
            for (auto id : picked)
                if (id == ids[j]) already = true;
            if (already) continue;
            double dmin = std::numeric_limits<double>::infinity();
            for (std::size_t c : centers)
                dmin = std::min(dmin, squared_distance(feats.row(j), feats.row(c)));
            for (std::size_t k = 0; k < ids.size(); ++k) {
                bool is_picked = false;
                for (auto id : picked)
                    if (id == ids[k]) is_picked = true;
                if (is_picked)
                    dmin = std::min(dmin, squared_distance(feats.row(j), feats.row(k)));
            }
            if (dmin > best_d || (dmin == best_d && ids[j] < ids[best])) {
                best_d = dmin;
                best = j;
            }
        }
        picked.push_back(ids[best]);
    }
    return picked;
}

} // namespace

TEST_CASE("ks_prob reductions") {
    ClassHistogram counts(std::vector<long>{3, 1});
    SECTION("lambda zero is a plain softmax") {
        std::vector<double> logits{0.7, -1.2};
        auto p = ks_prob(logits, counts, 0.0);
        auto s = softmax(logits);
        REQUIRE(p[0] == Catch::Approx(s[0]).margin(1e-15));
        REQUIRE(p[1] == Catch::Approx(s[1]).margin(1e-15));
    }
    SECTION("uniform counts cancel for any lambda") {
        ClassHistogram uniform(std::vector<long>{4, 4});
        std::vector<double> logits{1.5, 0.3};
        auto p = ks_prob(logits, uniform, 2.7);
        auto s = softmax(logits);
        REQUIRE(p[0] == Catch::Approx(s[0]).margin(1e-12));
        REQUIRE(p[1] == Catch::Approx(s[1]).margin(1e-12));
    }
    SECTION("flat logits weight by counts: 3/(3+1)") {
        std::vector<double> logits{0.0, 0.0};
        auto p = ks_prob(logits, counts, 1.0);
        REQUIRE(p[0] == Catch::Approx(0.75).margin(1e-12));
        REQUIRE(p[1] == Catch::Approx(0.25).margin(1e-12));
    }
    SECTION("all-zero histogram falls back to uniform weights") {
        ClassHistogram zero(std::vector<long>{0, 0});
        std::vector<double> logits{0.4, -0.4};
        auto p = ks_prob(logits, zero, 3.0);
        auto s = softmax(logits);
        REQUIRE(p[0] == Catch::Approx(s[0]).margin(1e-12));
        REQUIRE(p[1] == Catch::Approx(s[1]).margin(1e-12));
    }
    SECTION("sums to one") {
        std::mt19937_64 eng(5);
        std::uniform_real_distribution<double> u(-8.0, 8.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> logits(5);
            for (double& v : logits) v = u(eng);
            ClassHistogram h(std::vector<long>(5));
            for (auto& c : h.counts) c = static_cast<long>(eng() % 10);
            auto p = ks_prob(logits, h, u(eng) + 8.0);
            double s = 0.0;
            for (double v : p) s += v;
            REQUIRE(std::abs(s - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("ksas_score identities") {
    ClassHistogram counts(std::vector<long>{5, 5});
    SECTION("identical logits give zero") {
        std::vector<double> l{0.9, -0.3};
        REQUIRE(ksas_score(l, l, counts, 1.0) == 0.0);
    }
    SECTION("uniform counts at lambda 1 match the symmetric softmax KL") {
        std::vector<double> a{1.0, 0.0};
        std::vector<double> b{0.0, 1.0};
        const double expect = symmetric_softmax_kl_oracle(a, b);
        REQUIRE(ksas_score(a, b, counts, 1.0) == Catch::Approx(expect).epsilon(1e-12));
        // Mirror-image logits make the two KL halves equal, so D = 2 * KL.
        auto p = softmax(std::span<const double>(a));
        auto q = softmax(std::span<const double>(b));
        REQUIRE(ksas_score(a, b, counts, 1.0) ==
                Catch::Approx(2.0 * kl_divergence(p, q)).epsilon(1e-12));
    }
    SECTION("lambda zero reduces to vanilla symmetric KL for any counts") {
        std::mt19937_64 eng(17);
        std::uniform_real_distribution<double> u(-4.0, 4.0);
        for (int trial = 0; trial < 300; ++trial) {
            std::vector<double> a(4), b(4);
            for (double& v : a) v = u(eng);
            for (double& v : b) v = u(eng);
            ClassHistogram h(std::vector<long>(4));
            for (auto& c : h.counts) c = static_cast<long>(eng() % 20);
            const double got = ksas_score(a, b, h, 0.0);
            auto p = softmax(std::span<const double>(a));
            auto q = softmax(std::span<const double>(b));
            REQUIRE(got == Catch::Approx(kl_divergence(p, q) + kl_divergence(q, p)).margin(1e-12));
        }
    }
    SECTION("symmetry and non-negativity over random draws") {
        std::mt19937_64 eng(23);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        std::uniform_real_distribution<double> ul(0.0, 3.0);
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<double> a(6), b(6);
            for (double& v : a) v = u(eng);
            for (double& v : b) v = u(eng);
            ClassHistogram h(std::vector<long>(6));
            for (auto& c : h.counts) c = static_cast<long>(eng() % 15);
            const double lambda = ul(eng);
            const double d1 = ksas_score(a, b, h, lambda);
            const double d2 = ksas_score(b, a, h, lambda);
            REQUIRE(d1 >= 0.0);
            REQUIRE(std::abs(d1 - d2) < 1e-12);
        }
    }
    SECTION("shift invariance of one model's logits") {
        std::vector<double> a{0.2, -1.0, 0.5};
        std::vector<double> b{1.1, 0.0, -0.7};
        ClassHistogram h(std::vector<long>{2, 7, 1});
        const double base = ksas_score(a, b, h, 1.3);
        std::vector<double> shifted = a;
        for (double& v : shifted) v += 42.0;
        REQUIRE(ksas_score(shifted, b, h, 1.3) == Catch::Approx(base).margin(1e-10));
    }
}

TEST_CASE("increasing lambda concentrates probability on the dominant-count class") {
    // With a unique max-count class, its count-amplified probability mass is
    // strictly increasing in lambda for any fixed logits: the log-odds
    // against every other class grow by ln(n_max / n_c) per unit of lambda.
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(5);
        for (double& v : a) v = u(eng);
        ClassHistogram h(std::vector<long>{1, 2, 3, 4, 20});
        const std::size_t star = 4;
        double prev = ks_prob(a, h, 0.0)[star];
        for (double lambda : {0.5, 1.0, 2.0}) {
            const double cur = ks_prob(a, h, lambda)[star];
            REQUIRE(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("reversed_ksas behaviour") {
    SECTION("uniform counts match plain ksas") {
        ClassHistogram h(std::vector<long>{6, 6, 6});
        std::vector<double> a{0.3, -0.2, 1.0};
        std::vector<double> b{-0.8, 0.1, 0.4};
        REQUIRE(reversed_ksas_score(a, b, h, 1.7) ==
                Catch::Approx(ksas_score(a, b, h, 1.7)).margin(1e-12));
    }
    SECTION("identical logits give zero regardless of counts") {
        ClassHistogram h(std::vector<long>{9, 0, 2});
        std::vector<double> a{0.5, 0.5, -0.1};
        REQUIRE(reversed_ksas_score(a, a, h, 2.0) == 0.0);
    }
    SECTION("weights are reciprocals: counts {4,1} at lambda 1") {
        // Flat logits: P proportional to {1/4, 1} -> {0.2, 0.8}.
        ClassHistogram h(std::vector<long>{4, 1});
        std::vector<double> flat{0.0, 0.0};
        auto p = detail::count_weighted_probs(flat, h, 1.0, -1.0);
        REQUIRE(p[0] == Catch::Approx(0.2).margin(1e-12));
        REQUIRE(p[1] == Catch::Approx(0.8).margin(1e-12));
    }
}

TEST_CASE("entropy_score values") {
    std::vector<double> onehot{1.0, 0.0};
    REQUIRE(entropy_score(onehot) == Catch::Approx(0.0).margin(1e-9));
    std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
    REQUIRE(entropy_score(uniform) == Catch::Approx(std::log(4.0)).margin(1e-12));
    // Frozen closed form: 1.5 * ln 2.
    std::vector<double> mixed{0.5, 0.25, 0.25};
    REQUIRE(entropy_score(mixed) == Catch::Approx(1.0397207708399179).epsilon(1e-12));
}

TEST_CASE("margin_score values") {
    std::vector<double> uniform{0.5, 0.5};
    REQUIRE(margin_score(uniform) == Catch::Approx(0.0).margin(1e-15));
    std::vector<double> onehot{0.0, 1.0, 0.0};
    REQUIRE(margin_score(onehot) == Catch::Approx(1.0).margin(1e-15));
    std::vector<double> mixed{0.6, 0.3, 0.1};
    REQUIRE(margin_score(mixed) == Catch::Approx(0.3).margin(1e-15));
    std::vector<double> single{1.0};
    REQUIRE_THROWS_AS(margin_score(single), std::invalid_argument);
}

TEST_CASE("select_top behaviour") {
    SECTION("whole pool when budget equals size") {
        std::vector<std::int64_t> ids{5, 6, 7};
        std::vector<double> scores{0.1, 0.9, 0.5};
        auto out = select_top(ids, scores, 3);
        REQUIRE(out == std::vector<std::int64_t>{6, 7, 5});
    }
    SECTION("ties break toward lower ids") {
        std::vector<std::int64_t> ids{10, 11, 12};
        std::vector<double> scores{3.0, 1.0, 3.0};
        auto out = select_top(ids, scores, 2);
        REQUIRE(out == std::vector<std::int64_t>{10, 12});
    }
    SECTION("matches a full-sort oracle") {
        std::mt19937_64 eng(41);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::int64_t> ids(20);
            std::vector<double> scores(20);
            for (int i = 0; i < 20; ++i) {
                ids[i] = 100 + i;
                scores[i] = u(eng);
            }
            auto got = select_top(ids, scores, 5);
            std::vector<std::pair<double, std::int64_t>> order;
            for (int i = 0; i < 20; ++i) order.push_back({-scores[i], ids[i]});
            std::sort(order.begin(), order.end());
            for (int i = 0; i < 5; ++i) REQUIRE(got[i] == order[i].second);
        }
    }
    SECTION("permutation of the input order does not matter") {
        std::vector<std::int64_t> ids{1, 2, 3, 4};
        std::vector<double> scores{0.4, 0.8, 0.8, 0.1};
        auto a = select_top(ids, scores, 2);
        std::vector<std::int64_t> ids2{4, 3, 2, 1};
        std::vector<double> scores2{0.1, 0.8, 0.8, 0.4};
        auto b = select_top(ids2, scores2, 2);
        REQUIRE(a == b);
    }
    SECTION("budget beyond pool is an input error") {
        REQUIRE_THROWS_AS(select_top({1}, {0.5}, 2), std::invalid_argument);
    }
    SECTION("smallest-first mode for margins") {
        std::vector<std::int64_t> ids{1, 2, 3};
        std::vector<double> scores{0.9, 0.1, 0.5};
        auto out = select_top(ids, scores, 2, true);
        REQUIRE(out == std::vector<std::int64_t>{2, 3});
    }
}

TEST_CASE("coreset_select basics") {
    SECTION("single pick takes the farthest point") {
        Matrix feats(4, 1);
        feats.data = {0.0, 1.0, 2.0, 3.0}; // labelled origin + three unlabelled
        std::vector<std::int64_t> ids{0, 1, 2, 3};
        std::vector<char> lab{1, 0, 0, 0};
        auto out = coreset_select(feats, ids, lab, 1);
        REQUIRE(out == std::vector<std::int64_t>{3});
    }
    SECTION("identical points fall back to id order") {
        Matrix feats(5, 2);
        for (double& v : feats.data) v = 1.0;
        std::vector<std::int64_t> ids{7, 8, 9, 10, 11};
        std::vector<char> lab{1, 0, 0, 0, 0};
        auto out = coreset_select(feats, ids, lab, 3);
        REQUIRE(out == std::vector<std::int64_t>{8, 9, 10});
    }
    SECTION("empty labelled set seeds from the farthest-from-mean point") {
        Matrix feats(3, 1);
        feats.data = {0.0, 1.0, 10.0};
        std::vector<std::int64_t> ids{0, 1, 2};
        std::vector<char> lab{0, 0, 0};
        auto out = coreset_select(feats, ids, lab, 2);
        REQUIRE(out[0] == 2); // mean ~3.67, farthest is 10
        REQUIRE(out[1] == 0);
    }
    SECTION("matches the brute-force greedy trace on small instances") {
        std::mt19937_64 eng(53);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t count = 8;
            Matrix feats(count, 3);
            for (double& v : feats.data) v = n(eng);
            std::vector<std::int64_t> ids(count);
            std::vector<char> lab(count, 0);
            for (std::size_t i = 0; i < count; ++i) {
                ids[i] = static_cast<std::int64_t>(i);
                lab[i] = (eng() % 3 == 0) ? 1 : 0;
            }
            lab[0] = 1; // keep at least one labelled point
            std::size_t unl = 0;
            for (char c : lab)
                if (!c) ++unl;
            if (unl < 2) continue;
            auto got = coreset_select(feats, ids, lab, 2);
            auto expect = greedy_kcenter_oracle(feats, ids, lab, 2);
            REQUIRE(got == expect);
        }
    }
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::ksas, Strategy::vanilla_kl, Strategy::reversed_ksas,
                       Strategy::entropy, Strategy::margin, Strategy::coreset, Strategy::random})
        REQUIRE(parse_strategy(to_string(s)) == s);
    REQUIRE_THROWS_AS(parse_strategy("bogus"), config_error);
}
