#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fledge/aggregation.hpp"
#include "fledge/errors.hpp"
#include "fledge/rng.hpp"

using namespace fledge;

TEST_SUITE_BEGIN("aggregation");

namespace {

ClientUpdate update(int id, std::vector<float> w, double wer, long n = 25) {
    ClientUpdate u;
    u.client_id = id;
    u.weights.values = std::move(w);
    u.wer = wer;
    u.n_samples = n;
    return u;
}

} // namespace

TEST_CASE("softmax coefficients: constants, hand oracle, singleton, empty") {
    auto equal = softmax_coefficients({0.4, 0.4, 0.4});
    for (double a : equal) CHECK(a == doctest::Approx(1.0 / 3.0));

    // exp(0.8) / (exp(0.8) + exp(0.2)) computed by hand
    auto pair = softmax_coefficients({0.2, 0.8});
    CHECK(pair[0] == doctest::Approx(0.6456563).epsilon(1e-6));
    CHECK(pair[1] == doctest::Approx(0.3543437).epsilon(1e-6));

    CHECK(softmax_coefficients({0.9})[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(softmax_coefficients({}), std::invalid_argument);
}

TEST_CASE("softmax coefficients: sum to one and clamp oversized error rates") {
    rng::Engine eng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t k = 1 + eng.uniform_index(8);
        std::vector<double> wers(k);
        for (auto& w : wers) w = eng.uniform(0.0, 1.0);
        auto alphas = softmax_coefficients(wers);
        double sum = 0.0;
        for (double a : alphas) {
            CHECK(a > 0.0);
            sum += a;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    // a wer above 1 behaves like wer == 1 (real error metrics can exceed 1)
    CHECK(softmax_coefficients({1.7, 0.5})[0] ==
          doctest::Approx(softmax_coefficients({1.0, 0.5})[0]));
}

TEST_CASE("wer aggregate: fixed point, mean, hand oracle") {
    std::vector<ClientUpdate> same = {update(0, {1.5f, -2.0f}, 0.3), update(1, {1.5f, -2.0f}, 0.9)};
    CHECK(wer_weighted_aggregate(same).values == std::vector<float>{1.5f, -2.0f});

    std::vector<ClientUpdate> mean = {update(0, {0.0f, 0.0f}, 0.5), update(1, {2.0f, 4.0f}, 0.5)};
    CHECK(wer_weighted_aggregate(mean).values == std::vector<float>{1.0f, 2.0f});

    std::vector<ClientUpdate> pair = {update(0, {1.0f}, 0.2), update(1, {0.0f}, 0.8)};
    CHECK(wer_weighted_aggregate(pair).values[0] == doctest::Approx(0.64566).epsilon(1e-4));
}

TEST_CASE("wer aggregate: length mismatch names the offending client") {
    std::vector<ClientUpdate> bad = {update(0, {1.0f, 2.0f}, 0.2), update(7, {1.0f}, 0.4)};
    try {
        wer_weighted_aggregate(bad);
        FAIL("expected a structural error");
    } catch (const StructuralError& e) {
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

TEST_CASE("fed_avg: plain mean, weighted mean, singleton, zero samples") {
    std::vector<ClientUpdate> eq = {update(0, {2.0f}, 0.1, 10), update(1, {4.0f}, 0.1, 10)};
    CHECK(fed_avg(eq).values[0] == doctest::Approx(3.0));

    std::vector<ClientUpdate> weighted = {update(0, {4.0f}, 0.1, 25), update(1, {0.0f}, 0.1, 75)};
    CHECK(fed_avg(weighted).values[0] == doctest::Approx(1.0));

    std::vector<ClientUpdate> single = {update(3, {7.0f, -1.0f}, 0.5, 5)};
    CHECK(fed_avg(single).values == std::vector<float>{7.0f, -1.0f});

    std::vector<ClientUpdate> zero = {update(0, {1.0f}, 0.1, 0), update(1, {2.0f}, 0.1, 0)};
    CHECK_THROWS_AS(fed_avg(zero), std::invalid_argument);
}

TEST_CASE("aggregate output stays inside the convex hull") {
    rng::Engine eng(6);
    for (int trial = 0; trial < 100; ++trial) {
        size_t k = 2 + eng.uniform_index(4);
        size_t len = 1 + eng.uniform_index(6);
        std::vector<ClientUpdate> updates;
        for (size_t i = 0; i < k; ++i) {
            std::vector<float> w(len);
            for (auto& v : w) v = static_cast<float>(eng.normal() * 5.0);
            updates.push_back(update(static_cast<int>(i), std::move(w), eng.uniform(0.0, 1.0),
                                     1 + static_cast<long>(eng.uniform_index(100))));
        }
        for (auto strategy : {AggregationStrategy::WerSoftmax, AggregationStrategy::FedAvg}) {
            FlatWeights out = aggregate(strategy, updates);
            for (size_t i = 0; i < len; ++i) {
                float lo = updates[0].weights.values[i], hi = lo;
                for (const auto& u : updates) {
                    lo = std::min(lo, u.weights.values[i]);
                    hi = std::max(hi, u.weights.values[i]);
                }
                CHECK(out.values[i] >= lo - 1e-6f);
                CHECK(out.values[i] <= hi + 1e-6f);
            }
        }
    }
}

TEST_CASE("aggregation is exactly permutation invariant") {
    rng::Engine eng(12);
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < 5; ++i) {
        std::vector<float> w(8);
        for (auto& v : w) v = static_cast<float>(eng.normal());
        updates.push_back(update(i, std::move(w), eng.uniform(0.0, 1.0), 10 + i));
    }
    FlatWeights base_wer = wer_weighted_aggregate(updates);
    FlatWeights base_avg = fed_avg(updates);
    std::reverse(updates.begin(), updates.end());
    CHECK(wer_weighted_aggregate(updates).values == base_wer.values); // bitwise
    CHECK(fed_avg(updates).values == base_avg.values);
    std::swap(updates[0], updates[2]);
    CHECK(wer_weighted_aggregate(updates).values == base_wer.values);
}

TEST_CASE("raising one client's wer strictly lowers its coefficient") {
    std::vector<double> wers = {0.3, 0.5, 0.7};
    double prev = softmax_coefficients(wers)[1];
    for (double w = 0.55; w <= 1.0; w += 0.05) {
        wers[1] = w;
        double now = softmax_coefficients(wers)[1];
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("strategy names parse both ways") {
    CHECK(aggregation_from_string("fedavg") == AggregationStrategy::FedAvg);
    CHECK(aggregation_from_string("wer_softmax") == AggregationStrategy::WerSoftmax);
    CHECK_THROWS_AS(aggregation_from_string("fedprox"), std::invalid_argument);
    CHECK(to_string(AggregationStrategy::FedAvg) == "fedavg");
}

TEST_SUITE_END();
