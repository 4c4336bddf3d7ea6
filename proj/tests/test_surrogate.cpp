#include "doctest.h"

#include <algorithm>

#include "fledge/rng.hpp"
#include "fledge/surrogate.hpp"

using namespace fledge;

TEST_SUITE_BEGIN("surrogate");

namespace {

/// Two linearly separable blobs on the x axis.
LocalDataset separable_two_class(size_t n_train, size_t n_val) {
    LocalDataset d;
    d.feature_dim = 2;
    d.n_train = n_train;
    d.n_val = n_val;
    rng::Engine eng(11);
    for (size_t i = 0; i < n_train + n_val; ++i) {
        int label = static_cast<int>(i % 2);
        double x = (label == 0 ? -2.0 : 2.0) + 0.3 * eng.normal();
        double y = 0.3 * eng.normal();
        d.features.push_back(static_cast<float>(x));
        d.features.push_back(static_cast<float>(y));
        d.labels.push_back(label);
    }
    return d;
}

/// Constant-prediction model: always argmax class 0.
ModelWeights always_class0(size_t classes) {
    ModelWeights w;
    w.add("hidden/kernel", {2, 4}, std::vector<float>(8, 0.0f));
    w.add("hidden/bias", {4}, std::vector<float>(4, 0.0f));
    w.add("output/kernel", {4, classes}, std::vector<float>(4 * classes, 0.0f));
    std::vector<float> bias(classes, 0.0f);
    bias[0] = 5.0f;
    w.add("output/bias", {classes}, bias);
    return w;
}

} // namespace

TEST_CASE("train_local: zero epochs leaves weights bit-exact") {
    auto data = separable_two_class(20, 10);
    ModelWeights w = init_surrogate({2, 8, 2}, 5);
    TrainResult r = train_local(w, data, 0, 5, 99);
    CHECK(r.weights == w);
    CHECK(r.loss_history.empty());
}

TEST_CASE("train_local: loss strictly decreases over the first epochs") {
    auto data = separable_two_class(24, 10);
    ModelWeights w = init_surrogate({2, 8, 2}, 5);
    TrainResult r = train_local(w, data, 50, 4, 123);
    REQUIRE(r.loss_history.size() == 50);
    for (int e = 1; e < 5; ++e) {
        CHECK(r.loss_history[e] < r.loss_history[e - 1]);
    }
    // and it must actually learn the separable task
    CHECK(evaluate(r.weights, data) <= 0.1);
}

TEST_CASE("train_local: same seed twice is bit-identical") {
    auto data = separable_two_class(20, 10);
    ModelWeights w = init_surrogate({2, 8, 2}, 5);
    TrainResult a = train_local(w, data, 7, 5, 321);
    TrainResult b = train_local(w, data, 7, 5, 321);
    CHECK(a.weights == b.weights);
    CHECK(a.loss_history == b.loss_history);
    TrainResult c = train_local(w, data, 7, 5, 322);
    CHECK(a.weights != c.weights);
}

TEST_CASE("train_local: empty training set is an error") {
    LocalDataset d;
    d.n_train = 0;
    d.n_val = 1;
    d.features = {0, 0};
    d.labels = {0};
    ModelWeights w = init_surrogate({2, 4, 2}, 1);
    CHECK_THROWS_AS(train_local(w, d, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("evaluate: counting error rate") {
    LocalDataset d;
    d.feature_dim = 2;
    d.n_train = 0;
    d.n_val = 10;
    for (int i = 0; i < 10; ++i) {
        d.features.push_back(0.0f);
        d.features.push_back(0.0f);
        d.labels.push_back(0);
    }
    ModelWeights w = always_class0(3);
    CHECK(evaluate(w, d) == doctest::Approx(0.0));

    std::fill(d.labels.begin(), d.labels.end(), 1);
    CHECK(evaluate(w, d) == doctest::Approx(1.0));

    std::fill(d.labels.begin(), d.labels.end(), 0);
    d.labels[1] = d.labels[4] = d.labels[7] = 2; // 3 wrong of 10
    CHECK(evaluate(w, d) == doctest::Approx(0.3));
}

TEST_CASE("evaluate: empty validation set is an error") {
    LocalDataset d;
    d.n_train = 1;
    d.n_val = 0;
    d.features = {0, 0};
    d.labels = {0};
    CHECK_THROWS_AS(evaluate(always_class0(2), d), std::invalid_argument);
}

TEST_CASE("evaluate: permuting validation rows leaves the error unchanged") {
    auto data = separable_two_class(10, 12);
    ModelWeights w = init_surrogate({2, 8, 2}, 3);
    double before = evaluate(w, data);

    // reverse the validation block
    LocalDataset shuffled = data;
    for (size_t i = 0; i < data.n_val; ++i) {
        size_t src = data.n_train + data.n_val - 1 - i;
        size_t dst = data.n_train + i;
        shuffled.labels[dst] = data.labels[src];
        for (size_t f = 0; f < data.feature_dim; ++f) {
            shuffled.features[dst * data.feature_dim + f] = data.features[src * data.feature_dim + f];
        }
    }
    CHECK(evaluate(w, shuffled) == doctest::Approx(before));
}

TEST_CASE("datagen: split sizes, dialect recorded, determinism") {
    LocalDataset d = make_client_dataset(9, 3, 0.7, 25, 10);
    CHECK(d.n_train == 25);
    CHECK(d.n_val == 10);
    CHECK(d.size() == 35);
    CHECK(d.dialect == doctest::Approx(0.7));

    LocalDataset d2 = make_client_dataset(9, 3, 0.7, 25, 10);
    CHECK(d.features == d2.features);
    CHECK(d.labels == d2.labels);

    LocalDataset other_client = make_client_dataset(9, 4, 0.7, 25, 10);
    CHECK(d.features != other_client.features);
}

TEST_CASE("datagen: global test pools every dialect") {
    LocalDataset g = make_global_test(1, {0.0, 0.5, 1.0}, 15);
    CHECK(g.size() == 45);
    CHECK(g.n_val == 45);
    CHECK(g.n_train == 0);
}

TEST_SUITE_END();
