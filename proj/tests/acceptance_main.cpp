// Acceptance suite: every release criterion as one pass/fail line.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "fledge/aggregation.hpp"
#include "fledge/client.hpp"
#include "fledge/errors.hpp"
#include "fledge/estimator.hpp"
#include "fledge/mlp.hpp"
#include "fledge/orchestrator.hpp"
#include "fledge/protocol.hpp"
#include "fledge/rng.hpp"
#include "fledge/server.hpp"
#include "fledge/tensor.hpp"

using namespace fledge;

namespace {

struct Failure {
    std::string detail;
};

void require(bool cond, const std::string& detail) {
    if (!cond) throw Failure{detail};
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// ---------------------------------------------------------------------------

void scenario1_resource_aware() {
    ScenarioResult r = scenario_table2(1, SelectionStrategy::ResourceAware, false);
    require(r.completed, "round did not complete");
    require(r.rows.size() == 2, "expected two clients");
    require(r.rows[0].epochs == 4 && r.rows[1].epochs == 7,
            fmt("epochs (%g, %g) != (4, 7)", r.rows[0].epochs, r.rows[1].epochs));
    require(std::abs(r.m_t_min - 146.56) <= 0.05, fmt("m_t %.4f min not within 146.56 +- 0.05", r.m_t_min));
    require(std::abs(r.round_waiting_min - 7.42) <= 0.02,
            fmt("waiting %.4f min not within 7.42 +- 0.02", r.round_waiting_min));
}

void scenario1_random() {
    ScenarioResult r = scenario_table2(1, SelectionStrategy::Random, false);
    require(r.completed, "round did not complete");
    require(r.rows[0].epochs == 7 && r.rows[1].epochs == 7, "random must assign e_max to everyone");
    require(std::abs(r.round_waiting_min - 114.92) <= 0.02,
            fmt("waiting %.4f min not within 114.92 +- 0.02", r.round_waiting_min));
}

void scenario2_resource_aware() {
    ScenarioResult r = scenario_table2(2, SelectionStrategy::ResourceAware, false);
    require(r.completed && !r.stuck, "round did not complete");
    require(r.rows[0].client_id == 1 && r.rows[0].epochs == 3,
            fmt("weak-battery client got %g epochs, wanted 3", r.rows[0].epochs));
    require(!r.rows[0].died, "weak-battery client died");
    require(r.rows[0].battery_after >= 20.0,
            fmt("battery %.2f%% fell below the floor", r.rows[0].battery_after));
    // healthy client's epochs from Steps 5-6: floor((3*5*251.25/130.36)/5) = 5
    require(r.rows[1].epochs == 5, fmt("healthy client got %g epochs, formula gives 5", r.rows[1].epochs));
    require(std::isfinite(r.round_waiting_min) && r.round_waiting_min <= 15.0,
            fmt("waiting %.2f min exceeds 15", r.round_waiting_min));
}

void scenario2_random_fidelity() {
    ScenarioResult r = scenario_table2(2, SelectionStrategy::Random, true);
    require(r.rows[0].died, "weak-battery client should die mid-round");
    require(r.rows[0].battery_after <= 0.0, "battery should reach zero");
    require(r.stuck && !r.completed, "round must never complete in paper-fidelity mode");
    require(std::isinf(r.round_waiting_min), "waiting time must be unbounded");
}

void aggregation_oracle() {
    std::vector<ClientUpdate> pair(2);
    pair[0].client_id = 0;
    pair[0].weights.values = {1.0f};
    pair[0].wer = 0.2;
    pair[1].client_id = 1;
    pair[1].weights.values = {0.0f};
    pair[1].wer = 0.8;
    double got = wer_weighted_aggregate(pair).values[0];
    require(std::abs(got - 0.64566) <= 1e-4, fmt("aggregate %.6f not within 1e-4 of 0.64566", got));

    rng::Engine eng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t k = 1 + eng.uniform_index(10);
        std::vector<double> wers(k);
        for (auto& w : wers) w = eng.uniform(0.0, 1.0);
        auto alphas = softmax_coefficients(wers);
        double sum = 0.0;
        for (double a : alphas) sum += a;
        require(std::abs(sum - 1.0) <= 1e-9, fmt("coefficient sum %.12f drifted", sum));
    }
}

void gradient_correctness() {
    rng::Engine eng(505);
    int tested = 0;
    uint64_t net_seed = 9000;
    while (tested < 20) {
        int input_dim = 2 + static_cast<int>(eng.uniform_index(5));
        std::vector<int> hidden = {4 + static_cast<int>(eng.uniform_index(29)),
                                   3 + static_cast<int>(eng.uniform_index(14))};
        Mlp net({input_dim, hidden, 2}, net_seed++);
        Eigen::VectorXd x(input_dim);
        for (int i = 0; i < input_dim; ++i) x(i) = eng.uniform(-1.0, 1.0);

        // keep finite differences away from rectifier kinks
        double min_pre = 1e300;
        {
            Eigen::VectorXd a = x;
            for (size_t l = 0; l + 1 < net.layers().size(); ++l) {
                Eigen::VectorXd pre = net.layers()[l] * a;
                min_pre = std::min(min_pre, pre.cwiseAbs().minCoeff());
                a = pre.cwiseMax(0.0);
            }
        }
        if (min_pre < 1e-3) continue;

        int channel = static_cast<int>(eng.uniform_index(2));
        Eigen::VectorXd g = net.gradient(x, channel);
        Eigen::VectorXd theta = net.theta();
        const double h = 1e-4;
        double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        for (int i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp(i) += h;
            tm(i) -= h;
            net.set_theta(tp);
            double fp = net.forward(x)(channel);
            net.set_theta(tm);
            double fm = net.forward(x)(channel);
            net.set_theta(theta);
            double fd = (fp - fm) / (2 * h);
            require(std::abs(g(i) - fd) / scale <= 1e-3,
                    fmt("gradient entry off by %.2e (limit 1e-3 relative)", std::abs(g(i) - fd) / scale));
        }
        ++tested;
    }
}

void confidence_correctness() {
    const int p = 800;
    const double lambda = 1.0, m = 32.0;
    ConfidenceState cs(p, lambda);
    Eigen::MatrixXd dense = lambda * Eigen::MatrixXd::Identity(p, p);
    rng::Engine eng(606);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd g(p);
        for (int j = 0; j < p; ++j) g(j) = eng.normal();
        cs.update(g, m);
        dense.noalias() += g * g.transpose() / m;
    }
    double dev = (cs.z_inverse() * dense - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff();
    require(dev <= 1e-6, fmt("max-abs deviation from identity %.3e exceeds 1e-6", dev));
}

ExperimentConfig bandit_bench_config(SelectionStrategy strategy) {
    ExperimentConfig cfg;
    cfg.fleet = make_default_fleet(1234);
    cfg.rounds = 475;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.strategy = strategy;
    cfg.selection.k = 2;
    cfg.selection.e_min = 1;
    cfg.selection.e_max = 7;
    cfg.selection.batch_size = 5;
    cfg.selection.gamma = 20.0;
    cfg.alpha = strategy == SelectionStrategy::LinUcb ? 10.0 : 0.01;
    cfg.warmup_rounds = 0;
    cfg.bandit_only = true;
    return cfg;
}

struct BenchOutcome {
    double final_mse = 0.0;
    double cumulative_regret = 0.0;
};

BenchOutcome bench(SelectionStrategy strategy) {
    auto results = run_experiment(bandit_bench_config(strategy));
    BenchOutcome out;
    for (const auto& r : results) {
        size_t tail = r.rounds.size() / 10;
        double acc = 0.0;
        for (size_t i = r.rounds.size() - tail; i < r.rounds.size(); ++i) {
            acc += r.rounds[i].estimator_mse;
        }
        out.final_mse += acc / static_cast<double>(tail);
        out.cumulative_regret += r.cumulative_regret;
    }
    out.final_mse /= static_cast<double>(results.size());
    out.cumulative_regret /= static_cast<double>(results.size());
    return out;
}

void bandit_ordering() {
    BenchOutcome lin = bench(SelectionStrategy::LinUcb);
    BenchOutcome shared = bench(SelectionStrategy::NeuralUcbS);
    BenchOutcome per_client = bench(SelectionStrategy::NeuralUcbM);
    std::printf("    [info] final MSE: linucb %.1f, neuralucb_s %.1f, neuralucb_m %.1f\n",
                lin.final_mse, shared.final_mse, per_client.final_mse);
    std::printf("    [info] cumulative regret: linucb %.1f, neuralucb_s %.1f, neuralucb_m %.1f\n",
                lin.cumulative_regret, shared.cumulative_regret, per_client.cumulative_regret);
    require(lin.final_mse > shared.final_mse,
            fmt("MSE ordering broken: linucb %.2f <= neuralucb_s %.2f", lin.final_mse, shared.final_mse));
    require(shared.final_mse >= per_client.final_mse,
            fmt("MSE ordering broken: neuralucb_s %.2f < neuralucb_m %.2f", shared.final_mse,
                per_client.final_mse));
    require(per_client.cumulative_regret < shared.cumulative_regret &&
                per_client.cumulative_regret < lin.cumulative_regret,
            fmt("neuralucb_m regret %.1f is not the lowest (s %.1f, lin %.1f)",
                per_client.cumulative_regret, shared.cumulative_regret, lin.cumulative_regret));
}

ExperimentConfig dominance_config(SelectionStrategy strategy) {
    ExperimentConfig cfg;
    DeviceProfile slow;
    slow.device_id = 1;
    slow.base_batch_time_s = 430.0;
    slow.base_battery_drop_pct = 1.72;
    slow.ram_sensitivity = 0.0;
    slow.cpu_sensitivity = 0.0;
    slow.ram_walk_step = 0.0;
    slow.cpu_walk_step = 0.0;
    slow.noise_sigma = 0.005;
    slow.initially_plugged = true;
    DeviceProfile fast = slow;
    fast.device_id = 2;
    fast.base_batch_time_s = 233.0;
    fast.dialect = 0.5;
    cfg.fleet = {slow, fast};
    cfg.rounds = 150;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.strategy = strategy;
    cfg.selection.k = 2;
    cfg.selection.e_min = 1;
    cfg.selection.e_max = 7;
    cfg.selection.batch_size = 5;
    cfg.selection.gamma = 20.0;
    cfg.warmup_rounds = 100;
    return cfg;
}

void waiting_time_dominance() {
    auto mean_waiting = [](const std::vector<ExperimentResult>& results) {
        double total = 0.0;
        long rounds = 0;
        for (const auto& r : results) {
            for (size_t t = 100; t < r.rounds.size(); ++t) {
                double w = 0.0;
                for (const auto& c : r.rounds[t].clients) {
                    if (c.chosen && std::isfinite(c.waiting_s)) w = std::max(w, c.waiting_s);
                }
                total += w;
                ++rounds;
            }
        }
        return total / static_cast<double>(rounds);
    };
    double aware = mean_waiting(run_experiment(dominance_config(SelectionStrategy::ResourceAware)));
    double random = mean_waiting(run_experiment(dominance_config(SelectionStrategy::Random)));
    std::printf("    [info] mean per-round waiting: resource_aware %.1f s, random %.1f s (ratio %.3f)\n",
                aware, random, aware / random);
    require(random > 0.0, "random baseline produced no waiting at all");
    require(aware <= 0.25 * random,
            fmt("resource_aware waiting %.1f s exceeds 25%% of random's %.1f s", aware, random));
}

void fl_convergence_trends() {
    auto config_for = [](int k) {
        ExperimentConfig cfg;
        for (int i = 0; i < 10; ++i) {
            DeviceProfile p;
            p.device_id = i;
            p.base_batch_time_s = 5.0;
            p.base_battery_drop_pct = 0.1;
            p.noise_sigma = 0.0;
            p.initially_plugged = true;
            p.dialect = 0.9 * i / 9.0;
            cfg.fleet.push_back(p);
        }
        cfg.rounds = 5;
        cfg.seeds = {1, 2, 3, 4, 5};
        cfg.strategy = SelectionStrategy::Random;
        cfg.aggregation = AggregationStrategy::WerSoftmax;
        cfg.selection.k = k;
        cfg.selection.e_min = 1;
        cfg.selection.e_max = 5;
        cfg.selection.batch_size = 5;
        return cfg;
    };
    std::map<int, double> final_error;
    for (int k : {3, 4, 5}) {
        auto results = run_experiment(config_for(k));
        double initial = 0.0, final_err = 0.0;
        for (const auto& r : results) {
            initial += r.initial_global_error;
            final_err += r.final_global_error;
        }
        initial /= static_cast<double>(results.size());
        final_err /= static_cast<double>(results.size());
        std::printf("    [info] k=%d: mean error %.3f -> %.3f over 5 rounds\n", k, initial, final_err);
        require(final_err < initial,
                fmt("k=%d: final error %.3f not below initial %.3f", static_cast<double>(k), final_err,
                    initial));
        final_error[k] = final_err;
    }
    require(final_error[5] <= final_error[3],
            fmt("k=5 error %.3f above k=3 error %.3f", final_error[5], final_error[3]));
}

void dual_mode_equivalence() {
    ExperimentConfig cfg;
    DeviceProfile a;
    a.device_id = 1;
    a.base_batch_time_s = 6.0;
    a.base_battery_drop_pct = 0.4;
    a.noise_sigma = 0.02;
    a.initially_plugged = true;
    DeviceProfile b = a;
    b.device_id = 2;
    b.base_batch_time_s = 3.5;
    b.dialect = 0.6;
    cfg.fleet = {a, b};
    cfg.rounds = 3;
    cfg.seeds = {21};
    cfg.strategy = SelectionStrategy::ResourceAware;
    cfg.selection.k = 2;
    cfg.selection.e_min = 1;
    cfg.selection.e_max = 4;
    cfg.selection.batch_size = 5;
    cfg.warmup_rounds = 1;
    const uint64_t seed = 21;

    // in-process reference
    SimulationRun inproc(cfg, seed);
    std::vector<RoundReport> reports;
    std::vector<FlatWeights> globals;
    for (int t = 0; t < cfg.rounds; ++t) {
        reports.push_back(inproc.run_round());
        globals.push_back(flatten_weights(inproc.engine().global_weights()));
    }

    // socket mode, same seed
    ServerConfig sc;
    sc.engine = make_round_engine_config(cfg, seed);
    sc.expected_clients = 2;
    sc.rounds = cfg.rounds;
    SocketServer server(sc, make_seeded_fleet(cfg, seed), make_initial_global(cfg, seed));
    uint16_t port = server.port();
    std::thread server_thread([&] { server.run(); });
    auto fleet = make_seeded_fleet(cfg, seed);
    std::vector<std::thread> clients;
    for (int i = 0; i < 2; ++i) {
        clients.emplace_back([&, i] {
            SocketClientConfig cc;
            cc.port = port;
            cc.profile = fleet[static_cast<size_t>(i)];
            cc.experiment_seed = seed;
            cc.rounds = cfg.rounds;
            SocketClient(cc).run();
        });
    }
    for (auto& c : clients) c.join();
    server_thread.join();

    require(server.records().size() == static_cast<size_t>(cfg.rounds), "socket mode lost rounds");
    for (int t = 0; t < cfg.rounds; ++t) {
        const ServerRoundRecord& rec = server.records()[static_cast<size_t>(t)];
        require(rec.chosen == reports[static_cast<size_t>(t)].chosen,
                fmt("round %g: chosen sets differ", static_cast<double>(t)));
        for (const auto& c : reports[static_cast<size_t>(t)].clients) {
            if (!c.chosen) continue;
            require(rec.epochs.at(c.client_id) == c.epochs_assigned,
                    fmt("round %g: epochs differ for a client", static_cast<double>(t)));
            require(rec.waiting_s.at(c.client_id) == c.waiting_s,
                    fmt("round %g: logical waiting differs", static_cast<double>(t)));
        }
        require(rec.aggregated.values == globals[static_cast<size_t>(t)].values,
                fmt("round %g: aggregated weights not bit-identical", static_cast<double>(t)));
    }
}

void roundtrip_suites() {
    // 1000 random models through flatten -> load
    rng::Engine eng(808);
    for (int i = 0; i < 1000; ++i) {
        ModelWeights w;
        size_t tensors = eng.uniform_index(6);
        for (size_t k = 0; k < tensors; ++k) {
            size_t rank = 1 + eng.uniform_index(3);
            std::vector<size_t> shape;
            size_t total = 1;
            for (size_t d = 0; d < rank; ++d) {
                shape.push_back(1 + eng.uniform_index(5));
                total *= shape.back();
            }
            std::vector<float> values(total);
            for (auto& v : values) v = static_cast<float>(eng.normal() * 4.0);
            w.add("t" + std::to_string(k), shape, std::move(values));
        }
        require(load_flat_weights(flatten_weights(w), describe_weights(w)) == w,
                "flatten/load roundtrip broke");
    }

    // 1e5 random frames through the codec
    rng::Engine codec_eng(rng::derive(3, {rng::kFuzz}));
    for (int i = 0; i < 100000; ++i) {
        RpcMessage m;
        m.type = static_cast<MsgType>(1 + codec_eng.uniform_index(6));
        m.header = nlohmann::json{{"client_id", static_cast<int>(codec_eng.uniform_index(50))},
                                  {"round", static_cast<int>(codec_eng.uniform_index(500))},
                                  {"v", codec_eng.uniform(-1e3, 1e3)}};
        m.weights.resize(codec_eng.uniform_index(8));
        for (auto& w : m.weights) w = static_cast<float>(codec_eng.normal());
        require(decode_frame(encode_frame(m)) == m, "codec identity broke");
    }

    // 1e5 fuzzed byte strings: typed errors only, no crashes
    rng::Engine fuzz_eng(rng::derive(4, {rng::kFuzz}));
    for (int i = 0; i < 100000; ++i) {
        std::vector<uint8_t> bytes(fuzz_eng.uniform_index(96));
        for (auto& b : bytes) b = static_cast<uint8_t>(fuzz_eng.next_u64() & 0xff);
        try {
            decode_frame(bytes);
        } catch (const ProtocolError&) {
            // expected for most inputs
        }
    }
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void()> body;
    };
    const std::vector<Criterion> criteria = {
        {"scheduling table, scenario 1, resource-aware: epochs (4,7), m_t 146.56 min, waiting 7.42 min",
         scenario1_resource_aware},
        {"scheduling table, scenario 1, random: epochs (7,7), waiting 114.92 min", scenario1_random},
        {"scheduling table, scenario 2, resource-aware: weak client survives with 3 epochs",
         scenario2_resource_aware},
        {"scheduling table, scenario 2, random + paper-fidelity: unbounded wait reproduced",
         scenario2_random_fidelity},
        {"aggregation oracle: softmax weighting matches the hand-computed value",
         aggregation_oracle},
        {"gradient correctness: backprop vs central finite differences", gradient_correctness},
        {"confidence-matrix correctness: rank-1 inverse vs dense oracle", confidence_correctness},
        {"bandit ordering: per-client neural < shared neural < linear (MSE and regret)",
         bandit_ordering},
        {"waiting-time dominance: resource-aware <= 25% of random", waiting_time_dominance},
        {"federated convergence: error falls over rounds; k=5 beats k=3", fl_convergence_trends},
        {"dual-mode equivalence: sockets and in-process agree bit-exactly", dual_mode_equivalence},
        {"roundtrip suites: weights, codec identity, fuzz totality", roundtrip_suites},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string verdict = "PASS", detail;
        try {
            criterion.body();
        } catch (const Failure& f) {
            verdict = "FAIL";
            detail = f.detail;
            ++failures;
        } catch (const std::exception& e) {
            verdict = "FAIL";
            detail = std::string("unexpected exception: ") + e.what();
            ++failures;
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s (%.1f s)%s%s\n", verdict.c_str(), criterion.name, secs,
                    detail.empty() ? "" : " - ", detail.c_str());
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d of %zu acceptance criteria failed\n", failures, criteria.size());
    }
    return failures;
}
