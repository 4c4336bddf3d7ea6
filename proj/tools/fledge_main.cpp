#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fledge/client.hpp"
#include "fledge/device.hpp"
#include "fledge/orchestrator.hpp"
#include "fledge/server.hpp"

namespace {

uint16_t parse_port(const std::string& listen) {
    auto pos = listen.rfind(':');
    std::string port = pos == std::string::npos ? listen : listen.substr(pos + 1);
    int value = std::stoi(port);
    if (value < 0 || value > 65535) throw CLI::ValidationError("listen", "port out of range");
    return static_cast<uint16_t>(value);
}

std::pair<std::string, uint16_t> parse_host_port(const std::string& addr) {
    auto pos = addr.rfind(':');
    if (pos == std::string::npos) return {"127.0.0.1", static_cast<uint16_t>(std::stoi(addr))};
    std::string host = addr.substr(0, pos);
    if (host.empty()) host = "127.0.0.1";
    return {host, static_cast<uint16_t>(std::stoi(addr.substr(pos + 1)))};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated learning orchestration over a simulated edge-device fleet"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run an in-process experiment from a config");
    std::string sim_config, sim_out = "out";
    uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    simulate->add_option("--config", sim_config, "experiment config JSON")->required();
    simulate->add_option("--out-dir", sim_out, "output directory for CSVs");
    simulate->add_option("--seed", sim_seed, "override the config's seed list")
        ->each([&](const std::string&) { sim_seed_set = true; });

    // server
    auto* server = app.add_subcommand("server", "run the socket-mode coordinator");
    std::string srv_listen = "127.0.0.1:7700", srv_config;
    server->add_option("--listen", srv_listen, "listen address (host:port, loopback only)");
    server->add_option("--config", srv_config, "experiment config JSON")->required();

    // client
    auto* client = app.add_subcommand("client", "run one socket-mode simulated client");
    std::string cli_server = "127.0.0.1:7700", cli_profile, cli_checkpoint;
    uint64_t cli_seed = 1;
    int cli_rounds = 5;
    double cli_scale = 0.0;
    client->add_option("--server", cli_server, "server address host:port");
    client->add_option("--profile", cli_profile, "device profile JSON (fleet file, first entry)")
        ->required();
    client->add_option("--seed", cli_seed, "experiment seed (must match the server's)");
    client->add_option("--rounds", cli_rounds, "rounds to participate in");
    client->add_option("--time-scale", cli_scale, "sleep simulated_seconds * scale per round");
    client->add_option("--checkpoint", cli_checkpoint, "single-checkpoint file for local weights");

    // scenario
    auto* scenario = app.add_subcommand("scenario", "replay a built-in scheduling scenario");
    int scn_id = 1;
    std::string scn_strategy = "resource_aware";
    bool scn_fidelity = false;
    scenario->add_option("--id", scn_id, "scenario id (1 or 2)")->required();
    scenario->add_option("--strategy", scn_strategy, "resource_aware or random");
    scenario->add_flag("--paper-fidelity", scn_fidelity, "disable the round deadline");

    // bandit-bench
    auto* bench = app.add_subcommand("bandit-bench", "compare bandit estimators on one fleet");
    std::string bench_config, bench_out = "bench";
    bench->add_option("--config", bench_config, "experiment config JSON")->required();
    bench->add_option("--out-dir", bench_out, "output directory");

    // trace
    auto* trace = app.add_subcommand("trace", "dump a golden fleet trajectory CSV");
    std::string trace_fleet, trace_out = "trace.csv";
    int trace_rounds = 50;
    trace->add_option("--fleet", trace_fleet, "fleet JSON")->required();
    trace->add_option("--rounds", trace_rounds, "rounds to simulate");
    trace->add_option("--out", trace_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            auto cfg = fledge::ExperimentConfig::from_json_file(sim_config);
            if (sim_seed_set) cfg.seeds = {sim_seed};
            auto results = fledge::run_experiment(cfg, sim_out);
            for (const auto& r : results) {
                std::printf("seed %llu: initial error %.4f, final error %.4f, regret %.4f, jain %.4f\n",
                            static_cast<unsigned long long>(r.seed), r.initial_global_error,
                            r.final_global_error, r.cumulative_regret, r.fairness.jain);
            }
            std::printf("wrote %s/\n", sim_out.c_str());
        } else if (*server) {
            auto cfg = fledge::ExperimentConfig::from_json_file(srv_config);
            uint64_t seed = cfg.seeds.front();
            fledge::ServerConfig sc;
            sc.engine = fledge::make_round_engine_config(cfg, seed);
            sc.expected_clients = static_cast<int>(cfg.fleet.size());
            sc.rounds = cfg.rounds;
            sc.port = parse_port(srv_listen); // loopback only
            fledge::SocketServer srv(sc, fledge::make_seeded_fleet(cfg, seed),
                                     fledge::make_initial_global(cfg, seed));
            std::printf("listening on 127.0.0.1:%u (%d clients, %d rounds)\n", srv.port(),
                        sc.expected_clients, sc.rounds);
            std::fflush(stdout);
            srv.run();
            for (const auto& rec : srv.records()) {
                std::printf("round %d: %zu chosen, m_t %.1f s, %s\n", rec.t, rec.chosen.size(),
                            rec.m_t_s, rec.skipped ? "skipped" : (rec.voided ? "voided" : "ok"));
            }
        } else if (*client) {
            auto [host, port] = parse_host_port(cli_server);
            auto fleet = fledge::load_fleet(cli_profile);
            fledge::SocketClientConfig cc;
            cc.host = host;
            cc.port = port;
            cc.profile = fleet.front();
            cc.experiment_seed = cli_seed;
            cc.rounds = cli_rounds;
            cc.time_scale = cli_scale;
            cc.checkpoint_path = cli_checkpoint;
            fledge::SocketClient c(cc);
            for (const auto& log : c.run()) {
                std::printf("round %d: %s epochs %d elapsed %.1f s %s\n", log.t,
                            fledge::to_string(log.directive).c_str(), log.epochs, log.elapsed_s,
                            log.died ? "DIED" : fledge::to_string(log.final_status).c_str());
            }
        } else if (*scenario) {
            auto strat = fledge::selection_strategy_from_string(scn_strategy);
            auto result = fledge::scenario_table2(scn_id, strat, scn_fidelity);
            std::cout << result.to_json_text() << "\n";
        } else if (*bench) {
            auto base = fledge::ExperimentConfig::from_json_file(bench_config);
            base.bandit_only = true;
            base.warmup_rounds = 0;
            for (const std::string name : {"linucb", "neuralucb_s", "neuralucb_m"}) {
                auto cfg = base;
                cfg.strategy = fledge::selection_strategy_from_string(name);
                cfg.alpha = cfg.strategy == fledge::SelectionStrategy::LinUcb ? 10.0 : 0.01;
                auto results = fledge::run_experiment(cfg, bench_out + "/" + name);
                double mse = 0, regret = 0;
                for (const auto& r : results) {
                    int tail = std::max<int>(1, static_cast<int>(r.rounds.size()) / 10);
                    double acc = 0;
                    for (size_t i = r.rounds.size() - tail; i < r.rounds.size(); ++i) {
                        acc += r.rounds[i].estimator_mse;
                    }
                    mse += acc / tail;
                    regret += r.cumulative_regret;
                }
                std::printf("%-12s mean final MSE %.3f, mean cumulative regret %.1f\n", name.c_str(),
                            mse / results.size(), regret / results.size());
            }
        } else if (*trace) {
            fledge::write_fleet_trace(fledge::load_fleet(trace_fleet), trace_rounds, trace_out);
            std::printf("wrote %s\n", trace_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
