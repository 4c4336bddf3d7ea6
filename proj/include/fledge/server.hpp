#pragma once

#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "fledge/net.hpp"
#include "fledge/round_engine.hpp"

namespace fledge {

struct ServerConfig {
    RoundEngineConfig engine;
    int expected_clients = 2;
    int rounds = 3;
    uint16_t port = 0; // 0 picks an ephemeral loopback port
    // Real-time guard against silent stalls while awaiting uploads; <= 0
    // disables it. Disconnects already drop a client immediately.
    double update_deadline_real_s = 10.0;
};

struct ServerRoundRecord {
    int t = 0;
    bool skipped = false;
    bool voided = false;
    std::vector<int> chosen;
    std::map<int, int> epochs;
    double m_t_s = 0.0;
    FlatWeights aggregated; // global weights after the round
    std::map<int, double> durations_s;
    std::map<int, double> waiting_s; // logical, from reported batch times
};

/// Socket-mode coordinator: N concurrent client sessions over the framed
/// protocol, one shared RoundEngine behind a single mutex.
class SocketServer {
public:
    SocketServer(ServerConfig cfg, const std::vector<DeviceProfile>& fleet,
                 ModelWeights initial_global);
    ~SocketServer();

    uint16_t port() const { return listener_.port(); }

    /// Serves cfg.rounds rounds, blocking until they settle or every client
    /// disconnects.
    void run();

    const std::vector<ServerRoundRecord>& records() const { return records_; }

private:
    void session(TcpStream stream);
    void maybe_plan_locked();
    void settle_locked();
    bool current_round_settled_locked(int round) const;

    ServerConfig cfg_;
    TcpListener listener_;
    RoundEngine engine_;

    std::mutex mu_;
    std::condition_variable cv_;
    int sessions_alive_ = 0;
    int ever_identified_ = 0;
    std::map<int, ContextReport> contexts_;
    std::optional<RoundDirectives> directives_;
    std::set<int> awaited_;
    std::vector<ClientUpdate> updates_;
    std::chrono::steady_clock::time_point plan_time_;
    std::vector<ServerRoundRecord> records_;
    bool shutting_down_ = false;
    std::vector<std::thread> threads_;
};

} // namespace fledge
