#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fledge/client_runtime.hpp"
#include "fledge/protocol.hpp"

namespace fledge {

struct SocketClientConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
    DeviceProfile profile;
    uint64_t experiment_seed = 1;
    int rounds = 3;
    DataGenConfig datagen;
    double time_scale = 0.0; // sleep elapsed * scale per round (demo pacing)
    double poll_interval_s = 0.005;
    std::string checkpoint_path; // optional single-checkpoint persistence
};

struct ClientRoundLog {
    int t = 0;
    Directive directive = Directive::Wait;
    int epochs = 0;
    double elapsed_s = 0.0;
    bool died = false;
    UpdateStatus final_status = UpdateStatus::Pending;
    bool got_aggregate = false;
    double realized_waiting_wall_s = 0.0; // aggregate receipt - own upload, wall clock
};

/// Socket-mode client: drives a ClientRuntime through the three-RPC cycle.
/// A mid-round battery death closes the connection, mimicking a phone
/// switching off.
class SocketClient {
public:
    explicit SocketClient(SocketClientConfig cfg) : cfg_(std::move(cfg)) {}

    std::vector<ClientRoundLog> run();

private:
    SocketClientConfig cfg_;
};

} // namespace fledge
