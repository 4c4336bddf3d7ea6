#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fledge/aggregation.hpp"
#include "fledge/device.hpp"
#include "fledge/round_engine.hpp"
#include "fledge/surrogate.hpp"

namespace fledge {

struct ClientRoundExecution {
    int epochs_assigned = 0;
    int batches_completed = 0;
    bool died = false;
    double elapsed_s = 0.0;
    double battery_after = 0.0;
    double wer = 1.0;
    std::optional<ClientUpdate> update; // absent when the device died mid-round
};

/// Client-side per-round behaviour shared by the in-process driver and the
/// socket client: device simulation, local training, WER measurement.
/// Keeping this in one place is what makes the two modes bit-identical.
class ClientRuntime {
public:
    ClientRuntime(DeviceProfile profile, uint64_t experiment_seed, const DataGenConfig& datagen = {});

    int client_id() const { return device_.profile().device_id; }
    DeviceSimulator& device() { return device_; }
    const DeviceSimulator& device() const { return device_; }
    const LocalDataset& dataset() const { return data_; }

    /// Context + sample count for round t; empty when the device is dead.
    std::optional<ContextReport> report_context(int t);

    /// Trains `epochs` on the global weights, stepping the device for the
    /// realized time/battery cost. Writes a checkpoint when a path is set.
    ClientRoundExecution execute(const ModelWeights& global, int epochs, int batch_size, int t);

    void end_round() { device_.end_round(); }

    /// Enables single-checkpoint persistence of the local weights.
    void set_checkpoint_path(std::string path) { checkpoint_path_ = std::move(path); }

private:
    DeviceSimulator device_;
    LocalDataset data_;
    uint64_t seed_;
    std::string checkpoint_path_;
};

} // namespace fledge
