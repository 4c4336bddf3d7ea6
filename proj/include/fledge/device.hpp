#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fledge {

/// Resource snapshot a client reports before a round:
/// [TR, AR, AC, BS, CI, PI] in that feature order.
struct ContextVector {
    double total_ram_gb = 0.0;     // TR
    double available_ram_gb = 0.0; // AR
    double battery_pct = 0.0;      // AC, 0..100
    int battery_status = 0;        // BS, 0 = discharging, 1 = charging
    double cpu_usage_pct = 0.0;    // CI, 0..100
    double benchmark_score = 0.0;  // PI

    std::array<double, 6> as_features() const {
        return {total_ram_gb, available_ram_gb, battery_pct,
                static_cast<double>(battery_status), cpu_usage_pct, benchmark_score};
    }
};

/// Ground-truth parameters for one simulated device. The cost law is
/// multiplicative: batch_time = base * age * ram * battery * cpu * noise.
struct DeviceProfile {
    int device_id = 0;
    std::string name;

    double base_batch_time_s = 1.0;     // per batch under ideal conditions
    double base_battery_drop_pct = 0.5; // per batch under ideal conditions
    double age_factor = 1.0;            // >= 1; older devices slower, drain faster
    double total_ram_gb = 8.0;
    double benchmark_score = 500000.0;

    double initial_battery_pct = 100.0;
    bool initially_plugged = false;
    double plug_in_below = -1.0;  // auto-plug threshold; < 0 disables
    double unplug_above = 101.0;  // auto-unplug threshold; > 100 disables
    double recharge_per_round = 0.0;
    double charging_offset = 1.0; // BS=1 scales drain by (1 - offset)

    double ram_sensitivity = 0.3;
    double cpu_sensitivity = 0.5;
    double low_battery_penalty = 2.0; // slowdown reached in the low battery band
    double battery_threshold = 20.0;  // factor is 1 at or above this charge
    double penalty_full_at = 15.0;    // charge at which the ramp reaches full penalty
    double noise_sigma = 0.02;        // lognormal sigma on batch time; 0 disables

    double base_free_ram_frac = 0.6; // AR/TR with no background apps
    double base_cpu_pct = 10.0;
    double ram_walk_step = 0.05; // background-load random walk, per round
    double cpu_walk_step = 5.0;
    double ram_load_max = 0.45;
    double cpu_load_max = 55.0;

    uint64_t rng_seed = 0;

    // Local data parameters (clients own their dataset).
    double dialect = 0.0;
    int n_train = 25;
    int n_val = 10;

    // Frozen cost estimates for scenario runs; < 0 means none.
    double pinned_time_s = -1.0;
    double pinned_drop_pct = -1.0;
};

/// True per-batch cost realized when a device trains.
struct CostSample {
    double batch_time_s = 0.0;
    double battery_drop_pct = 0.0;
};

struct StepResult {
    double elapsed_s = 0.0;
    int completed_batches = 0;
    bool died = false;
    double battery_after = 0.0;
};

double ram_factor(const DeviceProfile& p, double ar_over_tr);
double battery_factor(const DeviceProfile& p, double battery_pct);
double cpu_factor(const DeviceProfile& p, double cpu_usage_pct);

/// Cost law without stochastic state; `noise_mult` of 1 gives the noiseless cost.
CostSample true_cost(const DeviceProfile& p, const ContextVector& c, double noise_mult = 1.0);

/// Steppable ground-truth state of one device. A dead device (battery 0)
/// stays dead: it neither reports context nor recharges.
class DeviceSimulator {
public:
    explicit DeviceSimulator(DeviceProfile p);

    const DeviceProfile& profile() const { return profile_; }
    bool alive() const { return battery_ > 0.0; }
    double battery_pct() const { return battery_; }
    bool plugged() const { return plugged_; }

    /// Context for round t; the background-load walk advances lazily to t.
    /// Calling twice with the same t returns the identical snapshot.
    /// Empty when the device is dead.
    std::optional<ContextVector> sample_context(int t);

    /// Runs up to `batches` batches at the current round's context, draining
    /// the battery per batch and re-evaluating the cost law as the charge
    /// crosses bands. Truncates if the battery reaches 0 mid-run.
    StepResult step_training(int batches);

    /// Noiseless cost at the current round's context (simulation privilege).
    CostSample noiseless_cost() const;

    /// End-of-round battery housekeeping: recharge while plugged, then apply
    /// the plug/unplug schedule.
    void end_round();

private:
    ContextVector context_now() const;

    DeviceProfile profile_;
    double battery_;
    bool plugged_;
    bool ever_sampled_ = false;
    int walk_round_ = -1;
    int current_round_ = 0;
    double ram_load_ = 0.0;
    double cpu_load_ = 0.0;
    ContextVector last_context_{};
};

std::vector<DeviceProfile> load_fleet(const std::string& path);
void save_fleet(const std::vector<DeviceProfile>& fleet, const std::string& path);

/// Four-device roster mirroring the hardware table: two fast twins (one aged),
/// one slow old device, one mid device.
std::vector<DeviceProfile> make_default_fleet(uint64_t seed);

/// Golden-trajectory dump: per (round, device) context fields and true costs.
void write_fleet_trace(const std::vector<DeviceProfile>& fleet, int rounds, const std::string& path);

} // namespace fledge
