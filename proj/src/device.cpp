#include "fledge/device.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "fledge/errors.hpp"
#include "fledge/rng.hpp"

namespace fledge {

using nlohmann::json;

double ram_factor(const DeviceProfile& p, double ar_over_tr) {
    double r = std::clamp(ar_over_tr, 0.0, 1.0);
    return 1.0 + p.ram_sensitivity * (1.0 - r);
}

double battery_factor(const DeviceProfile& p, double battery_pct) {
    if (battery_pct >= p.battery_threshold) return 1.0;
    if (battery_pct <= p.penalty_full_at) return p.low_battery_penalty;
    double span = p.battery_threshold - p.penalty_full_at;
    double frac = (p.battery_threshold - battery_pct) / span;
    return 1.0 + (p.low_battery_penalty - 1.0) * frac;
}

double cpu_factor(const DeviceProfile& p, double cpu_usage_pct) {
    return 1.0 + p.cpu_sensitivity * std::clamp(cpu_usage_pct, 0.0, 100.0) / 100.0;
}

CostSample true_cost(const DeviceProfile& p, const ContextVector& c, double noise_mult) {
    CostSample s;
    double r = p.total_ram_gb > 0 ? c.available_ram_gb / p.total_ram_gb : 1.0;
    s.batch_time_s = p.base_batch_time_s * p.age_factor * ram_factor(p, r) *
                     battery_factor(p, c.battery_pct) * cpu_factor(p, c.cpu_usage_pct) * noise_mult;
    s.battery_drop_pct = p.base_battery_drop_pct * p.age_factor *
                         (1.0 - static_cast<double>(c.battery_status) * p.charging_offset);
    if (s.battery_drop_pct < 0.0) s.battery_drop_pct = 0.0;
    return s;
}

DeviceSimulator::DeviceSimulator(DeviceProfile p)
    : profile_(std::move(p)),
      battery_(profile_.initial_battery_pct),
      plugged_(profile_.initially_plugged) {}

ContextVector DeviceSimulator::context_now() const {
    ContextVector c;
    c.total_ram_gb = profile_.total_ram_gb;
    double free_frac = std::clamp(profile_.base_free_ram_frac - ram_load_, 0.05, 1.0);
    c.available_ram_gb = profile_.total_ram_gb * free_frac;
    c.battery_pct = battery_;
    c.battery_status = plugged_ ? 1 : 0;
    c.cpu_usage_pct = std::clamp(profile_.base_cpu_pct + cpu_load_, 0.0, 100.0);
    c.benchmark_score = profile_.benchmark_score;
    return c;
}

std::optional<ContextVector> DeviceSimulator::sample_context(int t) {
    if (!alive()) return std::nullopt;
    while (walk_round_ < t) {
        ++walk_round_;
        auto eng = rng::make_engine(profile_.rng_seed,
                                    {rng::kContextWalk, static_cast<uint64_t>(walk_round_)});
        ram_load_ = std::clamp(ram_load_ + eng.uniform(-1.0, 1.0) * profile_.ram_walk_step,
                               0.0, profile_.ram_load_max);
        cpu_load_ = std::clamp(cpu_load_ + eng.uniform(-1.0, 1.0) * profile_.cpu_walk_step,
                               0.0, profile_.cpu_load_max);
    }
    current_round_ = t;
    last_context_ = context_now();
    ever_sampled_ = true;
    return last_context_;
}

StepResult DeviceSimulator::step_training(int batches) {
    StepResult result;
    result.battery_after = battery_;
    if (batches <= 0) return result;
    for (int b = 0; b < batches; ++b) {
        if (!alive()) {
            result.died = true;
            break;
        }
        ContextVector c = context_now(); // AC tracks the drain batch by batch
        if (ever_sampled_) {
            c.available_ram_gb = last_context_.available_ram_gb;
            c.cpu_usage_pct = last_context_.cpu_usage_pct;
        }
        double noise = profile_.noise_sigma > 0.0
                           ? rng::make_engine(profile_.rng_seed,
                                              {rng::kCostNoise, static_cast<uint64_t>(current_round_),
                                               static_cast<uint64_t>(b)})
                                 .lognormal(profile_.noise_sigma)
                           : 1.0;
        CostSample cost = true_cost(profile_, c, noise);
        if (cost.battery_drop_pct > 0.0 && battery_ - cost.battery_drop_pct <= 0.0) {
            double frac = std::min(1.0, battery_ / cost.battery_drop_pct);
            result.elapsed_s += cost.batch_time_s * frac;
            if (frac >= 1.0) ++result.completed_batches;
            battery_ = 0.0;
            result.died = true;
            break;
        }
        battery_ -= cost.battery_drop_pct;
        result.elapsed_s += cost.batch_time_s;
        ++result.completed_batches;
    }
    result.battery_after = battery_;
    return result;
}

CostSample DeviceSimulator::noiseless_cost() const {
    ContextVector c = ever_sampled_ ? last_context_ : context_now();
    c.battery_pct = battery_;
    return true_cost(profile_, c, 1.0);
}

void DeviceSimulator::end_round() {
    if (!alive()) return;
    if (plugged_ && profile_.recharge_per_round > 0.0) {
        battery_ = std::min(100.0, battery_ + profile_.recharge_per_round);
    }
    if (!plugged_ && profile_.plug_in_below >= 0.0 && battery_ <= profile_.plug_in_below) {
        plugged_ = true;
    } else if (plugged_ && battery_ >= profile_.unplug_above) {
        plugged_ = false;
    }
}

namespace {

void profile_to_json(json& j, const DeviceProfile& p) {
    j = json{{"device_id", p.device_id},
             {"name", p.name},
             {"base_batch_time_s", p.base_batch_time_s},
             {"base_battery_drop_pct", p.base_battery_drop_pct},
             {"age_factor", p.age_factor},
             {"total_ram_gb", p.total_ram_gb},
             {"benchmark_score", p.benchmark_score},
             {"initial_battery_pct", p.initial_battery_pct},
             {"initially_plugged", p.initially_plugged},
             {"plug_in_below", p.plug_in_below},
             {"unplug_above", p.unplug_above},
             {"recharge_per_round", p.recharge_per_round},
             {"charging_offset", p.charging_offset},
             {"ram_sensitivity", p.ram_sensitivity},
             {"cpu_sensitivity", p.cpu_sensitivity},
             {"low_battery_penalty", p.low_battery_penalty},
             {"battery_threshold", p.battery_threshold},
             {"penalty_full_at", p.penalty_full_at},
             {"noise_sigma", p.noise_sigma},
             {"base_free_ram_frac", p.base_free_ram_frac},
             {"base_cpu_pct", p.base_cpu_pct},
             {"ram_walk_step", p.ram_walk_step},
             {"cpu_walk_step", p.cpu_walk_step},
             {"ram_load_max", p.ram_load_max},
             {"cpu_load_max", p.cpu_load_max},
             {"rng_seed", p.rng_seed},
             {"dialect", p.dialect},
             {"n_train", p.n_train},
             {"n_val", p.n_val},
             {"pinned_time_s", p.pinned_time_s},
             {"pinned_drop_pct", p.pinned_drop_pct}};
}

DeviceProfile profile_from_json(const json& j) {
    DeviceProfile p;
    p.device_id = j.at("device_id").get<int>();
    p.name = j.value("name", std::string{});
    p.base_batch_time_s = j.at("base_batch_time_s").get<double>();
    p.base_battery_drop_pct = j.at("base_battery_drop_pct").get<double>();
    p.age_factor = j.value("age_factor", 1.0);
    p.total_ram_gb = j.value("total_ram_gb", 8.0);
    p.benchmark_score = j.value("benchmark_score", 500000.0);
    p.initial_battery_pct = j.value("initial_battery_pct", 100.0);
    p.initially_plugged = j.value("initially_plugged", false);
    p.plug_in_below = j.value("plug_in_below", -1.0);
    p.unplug_above = j.value("unplug_above", 101.0);
    p.recharge_per_round = j.value("recharge_per_round", 0.0);
    p.charging_offset = j.value("charging_offset", 1.0);
    p.ram_sensitivity = j.value("ram_sensitivity", 0.3);
    p.cpu_sensitivity = j.value("cpu_sensitivity", 0.5);
    p.low_battery_penalty = j.value("low_battery_penalty", 2.0);
    p.battery_threshold = j.value("battery_threshold", 20.0);
    p.penalty_full_at = j.value("penalty_full_at", 15.0);
    p.noise_sigma = j.value("noise_sigma", 0.02);
    p.base_free_ram_frac = j.value("base_free_ram_frac", 0.6);
    p.base_cpu_pct = j.value("base_cpu_pct", 10.0);
    p.ram_walk_step = j.value("ram_walk_step", 0.05);
    p.cpu_walk_step = j.value("cpu_walk_step", 5.0);
    p.ram_load_max = j.value("ram_load_max", 0.45);
    p.cpu_load_max = j.value("cpu_load_max", 55.0);
    p.rng_seed = j.value("rng_seed", uint64_t{0});
    p.dialect = j.value("dialect", 0.0);
    p.n_train = j.value("n_train", 25);
    p.n_val = j.value("n_val", 10);
    p.pinned_time_s = j.value("pinned_time_s", -1.0);
    p.pinned_drop_pct = j.value("pinned_drop_pct", -1.0);
    return p;
}

} // namespace

std::vector<DeviceProfile> load_fleet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fleet file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("fleet file '" + path + "': " + e.what());
    }
    std::vector<DeviceProfile> fleet;
    for (const auto& item : j.at("devices")) fleet.push_back(profile_from_json(item));
    return fleet;
}

void save_fleet(const std::vector<DeviceProfile>& fleet, const std::string& path) {
    json devices = json::array();
    for (const auto& p : fleet) {
        json j;
        profile_to_json(j, p);
        devices.push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write fleet file '" + path + "'");
    out << json{{"devices", devices}}.dump(2) << "\n";
}

std::vector<DeviceProfile> make_default_fleet(uint64_t seed) {
    std::vector<DeviceProfile> fleet(4);

    fleet[0].device_id = 0;
    fleet[0].name = "fast-1";
    fleet[0].base_batch_time_s = 130.0;
    fleet[0].base_battery_drop_pct = 1.6;
    fleet[0].age_factor = 1.0;
    fleet[0].total_ram_gb = 8.0;
    fleet[0].benchmark_score = 710000.0;
    fleet[0].ram_sensitivity = 0.25;
    fleet[0].low_battery_penalty = 1.8;

    // Same hardware as fast-1 but heavily used: only the age differs, so a
    // shared reward model cannot tell the two apart from context alone.
    fleet[1] = fleet[0];
    fleet[1].device_id = 1;
    fleet[1].name = "fast-2-aged";
    fleet[1].age_factor = 1.6;

    fleet[2].device_id = 2;
    fleet[2].name = "slow-old";
    fleet[2].base_batch_time_s = 180.0;
    fleet[2].base_battery_drop_pct = 1.0;
    fleet[2].age_factor = 2.4;
    fleet[2].total_ram_gb = 6.0;
    fleet[2].benchmark_score = 280000.0;
    fleet[2].ram_sensitivity = 0.40;
    fleet[2].low_battery_penalty = 2.4;

    fleet[3].device_id = 3;
    fleet[3].name = "mid";
    fleet[3].base_batch_time_s = 194.0;
    fleet[3].base_battery_drop_pct = 1.8;
    fleet[3].age_factor = 1.2;
    fleet[3].total_ram_gb = 8.0;
    fleet[3].benchmark_score = 390000.0;
    fleet[3].ram_sensitivity = 0.30;
    fleet[3].low_battery_penalty = 2.0;

    const double dialects[4] = {0.0, 0.5, 1.1, 1.7};
    for (int i = 0; i < 4; ++i) {
        fleet[i].plug_in_below = 18.0;
        fleet[i].unplug_above = 85.0;
        fleet[i].recharge_per_round = 20.0;
        fleet[i].rng_seed = rng::derive(seed, {static_cast<uint64_t>(i + 1)});
        fleet[i].dialect = dialects[i];
    }
    return fleet;
}

void write_fleet_trace(const std::vector<DeviceProfile>& fleet, int rounds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file '" + path + "'");
    out << "round,device,total_ram_gb,available_ram_gb,battery_pct,battery_status,"
           "cpu_usage_pct,benchmark_score,batch_time_s,battery_drop_pct\n";
    std::vector<DeviceSimulator> sims;
    sims.reserve(fleet.size());
    for (const auto& p : fleet) sims.emplace_back(p);
    char line[512];
    for (int t = 0; t < rounds; ++t) {
        for (auto& sim : sims) {
            auto ctx = sim.sample_context(t);
            if (!ctx) continue;
            CostSample cost = true_cost(sim.profile(), *ctx, 1.0);
            std::snprintf(line, sizeof(line), "%d,%d,%.6g,%.6g,%.6g,%d,%.6g,%.6g,%.6g,%.6g\n", t,
                          sim.profile().device_id, ctx->total_ram_gb, ctx->available_ram_gb,
                          ctx->battery_pct, ctx->battery_status, ctx->cpu_usage_pct,
                          ctx->benchmark_score, cost.batch_time_s, cost.battery_drop_pct);
            out << line;
            sim.end_round();
        }
    }
}

} // namespace fledge
