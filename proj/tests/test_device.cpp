#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fledge/device.hpp"

using namespace fledge;

TEST_SUITE_BEGIN("device");

namespace {

DeviceProfile flat_profile() {
    DeviceProfile p;
    p.device_id = 0;
    p.base_batch_time_s = 100.0;
    p.base_battery_drop_pct = 2.0;
    p.age_factor = 1.0;
    p.total_ram_gb = 8.0;
    p.ram_sensitivity = 0.0;
    p.cpu_sensitivity = 0.0;
    p.noise_sigma = 0.0;
    p.ram_walk_step = 0.0;
    p.cpu_walk_step = 0.0;
    p.base_cpu_pct = 0.0;
    p.rng_seed = 1;
    return p;
}

ContextVector ideal_context(const DeviceProfile& p) {
    ContextVector c;
    c.total_ram_gb = p.total_ram_gb;
    c.available_ram_gb = p.total_ram_gb;
    c.battery_pct = 100.0;
    c.battery_status = 0;
    c.cpu_usage_pct = 0.0;
    c.benchmark_score = p.benchmark_score;
    return c;
}

} // namespace

TEST_CASE("true_cost: all factors at one gives the base batch time exactly") {
    DeviceProfile p = flat_profile();
    p.ram_sensitivity = 0.3;
    p.cpu_sensitivity = 0.5;
    CostSample s = true_cost(p, ideal_context(p), 1.0);
    CHECK(s.batch_time_s == doctest::Approx(100.0));
    CHECK(s.battery_drop_pct == doctest::Approx(2.0));
}

TEST_CASE("true_cost: low battery multiplies time by the full penalty") {
    DeviceProfile p = flat_profile();
    p.low_battery_penalty = 2.4; // slow old phone
    ContextVector low = ideal_context(p);
    low.battery_pct = 15.0;
    ContextVector high = ideal_context(p);
    high.battery_pct = 80.0;
    double ratio = true_cost(p, low).batch_time_s / true_cost(p, high).batch_time_s;
    CHECK(ratio == doctest::Approx(2.4));
}

TEST_CASE("true_cost: monotone in AR, CI, AC and age") {
    DeviceProfile p = flat_profile();
    p.ram_sensitivity = 0.4;
    p.cpu_sensitivity = 0.5;
    p.low_battery_penalty = 2.0;

    ContextVector c = ideal_context(p);
    double prev = true_cost(p, c).batch_time_s;
    for (double ar = 7.0; ar >= 1.0; ar -= 1.0) {
        c.available_ram_gb = ar;
        double now = true_cost(p, c).batch_time_s;
        CHECK(now > prev); // halving AR strictly increases time
        prev = now;
    }

    c = ideal_context(p);
    prev = true_cost(p, c).batch_time_s;
    for (double ci = 10.0; ci <= 100.0; ci += 10.0) {
        c.cpu_usage_pct = ci;
        double now = true_cost(p, c).batch_time_s;
        CHECK(now >= prev);
        prev = now;
    }

    c = ideal_context(p);
    prev = true_cost(p, c).batch_time_s;
    for (double ac = 19.0; ac >= 5.0; ac -= 1.0) {
        c.battery_pct = ac;
        double now = true_cost(p, c).batch_time_s;
        CHECK(now >= prev);
        prev = now;
    }

    DeviceProfile young = flat_profile();
    DeviceProfile old = flat_profile();
    old.age_factor = 2.0;
    CHECK(true_cost(old, ideal_context(old)).battery_drop_pct >
          true_cost(young, ideal_context(young)).battery_drop_pct);
}

TEST_CASE("sample_context: static fields, deterministic, dead device unavailable") {
    DeviceProfile p = flat_profile();
    p.total_ram_gb = 6.0;
    p.initial_battery_pct = 80.0;
    p.ram_walk_step = 0.03;
    p.cpu_walk_step = 2.0;
    p.base_cpu_pct = 5.0;
    p.rng_seed = 77;

    DeviceSimulator sim(p);
    auto ctx = sim.sample_context(0);
    REQUIRE(ctx.has_value());
    CHECK(ctx->total_ram_gb == doctest::Approx(6.0));
    CHECK(ctx->battery_pct == doctest::Approx(80.0));
    // no background apps yet: AR near TR * 0.6, CI low
    CHECK(ctx->available_ram_gb == doctest::Approx(6.0 * 0.6).epsilon(0.05));
    CHECK(ctx->cpu_usage_pct <= 10.0);

    // same seed and t on a fresh simulator: identical context
    DeviceSimulator sim2(p);
    auto again = sim2.sample_context(0);
    CHECK(again->available_ram_gb == ctx->available_ram_gb);
    CHECK(again->cpu_usage_pct == ctx->cpu_usage_pct);

    // repeated query at the same t is stable
    auto repeat = sim.sample_context(0);
    CHECK(repeat->available_ram_gb == ctx->available_ram_gb);

    DeviceProfile dead = flat_profile();
    dead.initial_battery_pct = 0.0;
    DeviceSimulator dead_sim(dead);
    CHECK(!dead_sim.sample_context(0).has_value());
}

TEST_CASE("step_training: zero batches is a no-op") {
    DeviceSimulator sim(flat_profile());
    sim.sample_context(0);
    StepResult r = sim.step_training(0);
    CHECK(r.elapsed_s == 0.0);
    CHECK(r.completed_batches == 0);
    CHECK(!r.died);
    CHECK(sim.battery_pct() == doctest::Approx(100.0));
}

TEST_CASE("step_training: drains to the floor and dies mid-run") {
    DeviceProfile p = flat_profile(); // drop 2 per batch
    p.initial_battery_pct = 5.0;
    DeviceSimulator sim(p);
    sim.sample_context(0);
    StepResult r = sim.step_training(10);
    CHECK(r.died);
    CHECK(r.completed_batches == 2); // 5 -> 3 -> 1 -> dead in batch 3
    CHECK(sim.battery_pct() == doctest::Approx(0.0));
    // every batch runs inside the low-battery band (default penalty 2.0),
    // so each costs 200 s; the fatal third batch is half-run
    CHECK(r.elapsed_s == doctest::Approx(2.5 * 200.0));
    CHECK(!sim.alive());
    CHECK(!sim.sample_context(1).has_value());
}

TEST_CASE("step_training: charging device never loses charge") {
    DeviceProfile p = flat_profile();
    p.initially_plugged = true;
    p.charging_offset = 1.0;
    p.initial_battery_pct = 50.0;
    p.recharge_per_round = 10.0;
    DeviceSimulator sim(p);
    sim.sample_context(0);
    StepResult r = sim.step_training(20);
    CHECK(!r.died);
    CHECK(sim.battery_pct() == doctest::Approx(50.0));
    sim.end_round();
    CHECK(sim.battery_pct() == doctest::Approx(60.0));
}

TEST_CASE("battery stays within [0, 100] under arbitrary schedules") {
    DeviceProfile p = flat_profile();
    p.initial_battery_pct = 30.0;
    p.plug_in_below = 15.0;
    p.unplug_above = 90.0;
    p.recharge_per_round = 40.0;
    DeviceSimulator sim(p);
    for (int t = 0; t < 50 && sim.alive(); ++t) {
        sim.sample_context(t);
        sim.step_training(t % 4);
        CHECK(sim.battery_pct() >= 0.0);
        CHECK(sim.battery_pct() <= 100.0);
        sim.end_round();
        CHECK(sim.battery_pct() <= 100.0);
    }
}

TEST_CASE("full trajectory is bit-reproducible for a fixed profile") {
    DeviceProfile p = flat_profile();
    p.noise_sigma = 0.05;
    p.ram_walk_step = 0.04;
    p.cpu_walk_step = 3.0;
    p.rng_seed = 31;

    auto trace = [&](DeviceProfile prof) {
        DeviceSimulator sim(prof);
        std::vector<double> vals;
        for (int t = 0; t < 12; ++t) {
            auto c = sim.sample_context(t);
            if (!c) break;
            vals.push_back(c->available_ram_gb);
            vals.push_back(c->cpu_usage_pct);
            StepResult r = sim.step_training(3);
            vals.push_back(r.elapsed_s);
            vals.push_back(sim.battery_pct());
            sim.end_round();
        }
        return vals;
    };
    CHECK(trace(p) == trace(p));
}

TEST_CASE("default fleet: the slow old profile has the largest RAM-induced jump") {
    auto fleet = make_default_fleet(3);
    REQUIRE(fleet.size() == 4);
    double worst_jump = -1.0;
    int worst_id = -1;
    for (const auto& p : fleet) {
        ContextVector fast = ideal_context(p);
        fast.available_ram_gb = 0.9 * p.total_ram_gb;
        ContextVector slow = ideal_context(p);
        slow.available_ram_gb = 0.35 * p.total_ram_gb;
        double jump = true_cost(p, slow).batch_time_s - true_cost(p, fast).batch_time_s;
        if (jump > worst_jump) {
            worst_jump = jump;
            worst_id = p.device_id;
        }
    }
    CHECK(worst_id == 2); // the aged slow device
}

TEST_CASE("fleet file roundtrip") {
    auto fleet = make_default_fleet(17);
    auto dir = std::filesystem::temp_directory_path() / "fledge_fleet_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "fleet.json").string();
    save_fleet(fleet, path);
    auto loaded = load_fleet(path);
    REQUIRE(loaded.size() == fleet.size());
    for (size_t i = 0; i < fleet.size(); ++i) {
        CHECK(loaded[i].device_id == fleet[i].device_id);
        CHECK(loaded[i].base_batch_time_s == doctest::Approx(fleet[i].base_batch_time_s));
        CHECK(loaded[i].age_factor == doctest::Approx(fleet[i].age_factor));
        CHECK(loaded[i].rng_seed == fleet[i].rng_seed);
        CHECK(loaded[i].dialect == doctest::Approx(fleet[i].dialect));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("trace dump writes one row per live device per round") {
    auto fleet = make_default_fleet(5);
    auto dir = std::filesystem::temp_directory_path() / "fledge_trace_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "trace.csv").string();
    write_fleet_trace(fleet, 3, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 3 * 4);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
