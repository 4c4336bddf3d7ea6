#include "doctest.h"

#include <string>

#include "fledge/errors.hpp"
#include "fledge/protocol.hpp"
#include "fledge/rng.hpp"

using namespace fledge;

TEST_SUITE_BEGIN("protocol");

namespace {

ContextVector sample_context() {
    ContextVector c;
    c.total_ram_gb = 8.0;
    c.available_ram_gb = 4.25;
    c.battery_pct = 63.5;
    c.battery_status = 1;
    c.cpu_usage_pct = 17.0;
    c.benchmark_score = 712345.0;
    return c;
}

RpcMessage random_message(rng::Engine& eng) {
    RpcMessage m;
    m.type = static_cast<MsgType>(1 + eng.uniform_index(6));
    m.header = nlohmann::json::object();
    m.header["client_id"] = static_cast<int>(eng.uniform_index(100));
    m.header["round"] = static_cast<int>(eng.uniform_index(1000));
    m.header["x"] = eng.uniform(-1e6, 1e6);
    if (eng.uniform() < 0.5) {
        m.header["nested"] = {{"a", eng.uniform()}, {"b", "text-" + std::to_string(eng.next_u64() % 97)}};
    }
    size_t count = eng.uniform_index(20);
    m.weights.resize(count);
    for (auto& w : m.weights) w = static_cast<float>(eng.normal() * 10.0);
    return m;
}

template <typename Err>
bool throws_exactly(const std::vector<uint8_t>& bytes) {
    try {
        decode_frame(bytes);
    } catch (const Err&) {
        return true;
    } catch (...) {
        return false;
    }
    return false;
}

} // namespace

TEST_CASE("typed messages roundtrip through the codec") {
    ContextRequestMsg ctx;
    ctx.client_id = 3;
    ctx.round = 12;
    ctx.context = sample_context();
    ctx.n_samples = 25;
    ctx.status_text = "ready";
    auto ctx2 = ContextRequestMsg::from_message(decode_frame(encode_frame(ctx.to_message())));
    CHECK(ctx2.client_id == 3);
    CHECK(ctx2.round == 12);
    CHECK(ctx2.n_samples == 25);
    CHECK(ctx2.context.battery_pct == doctest::Approx(63.5));
    CHECK(ctx2.context.battery_status == 1);

    ContextResponseMsg dir;
    dir.client_id = 3;
    dir.round = 12;
    dir.directive = Directive::Selected;
    dir.epochs = 4;
    dir.batch_size = 5;
    auto dir2 = ContextResponseMsg::from_message(decode_frame(encode_frame(dir.to_message())));
    CHECK(dir2.directive == Directive::Selected);
    CHECK(dir2.epochs == 4);

    GlobalWeightsResponseMsg gw;
    gw.client_id = 3;
    gw.round = 12;
    gw.manifest = {{"hidden/kernel", {2, 8}}, {"hidden/bias", {8}}};
    gw.weights.values = {1.0f, -2.5f, 3.25f};
    auto gw2 = GlobalWeightsResponseMsg::from_message(decode_frame(encode_frame(gw.to_message())));
    CHECK(gw2.manifest.size() == 2);
    CHECK(gw2.manifest[0].node_name == "hidden/kernel");
    CHECK(gw2.manifest[0].shape == std::vector<size_t>{2, 8});
    CHECK(gw2.weights.values == gw.weights.values);

    UpdateRequestMsg up;
    up.client_id = 3;
    up.round = 12;
    up.wer = 0.125;
    up.n_samples = 25;
    up.batch_time_observed_s = 431.9375;
    up.battery_drop_observed_pct = 1.72;
    up.weights.values = {0.5f, 0.25f};
    auto up2 = UpdateRequestMsg::from_message(decode_frame(encode_frame(up.to_message())));
    CHECK(up2.batch_time_observed_s == up.batch_time_observed_s); // doubles survive JSON exactly
    CHECK(up2.wer == up.wer);
    CHECK(up2.weights.values == up.weights.values);

    UpdateResponseMsg resp;
    resp.client_id = 3;
    resp.round = 12;
    resp.status = UpdateStatus::Ready;
    resp.weights.values = {9.0f};
    auto resp2 = UpdateResponseMsg::from_message(decode_frame(encode_frame(resp.to_message())));
    CHECK(resp2.status == UpdateStatus::Ready);
    CHECK(resp2.weights.values == resp.weights.values);
}

TEST_CASE("codec identity over random messages") {
    rng::Engine eng(rng::derive(1, {rng::kFuzz}));
    for (int i = 0; i < 20000; ++i) {
        RpcMessage m = random_message(eng);
        CHECK(decode_frame(encode_frame(m)) == m);
    }
}

TEST_CASE("weights payload: raw floats with a count, no shape anywhere") {
    UpdateRequestMsg up;
    up.client_id = 1;
    up.round = 0;
    up.weights.values = {1.0f, 2.0f, 3.0f};
    RpcMessage m = up.to_message();
    std::vector<uint8_t> bytes = encode_frame(m);

    // 3-float payload occupies exactly 4 (count) + 12 (floats) trailing bytes
    std::string header = m.header.dump();
    CHECK(bytes.size() == 4 + 1 + 4 + header.size() + 4 + 12);

    // privacy: no shape-bearing field accompanies an update's weights
    CHECK(header.find("shape") == std::string::npos);
    CHECK(header.find("manifest") == std::string::npos);
}

TEST_CASE("framing errors: truncation and oversized length fields") {
    RpcMessage m;
    m.type = MsgType::ContextResponse;
    m.header = {{"client_id", 1}, {"round", 0}, {"directive", "WAIT"}};
    std::vector<uint8_t> bytes = encode_frame(m);

    // length field larger than the remainder of the stream
    std::vector<uint8_t> inflated = bytes;
    inflated[3] += 4;
    CHECK(throws_exactly<FramingError>(inflated));

    // stream cut short
    std::vector<uint8_t> truncated(bytes.begin(), bytes.end() - 3);
    CHECK(throws_exactly<FramingError>(truncated));

    std::vector<uint8_t> tiny = {0x00, 0x00};
    CHECK(throws_exactly<FramingError>(tiny));
}

TEST_CASE("unknown message type is a protocol error") {
    RpcMessage m;
    m.type = MsgType::ContextRequest;
    m.header = {{"k", 1}};
    std::vector<uint8_t> bytes = encode_frame(m);
    bytes[4] = 99; // type byte lives right after the length prefix
    try {
        decode_frame(bytes);
        FAIL("expected a protocol error");
    } catch (const FramingError&) {
        FAIL("framing error is the wrong category here");
    } catch (const PayloadError&) {
        FAIL("payload error is the wrong category here");
    } catch (const ProtocolError&) {
        // expected
    }
}

TEST_CASE("weight count mismatch is a payload error") {
    RpcMessage m;
    m.type = MsgType::UpdateResponse;
    m.header = {{"client_id", 1}, {"round", 0}, {"status", "READY"}};
    m.weights = {1.0f, 2.0f};
    std::vector<uint8_t> bytes = encode_frame(m);
    // the count field sits 4 bytes before the float payload (8 trailing bytes)
    size_t count_pos = bytes.size() - 8 - 4;
    bytes[count_pos] = 7;
    CHECK(throws_exactly<PayloadError>(bytes));
}

TEST_CASE("decode is total: fuzzed inputs never escape the typed errors") {
    rng::Engine eng(rng::derive(2, {rng::kFuzz}));
    int decoded = 0, rejected = 0;
    for (int i = 0; i < 20000; ++i) {
        std::vector<uint8_t> bytes;
        if (eng.uniform() < 0.5) {
            size_t len = eng.uniform_index(120);
            bytes.resize(len);
            for (auto& b : bytes) b = static_cast<uint8_t>(eng.next_u64() & 0xff);
        } else {
            RpcMessage m = random_message(eng);
            bytes = encode_frame(m);
            size_t flips = 1 + eng.uniform_index(4);
            for (size_t f = 0; f < flips && !bytes.empty(); ++f) {
                bytes[eng.uniform_index(bytes.size())] ^= static_cast<uint8_t>(1 + (eng.next_u64() & 0xff));
            }
        }
        try {
            decode_frame(bytes);
            ++decoded;
        } catch (const ProtocolError&) {
            ++rejected;
        }
        // anything else propagates and fails the test
    }
    CHECK(rejected > 0);
    CHECK(decoded + rejected == 20000);
}

TEST_CASE("context request enforces the protocol version") {
    ContextRequestMsg ctx;
    ctx.client_id = 1;
    RpcMessage m = ctx.to_message();
    m.header["protocol_version"] = 9;
    CHECK_THROWS_AS(ContextRequestMsg::from_message(m), ProtocolError);
}

TEST_SUITE_END();
