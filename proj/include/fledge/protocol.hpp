#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fledge/device.hpp"
#include "fledge/tensor.hpp"

namespace fledge {

constexpr int kProtocolVersion = 1;

/// The three round-trip RPCs, as request/response frame types.
enum class MsgType : uint8_t {
    ContextRequest = 1,        // CommunicatedText
    ContextResponse = 2,
    GlobalWeightsRequest = 3,  // GetGlobalWeights
    GlobalWeightsResponse = 4,
    UpdateRequest = 5,         // GetFLWeights
    UpdateResponse = 6,
};

bool msg_type_registered(uint8_t raw);

/// Untyped frame content: a JSON header plus an optional raw float payload.
/// Weight payloads deliberately carry no shape information.
struct RpcMessage {
    MsgType type = MsgType::ContextRequest;
    nlohmann::json header = nlohmann::json::object();
    std::vector<float> weights;

    bool operator==(const RpcMessage& other) const {
        return type == other.type && header == other.header && weights == other.weights;
    }
};

/// Frame layout: [u32 BE length][u8 type][u32 LE json_len][json utf-8]
///               [u32 LE weight_count][f32 LE x count]
/// where length counts everything after the length field itself.
std::vector<uint8_t> encode_frame(const RpcMessage& m);

/// Total decode over one complete frame (length prefix included): returns the
/// message or throws a ProtocolError subclass. Never crashes on garbage.
RpcMessage decode_frame(const uint8_t* data, size_t len);
RpcMessage decode_frame(const std::vector<uint8_t>& bytes);

// --- typed views ----------------------------------------------------------

enum class Directive { Wait, Selected, RoundSkipped };
enum class UpdateStatus { Pending, Ready, Voided };

std::string to_string(Directive d);
std::string to_string(UpdateStatus s);

struct ContextRequestMsg {
    int protocol_version = kProtocolVersion;
    int client_id = 0;
    int round = 0;
    ContextVector context;
    long n_samples = 0;
    std::string status_text;

    RpcMessage to_message() const;
    static ContextRequestMsg from_message(const RpcMessage& m);
};

struct ContextResponseMsg {
    int client_id = 0;
    int round = 0;
    Directive directive = Directive::Wait;
    int epochs = 0;
    int batch_size = 0;

    RpcMessage to_message() const;
    static ContextResponseMsg from_message(const RpcMessage& m);
};

struct GlobalWeightsRequestMsg {
    int client_id = 0;
    int round = 0;

    RpcMessage to_message() const;
    static GlobalWeightsRequestMsg from_message(const RpcMessage& m);
};

struct GlobalWeightsResponseMsg {
    int client_id = 0;
    int round = 0;
    std::vector<TensorSpec> manifest; // travels once per round, here only
    FlatWeights weights;

    RpcMessage to_message() const;
    static GlobalWeightsResponseMsg from_message(const RpcMessage& m);
};

struct UpdateRequestMsg {
    int client_id = 0;
    int round = 0;
    bool poll = false; // true: asking again for the aggregate, no re-upload
    double wer = 0.0;
    long n_samples = 0;
    double batch_time_observed_s = 0.0;
    double battery_drop_observed_pct = 0.0;
    FlatWeights weights;

    RpcMessage to_message() const;
    static UpdateRequestMsg from_message(const RpcMessage& m);
};

struct UpdateResponseMsg {
    int client_id = 0;
    int round = 0;
    UpdateStatus status = UpdateStatus::Pending;
    FlatWeights weights; // filled when Ready

    RpcMessage to_message() const;
    static UpdateResponseMsg from_message(const RpcMessage& m);
};

} // namespace fledge
