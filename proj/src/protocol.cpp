#include "fledge/protocol.hpp"

#include <cstring>

#include "fledge/errors.hpp"

namespace fledge {

using nlohmann::json;

bool msg_type_registered(uint8_t raw) {
    return raw >= static_cast<uint8_t>(MsgType::ContextRequest) &&
           raw <= static_cast<uint8_t>(MsgType::UpdateResponse);
}

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u32_le(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32_be(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

uint32_t get_u32_le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

} // namespace

std::vector<uint8_t> encode_frame(const RpcMessage& m) {
    const std::string header = m.header.dump();
    const uint32_t body_len = static_cast<uint32_t>(1 + 4 + header.size() + 4 + 4 * m.weights.size());
    std::vector<uint8_t> out;
    out.reserve(4 + body_len);
    put_u32_be(out, body_len);
    out.push_back(static_cast<uint8_t>(m.type));
    put_u32_le(out, static_cast<uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    put_u32_le(out, static_cast<uint32_t>(m.weights.size()));
    for (float f : m.weights) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32_le(out, bits);
    }
    return out;
}

RpcMessage decode_frame(const uint8_t* data, size_t len) {
    if (len < 4) throw FramingError("frame shorter than its length prefix");
    const uint32_t body_len = get_u32_be(data);
    if (static_cast<size_t>(body_len) + 4 > len) {
        throw FramingError("length field exceeds available bytes");
    }
    if (static_cast<size_t>(body_len) + 4 < len) {
        throw FramingError("trailing bytes after frame body");
    }
    if (body_len < 1 + 4) throw FramingError("frame body too short for type and header length");

    const uint8_t* body = data + 4;
    const uint8_t raw_type = body[0];
    if (!msg_type_registered(raw_type)) {
        throw ProtocolError("unknown message type " + std::to_string(raw_type));
    }

    size_t pos = 1;
    const uint32_t json_len = get_u32_le(body + pos);
    pos += 4;
    if (pos + json_len > body_len) throw PayloadError("header length exceeds frame body");
    json header;
    try {
        header = json::parse(body + pos, body + pos + json_len);
    } catch (const json::exception& e) {
        throw PayloadError(std::string("header is not valid JSON: ") + e.what());
    }
    pos += json_len;

    if (pos + 4 > body_len) throw PayloadError("missing weight count");
    const uint32_t count = get_u32_le(body + pos);
    pos += 4;
    if (count > (body_len - pos) / 4) throw PayloadError("weight count exceeds frame body");
    if (pos + 4ull * count != body_len) throw PayloadError("weight payload length mismatch");

    RpcMessage m;
    m.type = static_cast<MsgType>(raw_type);
    m.header = std::move(header);
    m.weights.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t bits = get_u32_le(body + pos + 4ull * i);
        std::memcpy(&m.weights[i], &bits, 4);
    }
    return m;
}

RpcMessage decode_frame(const std::vector<uint8_t>& bytes) {
    return decode_frame(bytes.data(), bytes.size());
}

namespace {

void require_type(const RpcMessage& m, MsgType expected, const char* name) {
    if (m.type != expected) {
        throw ProtocolError(std::string("expected ") + name + " frame, got type " +
                            std::to_string(static_cast<int>(m.type)));
    }
}

template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw PayloadError(std::string("bad or missing field '") + key + "': " + e.what());
    }
}

json context_to_json(const ContextVector& c) {
    return json{{"TR", c.total_ram_gb}, {"AR", c.available_ram_gb}, {"AC", c.battery_pct},
                {"BS", c.battery_status}, {"CI", c.cpu_usage_pct}, {"PI", c.benchmark_score}};
}

ContextVector context_from_json(const json& j) {
    ContextVector c;
    c.total_ram_gb = field<double>(j, "TR");
    c.available_ram_gb = field<double>(j, "AR");
    c.battery_pct = field<double>(j, "AC");
    c.battery_status = field<int>(j, "BS");
    c.cpu_usage_pct = field<double>(j, "CI");
    c.benchmark_score = field<double>(j, "PI");
    return c;
}

} // namespace

std::string to_string(Directive d) {
    switch (d) {
        case Directive::Wait: return "WAIT";
        case Directive::Selected: return "SELECTED";
        case Directive::RoundSkipped: return "ROUND_SKIPPED";
    }
    return "?";
}

std::string to_string(UpdateStatus s) {
    switch (s) {
        case UpdateStatus::Pending: return "PENDING";
        case UpdateStatus::Ready: return "READY";
        case UpdateStatus::Voided: return "VOIDED";
    }
    return "?";
}

namespace {

Directive directive_from_string(const std::string& s) {
    if (s == "WAIT") return Directive::Wait;
    if (s == "SELECTED") return Directive::Selected;
    if (s == "ROUND_SKIPPED") return Directive::RoundSkipped;
    throw PayloadError("unknown directive '" + s + "'");
}

UpdateStatus status_from_string(const std::string& s) {
    if (s == "PENDING") return UpdateStatus::Pending;
    if (s == "READY") return UpdateStatus::Ready;
    if (s == "VOIDED") return UpdateStatus::Voided;
    throw PayloadError("unknown update status '" + s + "'");
}

} // namespace

RpcMessage ContextRequestMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::ContextRequest;
    m.header = json{{"protocol_version", protocol_version}, {"client_id", client_id},
                    {"round", round},  {"context", context_to_json(context)},
                    {"n_samples", n_samples}, {"status", status_text}};
    return m;
}

ContextRequestMsg ContextRequestMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::ContextRequest, "ContextRequest");
    ContextRequestMsg out;
    out.protocol_version = field<int>(m.header, "protocol_version");
    if (out.protocol_version != kProtocolVersion) {
        throw ProtocolError("unsupported protocol version " + std::to_string(out.protocol_version));
    }
    out.client_id = field<int>(m.header, "client_id");
    out.round = field<int>(m.header, "round");
    out.context = context_from_json(m.header.contains("context") ? m.header.at("context") : json{});
    out.n_samples = field<long>(m.header, "n_samples");
    out.status_text = m.header.value("status", std::string{});
    return out;
}

RpcMessage ContextResponseMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::ContextResponse;
    m.header = json{{"client_id", client_id}, {"round", round},
                    {"directive", to_string(directive)}, {"epochs", epochs},
                    {"batch_size", batch_size}};
    return m;
}

ContextResponseMsg ContextResponseMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::ContextResponse, "ContextResponse");
    ContextResponseMsg out;
    out.client_id = field<int>(m.header, "client_id");
    out.round = field<int>(m.header, "round");
    out.directive = directive_from_string(field<std::string>(m.header, "directive"));
    out.epochs = m.header.value("epochs", 0);
    out.batch_size = m.header.value("batch_size", 0);
    return out;
}

RpcMessage GlobalWeightsRequestMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::GlobalWeightsRequest;
    m.header = json{{"client_id", client_id}, {"round", round}};
    return m;
}

GlobalWeightsRequestMsg GlobalWeightsRequestMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::GlobalWeightsRequest, "GlobalWeightsRequest");
    return {field<int>(m.header, "client_id"), field<int>(m.header, "round")};
}

RpcMessage GlobalWeightsResponseMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::GlobalWeightsResponse;
    json manifest_json = json::array();
    for (const auto& spec : manifest) {
        manifest_json.push_back({{"name", spec.node_name}, {"shape", spec.shape}});
    }
    m.header = json{{"client_id", client_id}, {"round", round}, {"manifest", manifest_json}};
    m.weights = weights.values;
    return m;
}

GlobalWeightsResponseMsg GlobalWeightsResponseMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::GlobalWeightsResponse, "GlobalWeightsResponse");
    GlobalWeightsResponseMsg out;
    out.client_id = field<int>(m.header, "client_id");
    out.round = field<int>(m.header, "round");
    if (!m.header.contains("manifest") || !m.header.at("manifest").is_array()) {
        throw PayloadError("missing manifest");
    }
    for (const auto& item : m.header.at("manifest")) {
        TensorSpec spec;
        spec.node_name = field<std::string>(item, "name");
        spec.shape = field<std::vector<size_t>>(item, "shape");
        out.manifest.push_back(std::move(spec));
    }
    out.weights.values = m.weights;
    return out;
}

RpcMessage UpdateRequestMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::UpdateRequest;
    m.header = json{{"client_id", client_id}, {"round", round}, {"poll", poll},
                    {"wer", wer}, {"n_samples", n_samples},
                    {"batch_time_observed_s", batch_time_observed_s},
                    {"battery_drop_observed_pct", battery_drop_observed_pct}};
    m.weights = weights.values;
    return m;
}

UpdateRequestMsg UpdateRequestMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::UpdateRequest, "UpdateRequest");
    UpdateRequestMsg out;
    out.client_id = field<int>(m.header, "client_id");
    out.round = field<int>(m.header, "round");
    out.poll = m.header.value("poll", false);
    out.wer = m.header.value("wer", 0.0);
    out.n_samples = m.header.value("n_samples", 0L);
    out.batch_time_observed_s = m.header.value("batch_time_observed_s", 0.0);
    out.battery_drop_observed_pct = m.header.value("battery_drop_observed_pct", 0.0);
    out.weights.values = m.weights;
    return out;
}

RpcMessage UpdateResponseMsg::to_message() const {
    RpcMessage m;
    m.type = MsgType::UpdateResponse;
    m.header = json{{"client_id", client_id}, {"round", round}, {"status", to_string(status)}};
    m.weights = weights.values;
    return m;
}

UpdateResponseMsg UpdateResponseMsg::from_message(const RpcMessage& m) {
    require_type(m, MsgType::UpdateResponse, "UpdateResponse");
    UpdateResponseMsg out;
    out.client_id = field<int>(m.header, "client_id");
    out.round = field<int>(m.header, "round");
    out.status = status_from_string(field<std::string>(m.header, "status"));
    out.weights.values = m.weights;
    return out;
}

} // namespace fledge
