#include "fledge/checkpoint.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "fledge/errors.hpp"

namespace fledge {

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'L', 'C', 'K'};
constexpr uint8_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const uint8_t* data, size_t len) : data_(data), len_(len) {}

    uint8_t u8() { return need(1), data_[pos_++]; }

    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_]) | static_cast<uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() {
        uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    size_t pos() const { return pos_; }

private:
    void need(size_t n) const {
        if (pos_ + n > len_) throw IoError("checkpoint truncated");
    }
    const uint8_t* data_;
    size_t len_;
    size_t pos_ = 0;
};

} // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t c = seed ^ 0xffffffffu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

void save_checkpoint(const Checkpoint& c) {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), kMagic.begin(), kMagic.end());
    buf.push_back(kVersion);
    put_u32(buf, c.round_index);
    put_u32(buf, static_cast<uint32_t>(c.weights.tensor_count()));
    for (const auto& spec : c.weights.manifest()) {
        if (spec.node_name.size() > 0xffff) throw IoError("tensor name too long");
        put_u16(buf, static_cast<uint16_t>(spec.node_name.size()));
        buf.insert(buf.end(), spec.node_name.begin(), spec.node_name.end());
        buf.push_back(static_cast<uint8_t>(spec.shape.size()));
        for (size_t d : spec.shape) put_u32(buf, static_cast<uint32_t>(d));
    }
    for (size_t i = 0; i < c.weights.tensor_count(); ++i) {
        for (float f : c.weights.tensor(i)) put_f32(buf, f);
    }
    put_u32(buf, crc32(buf.data(), buf.size()));

    const std::string tmp = c.path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, c.path, ec);
    if (ec) throw IoError("rename '" + tmp + "' -> '" + c.path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint '" + path + "' not found");
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < kMagic.size() + 1 + 4 + 4 + 4) throw IoError("checkpoint truncated");
    if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
        throw IoError("'" + path + "' is not a checkpoint file");
    }
    uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= static_cast<uint32_t>(buf[buf.size() - 4 + i]) << (8 * i);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc) {
        throw IoError("checkpoint '" + path + "' failed checksum (partial write?)");
    }

    Reader r(buf.data(), buf.size() - 4);
    r.str(kMagic.size());
    if (r.u8() != kVersion) throw IoError("unsupported checkpoint version");
    Checkpoint c;
    c.path = path;
    c.round_index = r.u32();
    uint32_t count = r.u32();
    std::vector<TensorSpec> manifest;
    manifest.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        TensorSpec spec;
        spec.node_name = r.str(r.u16());
        uint8_t rank = r.u8();
        for (uint8_t k = 0; k < rank; ++k) spec.shape.push_back(r.u32());
        manifest.push_back(std::move(spec));
    }
    for (const auto& spec : manifest) {
        std::vector<float> values(spec.element_count());
        for (auto& v : values) v = r.f32();
        c.weights.add(spec.node_name, spec.shape, std::move(values));
    }
    return c;
}

} // namespace fledge
