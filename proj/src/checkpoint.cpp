#include "lfpo/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace lfpo::ckpt {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'P', 'O'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw CorruptCheckpoint("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data),
                static_cast<uInt>(len)));
}

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& c) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(c.config_text.size()));
    out.insert(out.end(), c.config_text.begin(), c.config_text.end());
    put_u64(out, c.params.size());
    for (double p : c.params) put_f64(out, p);
    if (c.optimizer) {
        out.push_back(1);
        put_u64(out, c.optimizer->step);
        for (double m : c.optimizer->m) put_f64(out, m);
        for (double v : c.optimizer->v) put_f64(out, v);
    } else {
        out.push_back(0);
    }
    put_u32(out, crc_of(out.data(), out.size()));
    return out;
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 + 4 + 4 + 8 + 1 + 4) {
        throw CorruptCheckpoint("truncated checkpoint");
    }
    const std::uint32_t stored_crc =
        std::uint32_t(bytes[bytes.size() - 4]) |
        std::uint32_t(bytes[bytes.size() - 3]) << 8 |
        std::uint32_t(bytes[bytes.size() - 2]) << 16 |
        std::uint32_t(bytes[bytes.size() - 1]) << 24;
    if (crc_of(bytes.data(), bytes.size() - 4) != stored_crc) {
        throw CorruptCheckpoint("CRC mismatch");
    }

    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw CorruptCheckpoint("bad magic");
    }
    r.pos = 4;
    if (r.u32() != kFormatVersion) {
        throw CorruptCheckpoint("unsupported format version");
    }
    Checkpoint c;
    const std::uint32_t cfg_len = r.u32();
    r.need(cfg_len);
    c.config_text.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                         bytes.begin() +
                             static_cast<std::ptrdiff_t>(r.pos + cfg_len));
    r.pos += cfg_len;
    const std::uint64_t count = r.u64();
    c.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) c.params[i] = r.f64();
    if (r.u8() == 1) {
        train::OptimizerState state(count);
        state.step = r.u64();
        for (std::uint64_t i = 0; i < count; ++i) state.m[i] = r.f64();
        for (std::uint64_t i = 0; i < count; ++i) state.v[i] = r.f64();
        c.optimizer = std::move(state);
    }
    return c;
}

void write_file(const std::string& path, const Checkpoint& c) {
    const std::vector<std::uint8_t> bytes = serialize(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace lfpo::ckpt
