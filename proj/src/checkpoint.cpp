#include "spnf/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace spnf::nn {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'N', 'F'};

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    b[0] = char(v & 0xff);
    b[1] = char((v >> 8) & 0xff);
    b[2] = char((v >> 16) & 0xff);
    b[3] = char((v >> 24) & 0xff);
    buf.append(b, 4);
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = char((bits >> (8 * i)) & 0xff);
    buf.append(b, 8);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw TruncatedFile("checkpoint: unexpected end of file in " + path);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | std::uint8_t(buf[pos + i]);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i)
            bits = (bits << 8) | std::uint8_t(buf[pos + i]);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<TensorRecord>& records) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kCheckpointVersion);
    for (const TensorRecord& r : records) {
        put_u32(buf, std::uint32_t(r.name.size()));
        buf.append(r.name);
        put_u32(buf, std::uint32_t(r.shape.size()));
        std::size_t numel = 1;
        for (std::size_t d : r.shape) {
            put_u32(buf, std::uint32_t(d));
            numel *= d;
        }
        if (numel != r.data.size())
            throw ShapeMismatch("checkpoint: record '" + r.name + "' shape " +
                                shape_str(r.shape) + " vs " + std::to_string(r.data.size()) +
                                " values");
        for (double v : r.data)
            put_f64(buf, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("checkpoint: cannot open " + path + " for writing");
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out)
        throw IoError("checkpoint: write failed for " + path);
}

std::vector<TensorRecord> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw BadMagic("checkpoint: bad magic in " + path);
    r.pos = 4;
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version) +
                      " in " + path);
    std::vector<TensorRecord> records;
    while (r.pos < buf.size()) {
        TensorRecord rec;
        std::uint32_t name_len = r.u32();
        rec.name = r.bytes(name_len);
        std::uint32_t rank = r.u32();
        std::size_t numel = 1;
        rec.shape.resize(rank);
        for (std::uint32_t i = 0; i < rank; ++i) {
            rec.shape[i] = r.u32();
            numel *= rec.shape[i];
        }
        rec.data.resize(numel);
        for (std::size_t i = 0; i < numel; ++i)
            rec.data[i] = r.f64();
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace spnf::nn
