#include "svdprune/npy.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include "svdprune/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "NPY payload handling assumes a little-endian host");

namespace svdprune {
namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kMaxHeaderLen = 1u << 20;

struct Header {
    Precision precision = Precision::Double;
    bool fortran_order = false;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

Precision parse_descr(const std::string& descr, const std::filesystem::path& path) {
    // '=' means native order, which this build asserts to be little-endian.
    if (descr == "<f4" || descr == "=f4") return Precision::Single;
    if (descr == "<f8" || descr == "=f8") return Precision::Double;
    throw DtypeError(path.string() + ": dtype '" + descr +
                     "' is not a supported little-endian float (<f4 or <f8)");
}

Header parse_header(const std::string& text, const std::filesystem::path& path) {
    Header h;

    std::smatch m;
    static const std::regex descr_re{R"('descr'\s*:\s*'([^']*)')"};
    static const std::regex order_re{R"('fortran_order'\s*:\s*(True|False))"};
    static const std::regex shape_re{R"('shape'\s*:\s*\(([^)]*)\))"};

    if (!std::regex_search(text, m, descr_re))
        throw FormatError(path.string() + ": header has no 'descr' entry");
    h.precision = parse_descr(m[1].str(), path);

    if (!std::regex_search(text, m, order_re))
        throw FormatError(path.string() + ": header has no 'fortran_order' entry");
    h.fortran_order = m[1].str() == "True";

    if (!std::regex_search(text, m, shape_re))
        throw FormatError(path.string() + ": header has no 'shape' entry");
    const std::string inner = m[1].str();

    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos < inner.size()) {
        while (pos < inner.size() && (inner[pos] == ' ' || inner[pos] == ',')) ++pos;
        if (pos >= inner.size()) break;
        std::size_t end = pos;
        while (end < inner.size() && inner[end] >= '0' && inner[end] <= '9') ++end;
        if (end == pos)
            throw FormatError(path.string() + ": malformed shape tuple '(" + inner + ")'");
        dims.push_back(std::stoull(inner.substr(pos, end - pos)));
        pos = end;
    }
    if (dims.size() != 2)
        throw ShapeError(path.string() + ": expected a rank-2 array, got rank " +
                         std::to_string(dims.size()));
    if (dims[0] < 1 || dims[1] < 1)
        throw ShapeError(path.string() + ": empty axis in shape (" + std::to_string(dims[0]) +
                         ", " + std::to_string(dims[1]) + ")");
    h.rows = dims[0];
    h.cols = dims[1];
    return h;
}

} // namespace

FeatureMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");

    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw FormatError(path.string() + ": not an NPY file (bad magic)");

    const unsigned major = static_cast<unsigned char>(bytes[6]);
    const unsigned minor = static_cast<unsigned char>(bytes[7]);
    std::size_t header_len = 0;
    std::size_t data_offset = 0;
    if (major == 1 && minor == 0) {
        std::uint16_t len16;
        std::memcpy(&len16, bytes.data() + 8, 2);
        header_len = len16;
        data_offset = 10 + header_len;
    } else if (major == 2 && minor == 0) {
        if (bytes.size() < 12) throw FormatError(path.string() + ": truncated v2.0 preamble");
        std::uint32_t len32;
        std::memcpy(&len32, bytes.data() + 8, 4);
        header_len = len32;
        data_offset = 12 + header_len;
    } else {
        throw FormatError(path.string() + ": unsupported NPY version " + std::to_string(major) +
                          "." + std::to_string(minor));
    }
    if (header_len > kMaxHeaderLen || bytes.size() < data_offset)
        throw FormatError(path.string() + ": truncated header");

    const std::string header_text(bytes.data() + data_offset - header_len, header_len);
    const Header h = parse_header(header_text, path);

    const std::size_t itemsize = h.precision == Precision::Single ? 4 : 8;
    if (h.rows > SIZE_MAX / h.cols || h.rows * h.cols > SIZE_MAX / itemsize)
        throw FormatError(path.string() + ": shape overflows addressable size");
    const std::size_t count = h.rows * h.cols;
    if (bytes.size() - data_offset != count * itemsize)
        throw FormatError(path.string() + ": payload is " +
                          std::to_string(bytes.size() - data_offset) + " bytes, expected " +
                          std::to_string(count * itemsize));

    FeatureMatrix out;
    out.rows = h.rows;
    out.cols = h.cols;
    out.precision = h.precision;
    out.data.resize(count);

    const char* payload = bytes.data() + data_offset;
    // Storage index of logical element (i, j): i*D + j in C order, j*T + i in
    // Fortran order; either way the result is normalized to row-major.
    for (std::size_t i = 0; i < h.rows; ++i) {
        for (std::size_t j = 0; j < h.cols; ++j) {
            const std::size_t src = h.fortran_order ? j * h.rows + i : i * h.cols + j;
            double v;
            if (h.precision == Precision::Single) {
                float f;
                std::memcpy(&f, payload + src * 4, 4);
                v = static_cast<double>(f);
            } else {
                std::memcpy(&v, payload + src * 8, 8);
            }
            out.data[i * h.cols + j] = v;
        }
    }

    for (std::size_t idx = 0; idx < count; ++idx) {
        if (!std::isfinite(out.data[idx])) {
            throw DataError(path.string() + ": non-finite value at (" +
                            std::to_string(idx / h.cols) + ", " + std::to_string(idx % h.cols) +
                            ")");
        }
    }
    return out;
}

void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    m.validate();

    const bool single = m.precision == Precision::Single;
    std::string header = "{'descr': '";
    header += single ? "<f4" : "<f8";
    header += "', 'fortran_order': False, 'shape': (";
    header += std::to_string(m.rows) + ", " + std::to_string(m.cols) + "), }";
    // v1.0 preamble is 10 bytes; pad with spaces so the payload starts on a
    // 16-byte boundary, newline last.
    const std::size_t unpadded = 10 + header.size() + 1;
    const std::size_t padded = (unpadded + 15) / 16 * 16;
    header.append(padded - unpadded, ' ');
    header += '\n';
    if (header.size() > 0xFFFF) throw FormatError("header too long for NPY v1.0");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    out.write(kMagic, sizeof kMagic);
    out.put('\x01');
    out.put('\x00');
    const std::uint16_t len16 = static_cast<std::uint16_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len16), 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    if (single) {
        std::vector<float> buf(m.data.size());
        for (std::size_t i = 0; i < m.data.size(); ++i) buf[i] = static_cast<float>(m.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * 4));
    } else {
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * 8));
    }
    out.flush();
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

} // namespace svdprune
