#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <atomic>
#include <functional>
#include <string>
#include <string_view>
#include <thread>

#include "wsdist/io.hpp"

static_assert(std::endian::native == std::endian::little, "NPY IO assumes a little-endian host");

namespace wsdist::io {

namespace {

constexpr std::string_view magic = "\x93NUMPY";
constexpr std::size_t preamble = 10; // magic + version + HEADER_LEN

[[noreturn]] void parse_error(std::size_t offset, const std::string& what) {
    fail(ErrorCode::parse, "npy: " + what + " at byte " + std::to_string(offset));
}

// Minimal reader for the Python dict literal in the NPY header.
class HeaderParser {
public:
    HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

    void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
        bool have_descr = false, have_order = false, have_shape = false;
        expect('{');
        for (;;) {
            skip_ws();
            if (peek() == '}') {
                ++pos_;
                break;
            }
            const std::string key = string_literal();
            expect(':');
            if (key == "descr") {
                descr = string_literal();
                have_descr = true;
            } else if (key == "fortran_order") {
                fortran = boolean();
                have_order = true;
            } else if (key == "shape") {
                shape = tuple();
                have_shape = true;
            } else {
                error("unexpected header key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            break;
        }
        skip_ws();
        if (pos_ != text_.size()) error("trailing characters after header dict");
        if (!have_descr || !have_order || !have_shape) error("header lacks descr, fortran_order or shape");
    }

private:
    [[noreturn]] void error(const std::string& what) const { parse_error(base_ + pos_, what); }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) error(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string string_literal() {
        skip_ws();
        const char quote = peek();
        if (quote != '\'' && quote != '"') error("expected string literal");
        const std::size_t start = ++pos_;
        while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
        if (pos_ >= text_.size()) error("unterminated string literal");
        return std::string(text_.substr(start, pos_++ - start));
    }

    bool boolean() {
        skip_ws();
        if (text_.substr(pos_, 4) == "True") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "False") {
            pos_ += 5;
            return false;
        }
        error("expected True or False");
    }

    std::vector<std::size_t> tuple() {
        expect('(');
        std::vector<std::size_t> out;
        for (;;) {
            skip_ws();
            if (peek() == ')') {
                ++pos_;
                return out;
            }
            if (!std::isdigit(static_cast<unsigned char>(peek()))) error("expected dimension");
            std::size_t v = 0;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                v = v * 10 + static_cast<std::size_t>(peek() - '0');
                ++pos_;
            }
            out.push_back(v);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ')') {
                error("expected ',' or ')' in shape");
            }
        }
    }

    std::string_view text_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

DType dtype_from_descr(const std::string& d, std::size_t offset) {
    if (d == "<f4") return DType::float32;
    if (d == "<i4") return DType::int32;
    if (d == "|u1" || d == "<u1") return DType::uint8;
    if (!d.empty() && d[0] == '>') fail(ErrorCode::unsupported, "npy: big-endian data ('" + d + "') is not supported");
    fail(ErrorCode::unsupported, "npy: unsupported dtype '" + d + "' at byte " + std::to_string(offset));
}

} // namespace

std::size_t item_size(DType t) noexcept {
    switch (t) {
    case DType::float32: return 4;
    case DType::int32: return 4;
    case DType::uint8: return 1;
    }
    return 0;
}

const char* descr(DType t) noexcept {
    switch (t) {
    case DType::float32: return "<f4";
    case DType::int32: return "<i4";
    case DType::uint8: return "|u1";
    }
    return "";
}

std::size_t NpyArray::count() const noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

NpyArray parse_npy(std::span<const std::byte> bytes) {
    if (bytes.size() < magic.size() ||
        std::memcmp(bytes.data(), magic.data(), magic.size()) != 0)
        parse_error(0, "missing \\x93NUMPY magic");
    if (bytes.size() < preamble) parse_error(bytes.size(), "truncated preamble");
    const auto major = static_cast<unsigned>(bytes[6]);
    const auto minor = static_cast<unsigned>(bytes[7]);
    if (major != 1 || minor != 0)
        fail(ErrorCode::unsupported, "npy: format version " + std::to_string(major) + "." +
                                         std::to_string(minor) + " is not supported (only 1.0)");
    const std::size_t header_len =
        static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    if (bytes.size() < preamble + header_len) parse_error(bytes.size(), "truncated header");
    std::string_view header(reinterpret_cast<const char*>(bytes.data()) + preamble, header_len);

    std::string d;
    bool fortran = false;
    NpyArray out;
    HeaderParser(header, preamble).parse(d, fortran, out.shape);
    out.dtype = dtype_from_descr(d, preamble);
    if (fortran) fail(ErrorCode::unsupported, "npy: Fortran-order arrays are not supported");

    const std::size_t expected = out.count() * item_size(out.dtype);
    const std::size_t data_start = preamble + header_len;
    if (bytes.size() - data_start != expected)
        parse_error(data_start, "payload holds " + std::to_string(bytes.size() - data_start) +
                                    " bytes, shape requires " + std::to_string(expected));
    out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_start), bytes.end());
    return out;
}

std::vector<std::byte> encode_npy(const NpyArray& array) {
    if (array.payload.size() != array.count() * item_size(array.dtype))
        fail(ErrorCode::shape_mismatch, "npy: payload size does not match shape");
    std::string header = "{'descr': '";
    header += descr(array.dtype);
    header += "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < array.shape.size(); ++i) {
        header += std::to_string(array.shape[i]);
        if (array.shape.size() == 1 || i + 1 < array.shape.size()) header += ",";
        if (i + 1 < array.shape.size()) header += " ";
    }
    header += "), }";
    // Pad with spaces so the payload starts on a 64-byte boundary.
    const std::size_t unpadded = preamble + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header += '\n';
    if (header.size() > 0xffff) fail(ErrorCode::invalid_argument, "npy: header too long for format 1.0");

    std::vector<std::byte> out;
    out.reserve(preamble + header.size() + array.payload.size());
    for (char c : magic) out.push_back(static_cast<std::byte>(c));
    out.push_back(std::byte{1});
    out.push_back(std::byte{0});
    out.push_back(static_cast<std::byte>(header.size() & 0xff));
    out.push_back(static_cast<std::byte>(header.size() >> 8));
    for (char c : header) out.push_back(static_cast<std::byte>(c));
    out.insert(out.end(), array.payload.begin(), array.payload.end());
    return out;
}

NpyArray read_npy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_npy(std::as_bytes(std::span<const char>(raw)));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_npy(const NpyArray& array, const std::filesystem::path& path) {
    const auto bytes = encode_npy(array);
    write_file_atomic(path, bytes);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xffff) + "." +
           std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::io, "cannot move output into place at " + path.string());
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

} // namespace wsdist::io
