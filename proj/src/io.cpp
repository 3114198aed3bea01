#include "radar/io.hpp"

#include <bit>
#include <cstring>

namespace radar {

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        if constexpr (sizeof(T) == 4) {
            return static_cast<T>(__builtin_bswap32(static_cast<std::uint32_t>(v)));
        } else {
            return static_cast<T>(__builtin_bswap64(static_cast<std::uint64_t>(v)));
        }
    } else {
        return v;
    }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    Fnv64 h;
    h.update(bytes);
    return h.digest();
}

std::uint32_t fnv1a32(std::string_view bytes) {
    std::uint32_t state = 0x811c9dc5u;
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 16777619u;
    }
    return state;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UnreadablePath("cannot open " + path.string());
    }
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw UnreadablePath("read error on " + path.string());
    }
    return buf;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UnreadablePath("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw UnreadablePath("write error on " + path.string());
    }
}

std::uint64_t file_digest(const std::filesystem::path& path) {
    return fnv1a64(read_file(path));
}

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw UnreadablePath("cannot open " + path.string() + " for writing");
    }
}

void BinaryWriter::bytes(const void* data, std::size_t n) {
    sum_.update(data, n);
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) {
        throw UnreadablePath("write error");
    }
}

void BinaryWriter::u8(std::uint8_t v) { bytes(&v, 1); }

void BinaryWriter::u32(std::uint32_t v) {
    v = to_le(v);
    bytes(&v, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
    v = to_le(v);
    bytes(&v, 8);
}

void BinaryWriter::f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
}

void BinaryWriter::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
}

void BinaryWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
}

void BinaryWriter::f32_span(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
        bytes(v.data(), v.size() * sizeof(float));
    } else {
        for (float x : v) {
            f32(x);
        }
    }
}

void BinaryWriter::finish() {
    if (finished_) {
        return;
    }
    finished_ = true;
    std::uint64_t d = to_le(sum_.digest());
    out_.write(reinterpret_cast<const char*>(&d), 8);
    out_.flush();
    if (!out_) {
        throw UnreadablePath("write error while finishing file");
    }
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : buf_(read_file(path)) {
    if (buf_.size() < 8) {
        throw CorruptFile(path.string() + ": truncated (no checksum)");
    }
    payload_size_ = buf_.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + payload_size_, 8);
    stored = to_le(stored);
    std::uint64_t actual =
        fnv1a64(std::string_view(buf_.data(), payload_size_));
    if (stored != actual) {
        throw CorruptFile(path.string() + ": checksum mismatch");
    }
}

void BinaryReader::bytes(void* data, std::size_t n) {
    if (pos_ + n > payload_size_) {
        throw CorruptFile("unexpected end of file");
    }
    std::memcpy(data, buf_.data() + pos_, n);
    pos_ += n;
}

std::uint8_t BinaryReader::u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
}

std::uint32_t BinaryReader::u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return to_le(v);
}

std::uint64_t BinaryReader::u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return to_le(v);
}

float BinaryReader::f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double BinaryReader::f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string BinaryReader::str() {
    std::uint32_t n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
}

void BinaryReader::f32_span(std::span<float> out) {
    if constexpr (std::endian::native == std::endian::little) {
        bytes(out.data(), out.size() * sizeof(float));
    } else {
        for (float& x : out) {
            x = f32();
        }
    }
}

}  // namespace radar
