#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

struct CorruptFile final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IncompatibleVersion final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnreadablePath final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 64-bit FNV-1a. Stable across runs and platforms; used for file
// checksums and input digests.
class Fnv64 {
  public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint32_t fnv1a32(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::uint64_t file_digest(const std::filesystem::path& path);

// Little-endian binary writer that tracks a running FNV-1a checksum of
// everything written. finish() appends the checksum as the last 8 bytes.
class BinaryWriter {
  public:
    explicit BinaryWriter(const std::filesystem::path& path);

    void bytes(const void* data, std::size_t n);
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v);
    void f64(double v);
    void str(std::string_view s);  // u32 length + bytes
    void f32_span(std::span<const float> v);
    void finish();

  private:
    std::ofstream out_;
    Fnv64 sum_;
    bool finished_ = false;
};

// Counterpart reader. Loads the whole file, verifies the trailing
// checksum up front, then decodes. Throws CorruptFile on truncation or
// checksum mismatch.
class BinaryReader {
  public:
    explicit BinaryReader(const std::filesystem::path& path);

    void bytes(void* data, std::size_t n);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32();
    double f64();
    std::string str();
    void f32_span(std::span<float> out);
    bool at_end() const { return pos_ == payload_size_; }

  private:
    std::string buf_;
    std::size_t pos_ = 0;
    std::size_t payload_size_ = 0;
};

}  // namespace radar
