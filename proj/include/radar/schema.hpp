#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

struct SchemaError final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vocabulary-reduction table: every non-alphanumeric symbol and several
// character classes collapse to a reserved token. The table is data, not
// code — serialized as a tab-separated text file so experiments can swap
// it without rebuilding:
//
//   schema-version: 1
//   # symbol or @class <TAB> token
//   :\tcolon
//   @char\tchr        (single non-numeric character)
//   @int\tnum         (decimal integer literal)
//   @hex8\thex        (>=8 chars, all hex digits, at least one digit)
//   @byte\tbin        (run of control or non-ASCII bytes)
//
// Reserved tokens are validated on load to be fixed points of
// abstract_text, which makes the mapping idempotent.
class AbstractionSchema {
  public:
    static AbstractionSchema builtin();
    static AbstractionSchema load(const std::filesystem::path& path);
    static AbstractionSchema parse(std::string_view text);

    void save(const std::filesystem::path& path) const;
    std::string serialize() const;

    int version() const { return version_; }
    const std::string& chr_token() const { return chr_token_; }
    const std::string& num_token() const { return num_token_; }
    const std::string& hex_token() const { return hex_token_; }
    const std::string& byte_token() const { return byte_token_; }

    // Token for a printable symbol; falls back to the single-character
    // class when the symbol has no entry of its own.
    const std::string& symbol_token(char c) const;
    bool has_symbol(char c) const;

  private:
    AbstractionSchema() = default;
    void validate() const;

    int version_ = 0;
    std::array<std::string, 128> symbol_map_{};
    std::string chr_token_;
    std::string num_token_;
    std::string hex_token_;
    std::string byte_token_;
};

// Splits lowercased text on whitespace and symbol boundaries and maps
// every piece through the schema. Alphanumeric words of two or more
// characters pass through unless they are integer or hex-blob literals.
std::vector<std::string> abstract_text(std::string_view text,
                                       const AbstractionSchema& schema);

}  // namespace radar
