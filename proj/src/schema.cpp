#include "radar/schema.hpp"

#include <cctype>
#include <sstream>

#include "radar/io.hpp"

namespace radar {

namespace {

constexpr std::string_view kBuiltinSchema =
    "schema-version: 1\n"
    "# symbol mappings\n"
    "!\texcl\n"
    "\"\tquote\n"
    "#\thash\n"
    "$\tdollar\n"
    "%\tpct\n"
    "&\tamp\n"
    "'\tapos\n"
    "(\tlparen\n"
    ")\trparen\n"
    "*\tstar\n"
    "+\tplus\n"
    ",\tcomma\n"
    "-\tdash\n"
    ".\tdot\n"
    "/\tslash\n"
    ":\tcolon\n"
    ";\tsemi\n"
    "<\tlt\n"
    "=\tequals\n"
    ">\tgt\n"
    "?\tquest\n"
    "@\tat\n"
    "[\tlbracket\n"
    "\\\tbackslash\n"
    "]\trbracket\n"
    "^\tcaret\n"
    "_\tunder\n"
    "`\tbacktick\n"
    "{\tlbrace\n"
    "|\tpipe\n"
    "}\trbrace\n"
    "~\ttilde\n"
    "# character classes\n"
    "@char\tchr\n"
    "@int\tnum\n"
    "@hex8\thex\n"
    "@byte\tbin\n";

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
}

bool is_space_char(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
           c == '\f';
}

bool is_hex_char(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

// Classifies one lowercased alphanumeric run.
void emit_word(std::string&& word, const AbstractionSchema& schema,
               std::vector<std::string>& out) {
    bool all_digits = true;
    bool all_hex = true;
    bool has_digit = false;
    for (char c : word) {
        if (c < '0' || c > '9') {
            all_digits = false;
        } else {
            has_digit = true;
        }
        if (!is_hex_char(c)) {
            all_hex = false;
        }
    }
    if (all_digits) {
        out.push_back(schema.num_token());
    } else if (word.size() >= 8 && all_hex && has_digit) {
        out.push_back(schema.hex_token());
    } else if (word.size() == 1) {
        out.push_back(schema.chr_token());
    } else {
        out.push_back(std::move(word));
    }
}

}  // namespace

AbstractionSchema AbstractionSchema::builtin() {
    return parse(kBuiltinSchema);
}

AbstractionSchema AbstractionSchema::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

AbstractionSchema AbstractionSchema::parse(std::string_view text) {
    AbstractionSchema schema;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_version = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!have_version) {
            constexpr std::string_view prefix = "schema-version:";
            if (line.rfind(prefix, 0) != 0) {
                throw SchemaError("schema line 1: expected 'schema-version: N'");
            }
            schema.version_ = std::stoi(line.substr(prefix.size()));
            have_version = true;
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw SchemaError("schema line " + std::to_string(line_no) +
                              ": expected 'input<TAB>token'");
        }
        std::string input = line.substr(0, tab);
        std::string token = line.substr(tab + 1);
        if (input == "@char") {
            schema.chr_token_ = token;
        } else if (input == "@int") {
            schema.num_token_ = token;
        } else if (input == "@hex8") {
            schema.hex_token_ = token;
        } else if (input == "@byte") {
            schema.byte_token_ = token;
        } else if (input.size() == 1 &&
                   static_cast<unsigned char>(input[0]) < 128) {
            schema.symbol_map_[static_cast<unsigned char>(input[0])] = token;
        } else {
            throw SchemaError("schema line " + std::to_string(line_no) +
                              ": unknown input '" + input + "'");
        }
    }
    if (!have_version) {
        throw SchemaError("schema has no 'schema-version:' line");
    }
    schema.validate();
    return schema;
}

void AbstractionSchema::validate() const {
    if (chr_token_.empty() || num_token_.empty() || hex_token_.empty() ||
        byte_token_.empty()) {
        throw SchemaError("schema must map @char, @int, @hex8, and @byte");
    }
    auto check = [this](const std::string& token) {
        // Reserved tokens must be fixed points so that re-applying the
        // schema changes nothing.
        std::vector<std::string> round = abstract_text(token, *this);
        if (round.size() != 1 || round[0] != token) {
            throw SchemaError("reserved token '" + token +
                              "' is not a fixed point of the schema");
        }
    };
    check(chr_token_);
    check(num_token_);
    check(hex_token_);
    check(byte_token_);
    for (const std::string& t : symbol_map_) {
        if (!t.empty()) {
            check(t);
        }
    }
}

void AbstractionSchema::save(const std::filesystem::path& path) const {
    write_file(path, serialize());
}

std::string AbstractionSchema::serialize() const {
    std::string out = "schema-version: " + std::to_string(version_) + "\n";
    for (std::size_t c = 0; c < symbol_map_.size(); ++c) {
        if (!symbol_map_[c].empty()) {
            out.push_back(static_cast<char>(c));
            out.push_back('\t');
            out += symbol_map_[c];
            out.push_back('\n');
        }
    }
    out += "@char\t" + chr_token_ + "\n";
    out += "@int\t" + num_token_ + "\n";
    out += "@hex8\t" + hex_token_ + "\n";
    out += "@byte\t" + byte_token_ + "\n";
    return out;
}

const std::string& AbstractionSchema::symbol_token(char c) const {
    const std::string& t = symbol_map_[static_cast<unsigned char>(c) & 0x7f];
    return t.empty() ? chr_token_ : t;
}

bool AbstractionSchema::has_symbol(char c) const {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 128 && !symbol_map_[u].empty();
}

std::vector<std::string> abstract_text(std::string_view text,
                                       const AbstractionSchema& schema) {
    std::vector<std::string> out;
    std::string word;
    bool in_binary_run = false;

    auto flush_word = [&] {
        if (!word.empty()) {
            emit_word(std::move(word), schema, out);
            word.clear();
        }
    };

    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (c >= 128 || (c < 0x20 && !is_space_char(raw)) || c == 0x7f) {
            // Collapse each run of non-text bytes into one token.
            flush_word();
            if (!in_binary_run) {
                out.push_back(schema.byte_token());
                in_binary_run = true;
            }
            continue;
        }
        in_binary_run = false;
        if (is_word_char(raw)) {
            word.push_back(raw >= 'A' && raw <= 'Z'
                               ? static_cast<char>(raw - 'A' + 'a')
                               : raw);
            continue;
        }
        flush_word();
        if (is_space_char(raw)) {
            continue;
        }
        out.push_back(schema.symbol_token(raw));
    }
    flush_word();
    return out;
}

}  // namespace radar
