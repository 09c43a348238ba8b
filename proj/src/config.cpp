#include "sticky/config.hpp"

#include "sticky/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace sticky {

namespace {

constexpr std::array kKnownKeys = {
    "model", "d",     "eta",       "sigma",  "K",       "theta",      "Sigma",     "kappa2",
    "theta2", "sigma2", "nu",       "scheme", "time_mode", "N",         "h",         "h_list",
    "T",     "x0",    "n_paths",   "seed",   "functional", "reference", "workers",
};
constexpr std::array kQueuingKeys = {"d", "eta", "sigma"};
constexpr std::array kOuKeys = {"K", "theta", "Sigma", "kappa2", "theta2", "sigma2", "nu"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& keys, std::string_view key) {
    for (const char* k : keys) {
        if (key == k) {
            return true;
        }
    }
    return false;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

// Scalar token or bracketed list.
struct Node {
    bool is_list = false;
    std::string token;
    std::vector<Node> items;
};

class ValueParser {
public:
    ValueParser(std::string_view text, const std::string& field, std::size_t line)
        : text_(text), field_(field), line_(line) {}

    Node parse() {
        Node n = parse_node();
        skip_space();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        return n;
    }

private:
    Node parse_node() {
        skip_space();
        Node n;
        if (pos_ < text_.size() && text_[pos_] == '[') {
            n.is_list = true;
            ++pos_;
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ']') {
                ++pos_;
                return n;
            }
            for (;;) {
                n.items.push_back(parse_node());
                skip_space();
                if (pos_ >= text_.size()) {
                    fail("unterminated list");
                }
                if (text_[pos_] == ',') {
                    ++pos_;
                } else if (text_[pos_] == ']') {
                    ++pos_;
                    return n;
                } else {
                    fail("expected ',' or ']'");
                }
            }
        }
        const auto start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
               text_[pos_] != '[') {
            ++pos_;
        }
        n.token = std::string(trim(text_.substr(start, pos_ - start)));
        if (n.token.empty()) {
            fail("empty value");
        }
        return n;
    }

    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) {
            ++pos_;
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("line " + std::to_string(line_) + ": " + field_ + ": " + msg, line_,
                          field_);
    }

    std::string_view text_;
    const std::string& field_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

// Typed access to one parsed entry.
class Field {
public:
    Field(std::string name, const Entry& entry)
        : name_(std::move(name)), entry_(entry),
          node_(ValueParser(entry.value, name_, entry.line).parse()) {}

    const std::string& name() const { return name_; }

    [[noreturn]] void fail(const std::string& msg) const {
        std::string where = entry_.line > 0 ? "line " + std::to_string(entry_.line) + ": " : "";
        throw ConfigError(where + name_ + ": " + msg, entry_.line, name_);
    }

    std::string word() const {
        if (node_.is_list) {
            fail("expected a word, got a list");
        }
        return node_.token;
    }

    double number() const { return number(node_); }

    std::uint64_t integer() const {
        if (node_.is_list) {
            fail("expected an integer, got a list");
        }
        const std::string& t = node_.token;
        std::uint64_t v = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec == std::errc() && res.ptr == t.data() + t.size()) {
            return v;
        }
        // Accept integral values written like 1e5.
        const double d = number(node_);
        if (d < 0.0 || d != std::floor(d) || d > 9007199254740992.0) {
            fail("expected a nonnegative integer, got '" + t + "'");
        }
        return static_cast<std::uint64_t>(d);
    }

    Vector vector() const { return vector(node_); }

    Matrix matrix() const {
        if (!node_.is_list || node_.items.empty()) {
            fail("expected a nonempty matrix [[...], ...]");
        }
        std::vector<Vector> rows;
        for (const auto& item : node_.items) {
            if (!item.is_list) {
                fail("matrix rows must be bracketed lists");
            }
            rows.push_back(vector(item));
        }
        const std::size_t cols = rows.front().size();
        if (cols == 0) {
            fail("matrix rows must be nonempty");
        }
        Matrix m(rows.size(), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols) {
                fail("matrix rows have different lengths");
            }
            for (std::size_t c = 0; c < cols; ++c) {
                m(r, c) = rows[r][c];
            }
        }
        return m;
    }

private:
    double number(const Node& n) const {
        if (n.is_list) {
            fail("expected a number, got a list");
        }
        const std::string& t = n.token;
        const char* first = t.data();
        if (!t.empty() && t.front() == '+') {
            ++first;
        }
        double v = 0.0;
        const auto res = std::from_chars(first, t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
            fail("expected a number, got '" + t + "'");
        }
        if (!std::isfinite(v)) {
            fail("value must be finite");
        }
        return v;
    }

    Vector vector(const Node& n) const {
        if (!n.is_list) {
            fail("expected a bracketed list");
        }
        Vector v;
        v.reserve(n.items.size());
        for (const auto& item : n.items) {
            v.push_back(number(item));
        }
        return v;
    }

    std::string name_;
    Entry entry_;
    Node node_;
};

using Entries = std::map<std::string, Entry, std::less<>>;

Entries read_entries(std::string_view text) {
    Entries entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'",
                              line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": missing key", line_no);
        }
        if (!contains(kKnownKeys, key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'",
                              line_no, key);
        }
        if (value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": missing value",
                              line_no, key);
        }
        if (entries.count(key) != 0) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'",
                              line_no, key);
        }
        entries.emplace(key, Entry{value, line_no});
    }
    return entries;
}

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg, 0, field);
}

std::optional<Field> get(const Entries& entries, const char* key) {
    const auto it = entries.find(key);
    if (it == entries.end()) {
        return std::nullopt;
    }
    return Field(key, it->second);
}

RunConfig build(const Entries& entries) {
    RunConfig c;

    const auto model = get(entries, "model");
    if (!model) {
        invalid("model", "missing (queuing or sticky_ou)");
    }
    const std::string kind = model->word();
    if (kind == "queuing") {
        c.model = ModelKind::Queuing;
    } else if (kind == "sticky_ou") {
        c.model = ModelKind::StickyOu;
    } else {
        model->fail("unknown model '" + kind + "'");
    }
    for (const auto& [key, entry] : entries) {
        const bool q = contains(kQueuingKeys, key);
        const bool ou = contains(kOuKeys, key);
        if ((q && c.model != ModelKind::Queuing) || (ou && c.model != ModelKind::StickyOu)) {
            Field(key, entry).fail("not a parameter of model " + kind);
        }
    }

    if (c.model == ModelKind::Queuing) {
        const auto d = get(entries, "d");
        if (const auto eta = get(entries, "eta")) {
            c.eta = eta->matrix();
        } else if (d && d->integer() != 2) {
            invalid("eta", "required when d != 2");
        }
        if (!c.eta.square() || c.eta.rows() < 2) {
            invalid("eta", "must be a square matrix of size at least 2");
        }
        if (d && d->integer() != c.eta.rows()) {
            d->fail("does not match the size of eta");
        }
        for (double v : c.eta.data()) {
            if (!(v > 0.0)) {
                invalid("eta", "entries must be positive");
            }
        }
        if (const auto sigma = get(entries, "sigma")) {
            c.sigma = sigma->number();
        }
        if (!(c.sigma > 0.0)) {
            invalid("sigma", "must be positive");
        }
    } else {
        if (const auto f = get(entries, "K")) {
            c.ou.K = f->matrix();
        }
        if (const auto f = get(entries, "theta")) {
            c.ou.theta = f->vector();
        }
        if (const auto f = get(entries, "Sigma")) {
            c.ou.Sigma = f->matrix();
        }
        if (c.ou.K.rows() != 2 || c.ou.K.cols() != 2) {
            invalid("K", "must be 2x2");
        }
        if (c.ou.theta.size() != 2) {
            invalid("theta", "must have 2 entries");
        }
        if (c.ou.Sigma.rows() != 2 || c.ou.Sigma.cols() != 2) {
            invalid("Sigma", "must be 2x2");
        }
        if (const auto f = get(entries, "kappa2")) {
            c.ou.kappa2 = f->number();
        }
        if (const auto f = get(entries, "theta2")) {
            c.ou.theta2 = f->number();
        }
        if (const auto f = get(entries, "sigma2")) {
            c.ou.sigma2 = f->number();
        }
        if (const auto f = get(entries, "nu")) {
            c.ou.nu = f->number();
        }
    }

    if (const auto f = get(entries, "scheme")) {
        const auto s = parse_scheme(f->word());
        if (!s) {
            f->fail("expected fd or ed");
        }
        c.scheme = *s;
    }
    if (const auto f = get(entries, "time_mode")) {
        const auto m = parse_time_mode(f->word());
        if (!m) {
            f->fail("expected exact or discrete");
        }
        c.time_mode = *m;
    }
    if (const auto f = get(entries, "N")) {
        if (f->word() == "auto") {
            c.steps = 0;
        } else {
            c.steps = f->integer();
            if (c.steps == 0) {
                f->fail("must be at least 1 (or auto)");
            }
        }
    }

    const auto h = get(entries, "h");
    const auto h_list = get(entries, "h_list");
    if (!h && !h_list) {
        invalid("h", "one of h or h_list is required");
    }
    if (h) {
        c.h = h->number();
        if (!(*c.h > 0.0)) {
            h->fail("must be positive");
        }
    }
    if (h_list) {
        c.h_list = h_list->vector();
        if (c.h_list.size() < 3) {
            h_list->fail("needs at least 3 values");
        }
        for (std::size_t i = 0; i < c.h_list.size(); ++i) {
            if (!(c.h_list[i] > 0.0)) {
                h_list->fail("values must be positive");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (c.h_list[i] == c.h_list[j]) {
                    h_list->fail("values must be distinct");
                }
            }
        }
    }

    if (const auto f = get(entries, "T")) {
        c.T = f->number();
    }
    if (!(c.T > 0.0)) {
        invalid("T", "must be positive");
    }

    const auto x0 = get(entries, "x0");
    if (!x0) {
        invalid("x0", "missing");
    }
    c.x0 = x0->vector();
    if (c.x0.size() != c.dim()) {
        x0->fail("must have " + std::to_string(c.dim()) + " entries");
    }
    const std::size_t sticky_dim = c.model == ModelKind::Queuing ? c.dim() : 1;
    if (!in_state_space(c.x0, sticky_dim)) {
        x0->fail("lies outside the state space (sticky coordinates must be >= 0)");
    }

    if (const auto f = get(entries, "n_paths")) {
        c.n_paths = f->integer();
    }
    if (c.n_paths < 2) {
        invalid("n_paths", "must be at least 2");
    }
    if (const auto f = get(entries, "seed")) {
        c.seed = f->integer();
    }
    if (const auto f = get(entries, "functional")) {
        const std::string w = f->word();
        if (w == "terminal_sum") {
            c.functional = FunctionalKind::TerminalSum;
        } else if (w == "bond") {
            c.functional = FunctionalKind::Bond;
        } else if (w == "occupation") {
            c.functional = FunctionalKind::Occupation;
        } else {
            f->fail("expected terminal_sum, bond or occupation");
        }
    }
    if (const auto f = get(entries, "reference")) {
        c.reference = f->number();
    }
    if (const auto f = get(entries, "workers")) {
        c.workers = f->integer();
    }
    return c;
}

std::string format_vector(std::span<const double> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            s += ", ";
        }
        s += format_double(v[i]);
    }
    return s + "]";
}

std::string format_matrix(const Matrix& m) {
    std::string s = "[";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (r > 0) {
            s += ", ";
        }
        s += format_vector(m.data().subspan(r * m.cols(), m.cols()));
    }
    return s + "]";
}

} // namespace

std::size_t RunConfig::dim() const {
    return model == ModelKind::Queuing ? eta.rows() : 2;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::Queuing ? "queuing" : "sticky_ou";
}

std::string_view to_string(FunctionalKind kind) {
    switch (kind) {
    case FunctionalKind::TerminalSum:
        return "terminal_sum";
    case FunctionalKind::Bond:
        return "bond";
    case FunctionalKind::Occupation:
        return "occupation";
    }
    return "?";
}

Override parse_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("--set expects key=value, got '" + std::string(text) + "'");
    }
    return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

RunConfig parse_config(std::string_view text, const std::vector<Override>& overrides) {
    Entries entries = read_entries(text);
    for (const auto& [key, value] : overrides) {
        if (!contains(kKnownKeys, key)) {
            throw ConfigError("--set: unknown key '" + key + "'", 0, key);
        }
        if (value.empty()) {
            throw ConfigError("--set: " + key + ": missing value", 0, key);
        }
        entries[key] = Entry{value, 0};
    }
    return build(entries);
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "model = " << to_string(c.model) << '\n';
    if (c.model == ModelKind::Queuing) {
        out << "d = " << c.eta.rows() << '\n';
        out << "eta = " << format_matrix(c.eta) << '\n';
        out << "sigma = " << format_double(c.sigma) << '\n';
    } else {
        out << "K = " << format_matrix(c.ou.K) << '\n';
        out << "theta = " << format_vector(c.ou.theta) << '\n';
        out << "Sigma = " << format_matrix(c.ou.Sigma) << '\n';
        out << "kappa2 = " << format_double(c.ou.kappa2) << '\n';
        out << "theta2 = " << format_double(c.ou.theta2) << '\n';
        out << "sigma2 = " << format_double(c.ou.sigma2) << '\n';
        out << "nu = " << format_double(c.ou.nu) << '\n';
    }
    out << "scheme = " << to_string(c.scheme) << '\n';
    out << "time_mode = " << to_string(c.time_mode) << '\n';
    if (c.steps > 0) {
        out << "N = " << c.steps << '\n';
    } else if (c.time_mode == TimeMode::Discrete) {
        out << "N = auto\n";
    }
    if (c.h) {
        out << "h = " << format_double(*c.h) << '\n';
    }
    if (!c.h_list.empty()) {
        out << "h_list = " << format_vector(c.h_list) << '\n';
    }
    out << "T = " << format_double(c.T) << '\n';
    out << "x0 = " << format_vector(c.x0) << '\n';
    out << "n_paths = " << c.n_paths << '\n';
    out << "seed = " << c.seed << '\n';
    out << "functional = " << to_string(c.functional) << '\n';
    if (c.reference) {
        out << "reference = " << format_double(*c.reference) << '\n';
    }
    if (c.workers > 0) {
        out << "workers = " << c.workers << '\n';
    }
    return out.str();
}

StickyModel build_model(const RunConfig& config) {
    if (config.model == ModelKind::Queuing) {
        return make_queuing_model(config.eta, config.sigma);
    }
    return make_sticky_ou_model(config.ou);
}

Functional build_functional(const RunConfig& config) {
    switch (config.functional) {
    case FunctionalKind::TerminalSum:
        return terminal_sum();
    case FunctionalKind::Bond:
        return BondFunctional{};
    case FunctionalKind::Occupation:
        return OccupationFunctional{0};
    }
    return terminal_sum();
}

TimeStepping build_stepping(const RunConfig& config) {
    if (config.time_mode == TimeMode::Exact) {
        return TimeStepping::exact();
    }
    return TimeStepping::discrete(config.steps);
}

} // namespace sticky
