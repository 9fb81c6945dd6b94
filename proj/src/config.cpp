#include "kl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace kl {

namespace {

[[noreturn]] void fail(const std::string& message, int line) {
    throw Error("cli.config", message + " at line " + std::to_string(line));
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v, int line) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) fail(key + " expects a number, got '" + v + "'", line);
    if (!std::isfinite(out)) fail(key + " must be finite", line);
    return out;
}

int parse_int(const std::string& key, const std::string& v, int line) {
    int out = 0;
    const char* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) fail(key + " expects an integer, got '" + v + "'", line);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(key + " expects true or false, got '" + v + "'", line);
}

std::string range_text(double lo, double hi) {
    return "(" + format_double(lo) + ", " + format_double(hi) + ")";
}

// Open interval check.
void require_open(const std::string& key, double v, double lo, double hi, int line) {
    if (!(v > lo && v < hi)) fail(key + " out of range " + range_text(lo, hi), line);
}

void require_positive(const std::string& key, double v, int line) {
    if (!(v > 0.0)) fail(key + " must be positive", line);
}

void require_at_least(const std::string& key, int v, int lo, int line) {
    if (v < lo) fail(key + " must be at least " + std::to_string(lo), line);
}

struct Key {
    std::function<void(const std::string&, int)> set;
    std::function<std::string()> get;
};

using KeyTable = std::vector<std::pair<std::string, Key>>;

Key real_key(const std::string& name, double& ref, std::function<void(double, int)> check = nullptr) {
    return {[&ref, name, check](const std::string& v, int line) {
                const double x = parse_double(name, v, line);
                if (check) check(x, line);
                ref = x;
            },
            [&ref] { return format_double(ref); }};
}

Key positive_key(const std::string& name, double& ref) {
    return real_key(name, ref, [name](double x, int line) { require_positive(name, x, line); });
}

Key int_key(const std::string& name, int& ref, int lo) {
    return {[&ref, name, lo](const std::string& v, int line) {
                const int x = parse_int(name, v, line);
                require_at_least(name, x, lo, line);
                ref = x;
            },
            [&ref] { return std::to_string(ref); }};
}

Key bool_key(const std::string& name, bool& ref) {
    return {[&ref, name](const std::string& v, int line) { ref = parse_bool(name, v, line); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}

// `auto` (or `none`) clears the value; otherwise a positive number.
Key optional_key(const std::string& name, std::optional<double>& ref, const char* empty_word, bool allow_zero) {
    return {[&ref, name, empty_word, allow_zero](const std::string& v, int line) {
                if (v == empty_word) {
                    ref.reset();
                    return;
                }
                const double x = parse_double(name, v, line);
                if (allow_zero ? x < 0.0 : !(x > 0.0))
                    fail(name + (allow_zero ? " must be non-negative" : " must be positive"), line);
                ref = x;
            },
            [&ref, empty_word] { return ref ? format_double(*ref) : std::string(empty_word); }};
}

template <class E>
Key enum_key(const std::string& name, E& ref, std::vector<std::pair<std::string, E>> choices) {
    return {[&ref, name, choices](const std::string& v, int line) {
                for (const auto& [word, value] : choices)
                    if (v == word) {
                        ref = value;
                        return;
                    }
                std::string list;
                for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c.first;
                fail(name + " must be one of {" + list + "}, got '" + v + "'", line);
            },
            [&ref, choices] {
                for (const auto& [word, value] : choices)
                    if (value == ref) return word;
                return std::string("?");
            }};
}

void add_load(KeyTable& t, const std::string& prefix, LoadSpec& L) {
    t.emplace_back(prefix + ".kind", enum_key<LoadKind>(prefix + ".kind", L.kind,
                                                        {{"zero", LoadKind::zero},
                                                         {"const", LoadKind::constant},
                                                         {"sin-product", LoadKind::sin_product},
                                                         {"gaussian", LoadKind::gaussian}}));
    t.emplace_back(prefix + ".amplitude", real_key(prefix + ".amplitude", L.amplitude));
    t.emplace_back(prefix + ".mx", int_key(prefix + ".mx", L.mx, 1));
    t.emplace_back(prefix + ".my", int_key(prefix + ".my", L.my, 1));
    t.emplace_back(prefix + ".cx", real_key(prefix + ".cx", L.cx));
    t.emplace_back(prefix + ".cy", real_key(prefix + ".cy", L.cy));
    t.emplace_back(prefix + ".sigma", positive_key(prefix + ".sigma", L.sigma));
}

KeyTable key_table(CaseConfig& c) {
    KeyTable t;
    const std::vector<std::pair<std::string, EdgeKind>> edge = {{"clamped", EdgeKind::clamped},
                                                                {"traction", EdgeKind::traction}};
    t.emplace_back("model", enum_key<std::string>("model", c.model, {{"plate", "plate"}, {"shell", "shell"}}));
    t.emplace_back("grid.nx", int_key("grid.nx", c.nx, 3));
    t.emplace_back("grid.ny", int_key("grid.ny", c.ny, 3));
    t.emplace_back("grid.x0", real_key("grid.x0", c.extents.x0));
    t.emplace_back("grid.x1", real_key("grid.x1", c.extents.x1));
    t.emplace_back("grid.y0", real_key("grid.y0", c.extents.y0));
    t.emplace_back("grid.y1", real_key("grid.y1", c.extents.y1));
    t.emplace_back("boundary.left", enum_key("boundary.left", c.boundary.left, edge));
    t.emplace_back("boundary.right", enum_key("boundary.right", c.boundary.right, edge));
    t.emplace_back("boundary.bottom", enum_key("boundary.bottom", c.boundary.bottom, edge));
    t.emplace_back("boundary.top", enum_key("boundary.top", c.boundary.top, edge));
    t.emplace_back("material.E", positive_key("material.E", c.E));
    t.emplace_back("material.nu",
                   real_key("material.nu", c.nu, [](double x, int line) { require_open("material.nu", x, -1.0, 0.5, line); }));
    t.emplace_back("material.h", positive_key("material.h", c.h));
    add_load(t, "loads.P", c.P);
    add_load(t, "loads.P1", c.P1);
    add_load(t, "loads.P2", c.P2);
    add_load(t, "loads.Pt", c.Pt);
    add_load(t, "loads.Pt1", c.Pt1);
    add_load(t, "loads.Pt2", c.Pt2);
    t.emplace_back("shell.surface", enum_key<SurfaceKind>("shell.surface", c.shell.surface,
                                                          {{"plane", SurfaceKind::plane},
                                                           {"cylinder", SurfaceKind::cylinder},
                                                           {"sphere", SurfaceKind::sphere},
                                                           {"paraboloid", SurfaceKind::paraboloid}}));
    t.emplace_back("shell.R", positive_key("shell.R", c.shell.R));
    t.emplace_back("shell.a", real_key("shell.a", c.shell.a));
    t.emplace_back("shell.b", real_key("shell.b", c.shell.b));
    t.emplace_back("solver.gtol", optional_key("solver.gtol", c.solver.gtol, "auto", false));
    t.emplace_back("solver.max_iter", int_key("solver.max_iter", c.solver.max_iter, 0));
    t.emplace_back("solver.memory", int_key("solver.memory", c.solver.memory, 1));
    t.emplace_back("solver.newton_polish", bool_key("solver.newton_polish", c.solver.newton_polish));
    t.emplace_back("solver.init",
                   enum_key<bool>("solver.init", c.solver.linear_init, {{"linear", true}, {"zero", false}}));
    t.emplace_back("certify.K", optional_key("certify.K", c.certify.K, "auto", false));
    t.emplace_back("certify.tol_equilibrium", positive_key("certify.tol_equilibrium", c.certify.tol_equilibrium));
    t.emplace_back("certify.tol_gap", positive_key("certify.tol_gap", c.certify.tol_gap));
    t.emplace_back("certify.dense_max_nodes", int_key("certify.dense_max_nodes", c.certify.dense_max_nodes, 0));
    t.emplace_back("certify.a4_tol", positive_key("certify.a4_tol", c.certify.a4_tol));
    t.emplace_back("certify.compression", optional_key("certify.compression", c.certify.compression, "none", true));
    t.emplace_back("probe.t_max", positive_key("probe.t_max", c.probe.t_max));
    t.emplace_back("probe.samples", int_key("probe.samples", c.probe.samples, 3));
    t.emplace_back("output.dump_fields", bool_key("output.dump_fields", c.dump_fields));
    return t;
}

}  // namespace

const char* load_kind_name(LoadKind k) {
    switch (k) {
        case LoadKind::zero: return "zero";
        case LoadKind::constant: return "const";
        case LoadKind::sin_product: return "sin-product";
        case LoadKind::gaussian: return "gaussian";
    }
    return "?";
}

const char* surface_kind_name(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::plane: return "plane";
        case SurfaceKind::cylinder: return "cylinder";
        case SurfaceKind::sphere: return "sphere";
        case SurfaceKind::paraboloid: return "paraboloid";
    }
    return "?";
}

CaseConfig parse_config_text(const std::string& text, const std::string& origin) {
    CaseConfig c;
    c.source = origin;
    KeyTable table = key_table(c);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < table.size(); ++i) index[table[i].first] = i;

    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', got '" + s + "'", line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail("missing key", line);
        const auto it = index.find(key);
        if (it == index.end()) fail("unknown key '" + key + "'", line);
        if (value.empty()) fail(key + " has no value", line);
        if (const auto prev = seen.find(key); prev != seen.end())
            fail(key + " repeats line " + std::to_string(prev->second), line);
        seen[key] = line;
        table[it->second].second.set(value, line);
    }

    // Cross-key checks point at the later of the two lines involved.
    auto line_of = [&seen](const std::string& a, const std::string& b) {
        const int la = seen.count(a) ? seen[a] : 0, lb = seen.count(b) ? seen[b] : 0;
        return std::max(la, lb);
    };
    if (!(c.extents.x1 > c.extents.x0)) fail("grid.x1 must exceed grid.x0", line_of("grid.x0", "grid.x1"));
    if (!(c.extents.y1 > c.extents.y0)) fail("grid.y1 must exceed grid.y0", line_of("grid.y0", "grid.y1"));
    return c;
}

CaseConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cli.config", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const CaseConfig& c) {
    CaseConfig copy = c;
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, key] : key_table(copy)) out.emplace_back(name, key.get());
    return out;
}

std::string to_config_text(const CaseConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
    return s;
}

}  // namespace kl
