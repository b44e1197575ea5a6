#pragma once

// Configuration-driven experiment runner behind the randpoly command.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "randpoly/atoms.hpp"
#include "randpoly/coeff_profiles.hpp"
#include "randpoly/density_engine.hpp"
#include "randpoly/mc_lab.hpp"
#include "randpoly/parallel.hpp"
#include "randpoly/root_engine.hpp"
#include "randpoly/selftest.hpp"

namespace randpoly::cli {

using nlohmann::json;

inline constexpr char const* kVersion = "0.1.0";

//! Validation failure; reported as a structured error before any computation.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
// Spec-string parsing
//---------------------------------------------------------------------------//
namespace detail {

inline std::vector<std::string> split(std::string const& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline double to_double(std::string const& s, std::string const& what)
{
    const auto t = trim(s);
    if (t == "inf" || t == "+inf")
        return std::numeric_limits<double>::infinity();
    if (t == "-inf")
        return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (std::exception const&) {
        throw ConfigError(what + ": not a number: '" + s + "'");
    }
    if (pos != t.size())
        throw ConfigError(what + ": not a number: '" + s + "'");
    return v;
}

inline long long to_int(std::string const& s, std::string const& what)
{
    const auto t = trim(s);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &pos);
    } catch (std::exception const&) {
        throw ConfigError(what + ": not an integer: '" + s + "'");
    }
    if (pos != t.size())
        throw ConfigError(what + ": not an integer: '" + s + "'");
    return v;
}

// "name:key=value,key=value" -> (name, map)
inline std::pair<std::string, std::map<std::string, std::string>> parse_spec(std::string const& s)
{
    const auto colon = s.find(':');
    std::pair<std::string, std::map<std::string, std::string>> r;
    r.first = trim(s.substr(0, colon));
    if (colon == std::string::npos)
        return r;
    for (auto const& kv : split(s.substr(colon + 1), ',')) {
        if (trim(kv).empty())
            continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value in '" + s + "'");
        r.second[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
    return r;
}

inline void reject_unknown(std::map<std::string, std::string> const& kv,
                           std::set<std::string> const& allowed, std::string const& what)
{
    for (auto const& [k, v] : kv)
        if (!allowed.count(k))
            throw ConfigError(what + ": unknown parameter '" + k + "'");
}

inline std::vector<double> read_values_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read coefficient file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string body = ss.str();
    std::vector<double> v;
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && body[first] == '[') {
        for (auto const& x : json::parse(body))
            v.push_back(x.get<double>());
        return v;
    }
    std::string tok;
    for (char c : body) {
        if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
            if (!tok.empty())
                v.push_back(to_double(tok, path));
            tok.clear();
        } else {
            tok.push_back(c);
        }
    }
    if (!tok.empty())
        v.push_back(to_double(tok, path));
    return v;
}

}  // namespace detail

/*!
 * Profile strings: kac, hyperbolic:L=4, kac_derivative:d=1,
 * power_law:rho=0.5,scale=1, genpoly:terms=1/1;3/0.5[,n0=2,head=1;1],
 * explicit:file=coeffs.csv[,rho=0] or explicit:values=1;2;3.
 * `n` is the polynomial degree (ignored for explicit lists).
 */
inline CoefficientProfile parse_profile(std::string const& spec, int n)
{
    using namespace detail;
    const auto [name, kv] = parse_spec(spec);
    auto get = [&](std::string const& k, double dflt) {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : to_double(it->second, spec);
    };
    if (name == "kac") {
        reject_unknown(kv, {}, spec);
        return CoefficientProfile::kac(n);
    }
    if (name == "hyperbolic") {
        reject_unknown(kv, {"L"}, spec);
        if (!kv.count("L"))
            throw ConfigError(spec + ": hyperbolic needs L");
        return CoefficientProfile::hyperbolic(get("L", 1.0), n);
    }
    if (name == "kac_derivative") {
        reject_unknown(kv, {"d"}, spec);
        const auto d = static_cast<int>(to_int(kv.count("d") ? kv.at("d") : "1", spec));
        return CoefficientProfile::kac_derivative(d, n + d);
    }
    if (name == "power_law") {
        reject_unknown(kv, {"rho", "scale"}, spec);
        return CoefficientProfile::power_law(get("rho", 0.0), get("scale", 1.0), n);
    }
    if (name == "genpoly") {
        reject_unknown(kv, {"terms", "n0", "head"}, spec);
        if (!kv.count("terms"))
            throw ConfigError(spec + ": genpoly needs terms=L/alpha;...");
        std::vector<GenPolyTerm> terms;
        for (auto const& t : split(kv.at("terms"), ';')) {
            const auto p = split(t, '/');
            if (p.size() != 2)
                throw ConfigError(spec + ": term must be L/alpha");
            terms.push_back({to_double(p[0], spec), to_double(p[1], spec)});
        }
        std::vector<double> head;
        if (kv.count("head"))
            for (auto const& h : split(kv.at("head"), ';'))
                head.push_back(to_double(h, spec));
        const int n0 = static_cast<int>(to_int(kv.count("n0") ? kv.at("n0") : "0", spec));
        return CoefficientProfile::genpoly_sqrt(GeneralizedPolynomial(terms), n, n0, head);
    }
    if (name == "explicit") {
        reject_unknown(kv, {"file", "values", "rho"}, spec);
        std::vector<double> v;
        if (kv.count("file"))
            v = read_values_file(kv.at("file"));
        else if (kv.count("values"))
            for (auto const& x : split(kv.at("values"), ';'))
                v.push_back(to_double(x, spec));
        else
            throw ConfigError(spec + ": explicit needs file= or values=");
        return CoefficientProfile::explicit_list(std::move(v), get("rho", 0.0));
    }
    throw ConfigError("unknown profile '" + spec + "'");
}

//! Atom strings: gaussian[:mu=..], rademacher, uniform, complex_gaussian.
inline AtomSpec parse_atom(std::string const& spec)
{
    const auto [name, kv] = detail::parse_spec(spec);
    if (name == "gaussian") {
        detail::reject_unknown(kv, {"mu"}, spec);
        return AtomSpec::gaussian(kv.count("mu") ? detail::to_double(kv.at("mu"), spec) : 0.0);
    }
    detail::reject_unknown(kv, {}, spec);
    if (name == "rademacher")
        return AtomSpec::rademacher();
    if (name == "uniform")
        return AtomSpec::uniform_unitvar();
    if (name == "complex_gaussian")
        return AtomSpec::complex_gaussian();
    throw ConfigError("unknown atom '" + spec + "'");
}

//! n-grid strings: "256:16384:x2" (geometric), "10:50:+10" (arithmetic) or "64,256,1024".
inline std::vector<int> parse_n_grid(std::string const& s)
{
    std::vector<int> out;
    if (s.find(':') == std::string::npos) {
        for (auto const& t : detail::split(s, ','))
            out.push_back(static_cast<int>(detail::to_int(t, "n-grid")));
    } else {
        const auto p = detail::split(s, ':');
        if (p.size() != 3 || p[2].size() < 2 || (p[2][0] != 'x' && p[2][0] != '+'))
            throw ConfigError("n-grid must look like 256:16384:x2 or 10:50:+10");
        const long long a = detail::to_int(p[0], "n-grid");
        const long long b = detail::to_int(p[1], "n-grid");
        const long long st = detail::to_int(p[2].substr(1), "n-grid");
        if (a < 1 || b < a || st < (p[2][0] == 'x' ? 2 : 1))
            throw ConfigError("n-grid: need 1 <= start <= stop and a valid step");
        for (long long v = a; v <= b; v = p[2][0] == 'x' ? v * st : v + st)
            out.push_back(static_cast<int>(v));
    }
    for (int v : out)
        if (v < 1)
            throw ConfigError("n-grid entries must be positive");
    return out;
}

//! Set strings: "all", "a:b", "disk:re:im:r", "annulus:re:im:rin:rout".
inline RootSet parse_set(std::string const& s)
{
    if (s == "all")
        return Interval{};
    const auto p = detail::split(s, ':');
    if (p.size() == 2) {
        Interval iv{detail::to_double(p[0], "interval"), detail::to_double(p[1], "interval")};
        if (!(iv.a <= iv.b))
            throw ConfigError("interval: need a <= b");
        return iv;
    }
    if (p.size() == 4 && p[0] == "disk")
        return Disk{{detail::to_double(p[1], s), detail::to_double(p[2], s)},
                    detail::to_double(p[3], s)};
    if (p.size() == 5 && p[0] == "annulus")
        return Annulus{{detail::to_double(p[1], s), detail::to_double(p[2], s)},
                       detail::to_double(p[3], s), detail::to_double(p[4], s)};
    throw ConfigError("unrecognized set '" + s + "'");
}

inline std::vector<double> parse_list(std::string const& s, std::string const& what)
{
    std::vector<double> v;
    for (auto const& t : detail::split(s, ','))
        v.push_back(detail::to_double(t, what));
    return v;
}

//---------------------------------------------------------------------------//
// Config
//---------------------------------------------------------------------------//
struct ExperimentConfig {
    std::string command;
    std::vector<std::string> profiles = {"kac"};
    std::vector<std::string> atoms = {"gaussian"};
    std::vector<int> ns;  //!< single n or grid
    std::string interval = "all";
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out;  //!< artifact directory; empty = stdout only
    std::string fixture;
    // density
    std::string method = "ek_logvar";
    std::string grid = "-2:2:401";
    // histogram
    int bins = 0;
    // correlation
    std::string kind = "complex";
    int k = 1;
    int l = 0;
    double delta = 0.05;
    double support = 1e-3;
    double angle = 0.7853981633974483;
    double theta = 0.0;
    // probes
    double x = 0.0;
    std::vector<double> gammas;
    double unit = 0.0;
    std::vector<double> weights;
    cplx z = 0.0;
    double radius = 0.5;
    std::size_t dump_roots = 0;

    json echo;  //!< normalized config as given
};

namespace detail {

inline const std::set<std::string>& known_keys()
{
    static const std::set<std::string> k = {
        "command", "profile", "profiles", "atom", "atoms", "n", "n_grid", "interval", "samples",
        "seed", "workers", "out", "fixture", "method", "grid", "bins", "kind", "k", "l",
        "delta", "support", "angle", "theta", "x", "gammas", "unit", "weights", "z",
        "radius", "dump_roots"};
    return k;
}

inline std::string as_string(json const& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + as_string(v[i]);
        return s;
    }
    if (v.is_number_integer())
        return std::to_string(v.get<long long>());
    if (v.is_number_unsigned())
        return std::to_string(v.get<unsigned long long>());
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
}

}  // namespace detail

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c = {"density",        "expect",         "mc-count",
                                               "mc-var",         "mc-corr",        "probe-repulsion",
                                               "probe-anticonc", "compare",        "slopes",
                                               "selftest",       "mc-density",     "rotation"};
    return c;
}

/*!
 * Builds a validated config from a JSON document (file contents merged with
 * flag overrides by the caller). Values may be JSON numbers or strings.
 */
inline ExperimentConfig parse_config(json const& j)
{
    using namespace detail;
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    for (auto const& [key, v] : j.items())
        if (!known_keys().count(key))
            throw ConfigError("unknown config key '" + key + "'");
    ExperimentConfig c;
    c.echo = j;
    auto str = [&](char const* key) -> std::optional<std::string> {
        if (!j.contains(key) || j.at(key).is_null())
            return std::nullopt;
        return as_string(j.at(key));
    };
    if (!str("command"))
        throw ConfigError("missing command");
    c.command = *str("command");
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
        throw ConfigError("unknown command '" + c.command + "'");
    if (auto v = str("profiles"))
        c.profiles = split(*v, '|');
    if (auto v = str("profile"))
        c.profiles = {*v};
    if (auto v = str("atoms"))
        c.atoms = split(*v, '|').size() > 1 ? split(*v, '|') : split(*v, ',');
    if (auto v = str("atom"))
        c.atoms = {*v};
    if (auto v = str("n_grid"))
        c.ns = parse_n_grid(*v);
    if (auto v = str("n")) {
        if (!c.ns.empty())
            throw ConfigError("give either n or n_grid, not both");
        c.ns = parse_n_grid(*v);
    }
    if (auto v = str("interval"))
        c.interval = *v;
    if (auto v = str("samples")) {
        const auto s = to_int(*v, "samples");
        if (s < 1)
            throw ConfigError("samples must be positive");
        c.samples = static_cast<std::size_t>(s);
    }
    if (auto v = str("seed")) {
        try {
            c.seed = parse_seed(*v);
        } catch (std::exception const& e) {
            throw ConfigError(e.what());
        }
    }
    if (auto v = str("workers")) {
        const auto w = to_int(*v, "workers");
        if (w < 1)
            throw ConfigError("workers must be at least 1");
        c.workers = static_cast<unsigned>(w);
    } else {
        try {
            c.workers = default_workers();
        } catch (std::exception const& e) {
            throw ConfigError(e.what());
        }
    }
    if (auto v = str("out"))
        c.out = *v;
    c.fixture = str("fixture").value_or(selftest::default_fixture_path());
    if (auto v = str("method"))
        c.method = *v;
    if (auto v = str("grid"))
        c.grid = *v;
    if (auto v = str("bins"))
        c.bins = static_cast<int>(to_int(*v, "bins"));
    if (auto v = str("kind"))
        c.kind = *v;
    if (auto v = str("k"))
        c.k = static_cast<int>(to_int(*v, "k"));
    if (auto v = str("l"))
        c.l = static_cast<int>(to_int(*v, "l"));
    if (auto v = str("delta"))
        c.delta = to_double(*v, "delta");
    if (auto v = str("support"))
        c.support = to_double(*v, "support");
    if (auto v = str("angle"))
        c.angle = to_double(*v, "angle");
    if (auto v = str("theta"))
        c.theta = to_double(*v, "theta");
    if (auto v = str("x"))
        c.x = to_double(*v, "x");
    if (auto v = str("gammas"))
        c.gammas = parse_list(*v, "gammas");
    if (auto v = str("unit"))
        c.unit = to_double(*v, "unit");
    if (auto v = str("weights"))
        c.weights = parse_list(*v, "weights");
    if (auto v = str("z")) {
        const auto p = split(*v, ':');
        if (p.size() == 1)
            c.z = {to_double(p[0], "z"), 0.0};
        else if (p.size() == 2)
            c.z = {to_double(p[0], "z"), to_double(p[1], "z")};
        else
            throw ConfigError("z must be re or re:im");
    }
    if (auto v = str("radius"))
        c.radius = to_double(*v, "radius");
    if (auto v = str("dump_roots"))
        c.dump_roots = static_cast<std::size_t>(to_int(*v, "dump_roots"));

    // command-specific validation, including a trial parse of every spec
    const auto& cmd = c.command;
    const bool needs_n = cmd != "selftest" && cmd != "probe-anticonc";
    const bool explicit_profile =
        !c.profiles.empty() && c.profiles.front().rfind("explicit", 0) == 0;
    if (needs_n && c.ns.empty() && !explicit_profile)
        throw ConfigError(cmd + ": needs n or n_grid");
    if (cmd == "slopes" && c.ns.size() < 3)
        throw ConfigError("slopes: n_grid needs at least 3 points");
    if (cmd != "slopes" && cmd != "compare" && c.ns.size() > 1)
        throw ConfigError(cmd + ": takes a single n");
    if (cmd != "compare" && c.profiles.size() != 1)
        throw ConfigError(cmd + ": takes a single profile");
    if (cmd != "compare" && c.atoms.size() != 1)
        throw ConfigError(cmd + ": takes a single atom");
    for (auto const& p : c.profiles)
        for (int n : c.ns.empty() ? std::vector<int>{1} : c.ns)
            (void)parse_profile(p, n);
    for (auto const& a : c.atoms)
        (void)parse_atom(a);
    (void)parse_set(c.interval);
    const bool mc = cmd.rfind("mc-", 0) == 0 || cmd.rfind("probe-", 0) == 0 || cmd == "compare" ||
                    cmd == "rotation";
    if (mc && c.samples < 2)
        throw ConfigError(cmd + ": needs at least 2 samples");
    if (cmd == "mc-var" && c.samples < 30)
        throw ConfigError("mc-var: needs at least 30 samples");
    if (cmd == "density") {
        const auto g = split(c.grid, ':');
        if (g.size() != 3 || to_int(g[2], "grid") < 1)
            throw ConfigError("grid must be lo:hi:count");
        static const std::set<std::string> methods = {"ek_raw", "ek_logvar", "kac_closed",
                                                      "kacrice_mean", "limiting"};
        if (!methods.count(c.method))
            throw ConfigError("unknown density method '" + c.method + "'");
    }
    if (cmd == "mc-density") {
        if (c.bins < 1)
            throw ConfigError("mc-density: bins must be at least 1");
        const auto p = split(c.interval, ':');
        if (p.size() != 2)
            throw ConfigError("mc-density: interval must be a finite a:b range");
    }
    if (cmd == "mc-corr" || cmd == "rotation") {
        if (c.kind != "complex" && c.kind != "mixed")
            throw ConfigError("kind must be complex or mixed");
        if (c.k < 0 || c.l < 0 || c.k + c.l < 1)
            throw ConfigError("need k + l >= 1");
        if (!(c.delta > 0.0 && c.delta < 1.0))
            throw ConfigError("delta must lie in (0, 1)");
        if (!(c.support > 0.0))
            throw ConfigError("support must be positive");
    }
    if (cmd == "probe-repulsion") {
        if (c.gammas.empty())
            throw ConfigError("probe-repulsion: needs gammas");
        if (!(c.delta > 0.0 && c.delta < 1.0))
            throw ConfigError("delta must lie in (0, 1)");
        const double ax = std::abs(c.x);
        if (ax < 1.0 - 2.0 * c.delta - 1e-12 || ax > 1.0 - c.delta + 1e-12)
            throw ConfigError("probe-repulsion: |x| must lie in [1-2delta, 1-delta]");
    }
    if (cmd == "probe-anticonc") {
        if (c.weights.empty() && c.ns.size() != 1)
            throw ConfigError("probe-anticonc: needs weights or n (all-ones weights)");
        if (!(c.radius >= 0.0))
            throw ConfigError("radius must be nonnegative");
    }
    return c;
}

//! Typed view of the config, so "64" from a flag and 64 from JSON agree.
inline json normalized(ExperimentConfig const& c)
{
    json j = {{"command", c.command}, {"profiles", c.profiles}, {"atoms", c.atoms},
              {"n", c.ns},           {"interval", c.interval}, {"samples", c.samples},
              {"seed", c.seed}};
    const auto& cmd = c.command;
    if (cmd == "density")
        j.update({{"method", c.method}, {"grid", c.grid}});
    if (cmd == "mc-density")
        j["bins"] = c.bins;
    if (cmd == "mc-corr" || cmd == "rotation")
        j.update({{"kind", c.kind}, {"k", c.k}, {"l", c.l}, {"delta", c.delta},
                  {"support", c.support}, {"angle", c.angle}, {"theta", c.theta}});
    if (cmd == "probe-repulsion")
        j.update({{"x", c.x}, {"gammas", c.gammas}, {"delta", c.delta}, {"unit", c.unit}});
    if (cmd == "probe-anticonc")
        j.update({{"weights", c.weights}, {"z", {c.z.real(), c.z.imag()}}, {"radius", c.radius}});
    return j;
}

//! Stable 64-bit FNV-1a hash of the normalized config; workers and output paths excluded.
inline std::string config_hash(ExperimentConfig const& c)
{
    const std::string s = normalized(c).dump();
    std::uint64_t v = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        v ^= ch;
        v *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

//---------------------------------------------------------------------------//
// Artifacts
//---------------------------------------------------------------------------//

//! Writes via a temporary file in the same directory and renames into place.
inline void write_atomic(std::filesystem::path const& path, std::string const& body)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path(), ec);
    if (ec)
        throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp + " for writing");
        out << body;
        out.flush();
        if (!out)
            throw IoError("write failed for " + tmp);
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

//! CSV with a hash comment line and 17 significant digits.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    static std::string num(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    static std::string num(long long v) { return std::to_string(v); }
    static std::string num(std::size_t v) { return std::to_string(v); }
    static std::string num(int v) { return std::to_string(v); }

    [[nodiscard]] std::string str(std::string const& hash) const
    {
        std::string s = "# config_hash=" + hash + "\n";
        auto line = [&](std::vector<std::string> const& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                s += (i ? "," : "") + cells[i];
            s += "\n";
        };
        line(header_);
        for (auto const& r : rows_)
            line(r);
        return s;
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct RunResult {
    json result;
    std::vector<std::pair<std::string, std::string>> files;  //!< (name, body)
    bool ok = true;
    std::string table;  //!< human-readable summary (selftest)
};

namespace detail {

inline std::string stat_fields(Statistic const& s, CsvTable&) { return s.name; }

inline json stat_json(Statistic const& s)
{
    return {{"estimate", s.estimate}, {"se", s.se}, {"samples", s.samples}, {"excluded", s.excluded}};
}

inline RootSet set_of(ExperimentConfig const& c) { return parse_set(c.interval); }

inline McConfig mc_of(ExperimentConfig const& c) { return {c.samples, c.seed, c.workers}; }

inline std::string roots_csv(CoefficientProfile const& prof, AtomSpec const& atom,
                             ExperimentConfig const& c, std::string const& hash)
{
    CsvTable t({"sample", "re", "im", "is_real", "residual"});
    const auto seq = coeff_sequence(prof);
    for (std::size_t i = 0; i < std::min(c.dump_roots, c.samples); ++i) {
        const auto s = sample_roots(seq, atom, c.seed, i);
        std::vector<char> real_tag(s.roots.size(), 0);
        if (s.classified) {
            // tag the roots nearest to each classified real root
            std::vector<char> used(s.roots.size(), 0);
            for (double x : s.real_roots) {
                std::size_t best = 0;
                double bd = std::numeric_limits<double>::infinity();
                for (std::size_t r = 0; r < s.roots.size(); ++r)
                    if (!used[r] && std::abs(s.roots[r] - x) < bd) {
                        bd = std::abs(s.roots[r] - x);
                        best = r;
                    }
                used[best] = 1;
                real_tag[best] = 1;
            }
        }
        for (std::size_t r = 0; r < s.roots.size(); ++r)
            t.row({CsvTable::num(i), CsvTable::num(s.roots[r].real()),
                   CsvTable::num(s.roots[r].imag()), real_tag[r] ? "1" : "0",
                   CsvTable::num(s.residuals[r])});
    }
    return t.str(hash);
}

}  // namespace detail

/*!
 * Runs one validated experiment and returns its JSON result plus artifact
 * bodies. Heavy work is parallelized inside mc_lab; writing happens in
 * write_artifacts on the calling thread.
 */
inline RunResult execute(ExperimentConfig const& c)
{
    RunResult rr;
    const auto hash = config_hash(c);
    auto& res = rr.result;
    res["command"] = c.command;
    res["config_hash"] = hash;
    const int n0 = c.ns.empty() ? 1 : c.ns.front();
    const auto prof = parse_profile(c.profiles.front(), n0);
    const auto atom = parse_atom(c.atoms.front());
    const double inf = std::numeric_limits<double>::infinity();

    if (c.command == "density") {
        const auto g = detail::split(c.grid, ':');
        const double lo = detail::to_double(g[0], "grid");
        const double hi = detail::to_double(g[1], "grid");
        const auto cnt = detail::to_int(g[2], "grid");
        std::vector<double> grid;
        for (long long i = 0; i < cnt; ++i)
            grid.push_back(cnt == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (cnt - 1));
        DensityMethod m = DensityMethod::ek_logvar;
        for (auto mm : {DensityMethod::ek_raw, DensityMethod::ek_logvar, DensityMethod::kac_closed,
                        DensityMethod::kacrice_mean, DensityMethod::limiting})
            if (to_string(mm) == c.method)
                m = mm;
        const auto curve = density_curve(m, prof, atom.mean, grid);
        CsvTable t({"t", "rho"});
        for (std::size_t i = 0; i < curve.t.size(); ++i)
            t.row({CsvTable::num(curve.t[i]), CsvTable::num(curve.rho[i])});
        rr.files.emplace_back("density.csv", t.str(hash));
        res["method"] = c.method;
        res["profile"] = prof.id();
        res["n"] = prof.poly_degree();
        res["points"] = curve.t.size();
        return rr;
    }
    if (c.command == "expect") {
        const auto set = detail::set_of(c);
        const auto* iv = std::get_if<Interval>(&set);
        if (!iv)
            throw ConfigError("expect: interval must be all or a:b");
        const auto seq = coeff_sequence(prof);
        const auto r = atom.mean == 0.0
                           ? expected_count_ek(VarianceKernel(seq), iv->a, iv->b)
                           : expected_count_kacrice(GaussianModel(seq, atom.mean), iv->a, iv->b);
        if (atom.mean != 0.0)
            (void)predicted_slope(prof, atom.mean);
        res["profile"] = prof.id();
        res["n"] = prof.poly_degree();
        res["mu"] = atom.mean;
        res["expected_count"] = r.value;
        res["abs_error"] = r.abs_error;
        res["evaluations"] = r.evaluations;
        res["converged"] = r.converged;
        return rr;
    }
    if (c.command == "mc-count") {
        const auto rep = mc_expected_count(prof, atom, detail::mc_of(c), detail::set_of(c));
        res["report"] = rep.to_json();
        if (c.dump_roots)
            rr.files.emplace_back("roots.csv", detail::roots_csv(prof, atom, c, hash));
        return rr;
    }
    if (c.command == "mc-var") {
        const auto rep = mc_variance_count(prof, atom, detail::mc_of(c));
        res["report"] = rep.to_json();
        res["variance_over_log_n"] = rep.at("variance").estimate / std::log(prof.poly_degree());
        return rr;
    }
    if (c.command == "mc-density") {
        const auto p = detail::split(c.interval, ':');
        const auto h = empirical_density(prof, atom, c.bins, detail::to_double(p[0], "interval"),
                                         detail::to_double(p[1], "interval"), detail::mc_of(c));
        CsvTable t({"lo", "hi", "density", "se"});
        for (int b = 0; b < c.bins; ++b)
            t.row({CsvTable::num(h.edges[b]), CsvTable::num(h.edges[b + 1]),
                   CsvTable::num(h.density[b]), CsvTable::num(h.se[b])});
        rr.files.emplace_back("histogram.csv", t.str(hash));
        res["samples"] = h.samples;
        res["excluded"] = h.excluded;
        return rr;
    }
    if (c.command == "mc-corr" || c.command == "rotation") {
        const bool mixed = c.kind == "mixed";
        auto w = CorrelationWindow::standard(c.delta, mixed ? c.k : 0, mixed ? c.l : c.k, c.angle);
        w.support = c.support;
        if (c.command == "rotation") {
            const auto g = rotation_invariance_check(prof, atom, w, c.k, c.theta, detail::mc_of(c));
            res["estimate_base"] = g.estimate_base;
            res["estimate_rotated"] = g.estimate_rotated;
            res["gap"] = g.gap;
            res["se"] = g.se;
            res["samples"] = g.samples;
            res["excluded"] = g.excluded;
            return rr;
        }
        const auto e = correlation_estimate(
            prof, atom, w, mixed ? CorrelationKind::mixed : CorrelationKind::complex_points, c.k,
            mixed ? c.l : 0, detail::mc_of(c));
        res["k"] = e.k;
        res["l"] = e.l;
        res["estimate"] = e.estimate;
        res["se"] = e.se;
        res["samples"] = e.samples;
        res["excluded"] = e.excluded;
        res["rescale"] = w.rescale();
        return rr;
    }
    if (c.command == "probe-repulsion") {
        RepulsionOptions o;
        o.delta = c.delta;
        o.unit = c.unit;
        const auto r = repulsion_probe(prof, atom, c.x, c.gammas, detail::mc_of(c), o);
        CsvTable t({"gamma", "p_ge2", "se", "samples", "excluded"});
        for (std::size_t g = 0; g < r.gammas.size(); ++g)
            t.row({CsvTable::num(r.gammas[g]), CsvTable::num(r.probability[g].estimate),
                   CsvTable::num(r.probability[g].se), CsvTable::num(r.probability[g].samples),
                   CsvTable::num(r.probability[g].excluded)});
        rr.files.emplace_back("repulsion.csv", t.str(hash));
        res["exponent_mle"] = r.exponent_mle;
        res["exponent_ols"] = r.exponent_ols;
        return rr;
    }
    if (c.command == "probe-anticonc") {
        std::vector<double> w = c.weights;
        if (w.empty())
            w.assign(static_cast<std::size_t>(n0), 1.0);
        const auto s = anticoncentration_probe(atom, w, c.z, c.radius, detail::mc_of(c));
        res["probability"] = detail::stat_json(s);
        res["scaled_by_sqrt_n"] = s.estimate * std::sqrt(static_cast<double>(w.size()));
        return rr;
    }
    if (c.command == "compare") {
        CsvTable t({"profile", "atom", "n", "estimate", "se", "samples", "excluded"});
        json gaps = json::array();
        for (std::size_t pi = 0; pi < c.profiles.size(); ++pi)
            for (std::size_t ni = 0; ni < c.ns.size(); ++ni) {
                const auto p = parse_profile(c.profiles[pi], c.ns[ni]);
                std::vector<Statistic> cells;
                for (std::size_t ai = 0; ai < c.atoms.size(); ++ai) {
                    const auto a = parse_atom(c.atoms[ai]);
                    McConfig mc = detail::mc_of(c);
                    mc.root_seed = SeedStream(c.seed).at({pi, ai, ni}).key();
                    const auto rep = mc_expected_count(p, a, mc, detail::set_of(c));
                    cells.push_back(rep.at("count"));
                    t.row({p.id(), a.id(), CsvTable::num(p.poly_degree()),
                           CsvTable::num(cells.back().estimate), CsvTable::num(cells.back().se),
                           CsvTable::num(cells.back().samples), CsvTable::num(cells.back().excluded)});
                }
                for (std::size_t ai = 1; ai < cells.size(); ++ai) {
                    const auto g = gap(cells[ai], cells[0]);
                    gaps.push_back({{"profile", p.id()},
                                    {"n", p.poly_degree()},
                                    {"atom", parse_atom(c.atoms[ai]).id()},
                                    {"reference", parse_atom(c.atoms[0]).id()},
                                    {"gap", g.diff},
                                    {"joint_se", g.se}});
                }
            }
        rr.files.emplace_back("compare.csv", t.str(hash));
        res["gaps"] = gaps;
        return rr;
    }
    if (c.command == "slopes") {
        CsvTable t({"n", "expected_count", "abs_error"});
        std::vector<double> ns, es;
        for (int n : c.ns) {
            const auto p = parse_profile(c.profiles.front(), n);
            const auto seq = coeff_sequence(p);
            const auto r = atom.mean == 0.0
                               ? expected_count_ek(VarianceKernel(seq), -inf, inf)
                               : expected_count_kacrice(GaussianModel(seq, atom.mean), -inf, inf);
            ns.push_back(p.poly_degree());
            es.push_back(r.value);
            t.row({CsvTable::num(p.poly_degree()), CsvTable::num(r.value), CsvTable::num(r.abs_error)});
        }
        const auto fit = slope_fit(ns, es);
        rr.files.emplace_back("slopes.csv", t.str(hash));
        res["profile"] = prof.id();
        res["mu"] = atom.mean;
        res["slope"] = fit.slope;
        res["intercept"] = fit.intercept;
        res["residuals"] = fit.residuals;
        res["pairwise_slopes"] = fit.pairwise_slopes;
        res["predicted_slope"] = predicted_slope(prof, atom.mean);
        return rr;
    }
    if (c.command == "selftest") {
        const auto results = selftest::run_fast(c.fixture, c.workers);
        json arr = json::array();
        std::ostringstream tab;
        tab << std::left << std::setw(5) << "id" << std::setw(40) << "criterion" << std::setw(8)
            << "result" << "detail\n";
        for (auto const& r : results) {
            rr.ok = rr.ok && r.pass;
            arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
            tab << std::left << std::setw(5) << r.id << std::setw(40) << r.name << std::setw(8)
                << (r.pass ? "PASS" : "FAIL") << r.detail << "\n";
        }
        res["criteria"] = arr;
        res["pass"] = rr.ok;
        rr.table = tab.str();
        return rr;
    }
    throw ConfigError("unhandled command " + c.command);
}

inline json manifest(ExperimentConfig const& c, RunResult const& rr, double wall)
{
    json m;
    m["config"] = c.echo;
    m["normalized_config"] = normalized(c);
    m["config_hash"] = config_hash(c);
    m["root_seed"] = c.seed;
    m["workers"] = c.workers;
    m["versions"] = {{"randpoly", kVersion}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}};
    m["wall_time_s"] = wall;
    json files = json::array({"result.json"});
    for (auto const& f : rr.files)
        files.push_back(f.first);
    m["artifacts"] = files;
    return m;
}

inline json error_payload(std::string const& kind, std::string const& message)
{
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

/*!
 * Full run: validate, execute, write artifacts. Returns the process exit code
 * (0 success, 1 runtime failure or failed selftest, 2 invalid config, 3 I/O).
 */
inline int run(json const& config, std::ostream& out, std::ostream& err)
{
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    try {
        c = parse_config(config);
    } catch (std::exception const& e) {
        err << error_payload("validation", e.what()).dump() << "\n";
        return 2;
    }
    try {
        auto rr = execute(c);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rr.result["wall_time_s"] = wall;
        if (!c.out.empty()) {
            const std::filesystem::path dir(c.out);
            for (auto const& [name, body] : rr.files)
                write_atomic(dir / name, body);
            write_atomic(dir / "result.json", rr.result.dump(2) + "\n");
            write_atomic(dir / "manifest.json", manifest(c, rr, wall).dump(2) + "\n");
        } else {
            for (auto const& [name, body] : rr.files)
                if (c.command != "selftest")
                    rr.result["csv"][name] = body;
        }
        if (!rr.table.empty())
            out << rr.table;
        else
            out << rr.result.dump(2) << "\n";
        return rr.ok ? 0 : 1;
    } catch (ConfigError const& e) {
        err << error_payload("validation", e.what()).dump() << "\n";
        return 2;
    } catch (std::invalid_argument const& e) {
        err << error_payload("validation", e.what()).dump() << "\n";
        return 2;
    } catch (IoError const& e) {
        err << error_payload("io", e.what()).dump() << "\n";
        return 3;
    } catch (std::exception const& e) {
        err << error_payload("runtime", e.what()).dump() << "\n";
        return 1;
    }
}

}  // namespace randpoly::cli
