#include "hmlab/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hmlab/error.h"
#include "hmlab/measure_io.h"

namespace hmlab {

namespace {

using T = ConfigKey::Type;
constexpr double kBig = 1e300;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || !std::isfinite(out)) config_error(key + ": not a number: '" + v + "'");
    return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) config_error(key + ": not an integer: '" + v + "'");
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
    if (out.empty()) config_error(key + ": empty list");
    return out;
}

const ConfigKey* find_key(const std::string& name) {
    for (const ConfigKey& k : config_schema())
        if (k.name == name) return &k;
    return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"experiment", T::Text, "", 0, 0, "registered experiment name"},
        {"seed", T::Integer, "1", 0, 9.2e18, "master seed"},
        {"walks", T::Integer, "100000", 1, 1e9, "walk-on-spheres paths per estimate"},
        {"shell_eps", T::Real, "1e-4", 1e-12, 0.1, "walk stopping shell"},
        {"max_steps", T::Integer, "1000000", 1, 1e9, "steps per walk before it is discarded"},
        {"domain", T::Text, "disk", 0, 0, "builtin domain"},
        {"domain_param", T::Real, "0", -kBig, kBig, "domain parameter (0: default)"},
        {"export_exits", T::Bool, "false", 0, 0, "write exits.csv where walks are sampled"},

        {"measure", T::Text, "circle", 0, 0,
         "circle, segment, square_boundary, two_cluster, sphere_shell, parallel_segments, "
         "segment_plus_cluster"},
        {"measure_file", T::Text, "", 0, 0, "CSV or JSON measure file (overrides measure)"},
        {"measure_atoms", T::Integer, "2000", 1, 1e7, "atom count of the generator"},
        {"measure_radius", T::Real, "1", 1e-12, kBig, "circle / sphere radius"},
        {"measure_width", T::Real, "0.01", 1e-15, kBig, "two_cluster width"},
        {"measure_separation", T::Real, "1", 1e-15, kBig, "two_cluster separation"},
        {"measure_gap", T::Real, "0.1", 1e-15, kBig, "parallel_segments gap"},
        {"cluster_atoms", T::Integer, "50", 1, 1e7, "segment_plus_cluster cluster atoms"},
        {"cluster_width", T::Real, "0.001", 1e-15, kBig, "segment_plus_cluster cluster width"},
        {"cluster_mass", T::Real, "0.5", 1e-15, kBig, "segment_plus_cluster cluster mass"},

        {"A", T::Real, "50", 1, kBig, "bad-cube comparability threshold"},
        {"eps", T::Real, "0.1", 0, 1, "A-infinity budget"},
        {"eps_prime", T::Real, "0.5", 0, 1, "omega doubling loss"},
        {"eta", T::Real, "0.02", 0, 1, "witness ball scale"},
        {"tau", T::Real, "0.1", 0, 1, "ugly mass fraction"},
        {"lambda0", T::Real, "0.05", 0, 1, "interior margin of Q_lambda"},
        {"delta0", T::Real, "0.125", 0, 1, "thin-ball scale"},
        {"C1", T::Real, "10", 1, kBig, "thin-boundary constant"},
        {"C2", T::Real, "40", 1, kBig, "doubling constant of B"},
        {"min_atoms", T::Integer, "8", 1, 1e9, "atoms a corona ball needs to be resolved"},
        {"corkscrew_samples", T::Integer, "1024", 1, 1e8, "candidates of the corkscrew search"},

        {"C0", T::Real, "128", 1, kBig, "lattice doubling constant"},
        {"A0", T::Real, "auto", 2, kBig, "lattice scale ratio"},
        {"k0", T::Integer, "auto", -1e6, 1e6, "coarsest generation"},
        {"k_max", T::Integer, "auto", -1e6, 1e6, "finest generation"},
        {"lattice_deepen", T::Integer, "1", 0, 20, "extra generations in the packing drift run"},
        {"lattice_audit", T::Bool, "false", 0, 0, "write lattice_audit.csv for every lattice built"},

        {"pole", T::List, "0,0", -kBig, kBig, "walk pole"},
        {"pole2", T::List, "-0.5,0", -kBig, kBig, "second pole for pole-swap"},
        {"arcs", T::Integer, "16", 1, 1e6, "equal arcs of the unit circle"},
        {"ball_center", T::List, "1,0", -kBig, kBig, "center of the ball B"},
        {"ball_radius", T::Real, "0.5", 1e-15, kBig, "radius of the ball B"},
        {"pieces", T::Integer, "8", 1, 1e4, "boundary pieces of B for pole-swap"},
        {"c0", T::Real, "2", 1e-12, kBig, "admissibility: dist(p, B) >= r(B) / c0"},
        {"slit_control", T::Bool, "true", 0, 0, "pole-swap negative control on the slit disk"},
        {"green_x", T::List, "0.3,0.2", -kBig, kBig, "first point of the Green check"},
        {"green_y", T::List, "-0.2,-0.4", -kBig, kBig, "second point of the Green check"},
        {"exterior", T::List, "1.5,0", -kBig, kBig, "exterior point of the Green check"},
        {"bourgain_delta", T::Real, "0.125", 1e-12, 1, "Bourgain scale"},
        {"probe_count", T::Integer, "8", 1, 1e5, "interior probes / poles"},
        {"harnack_A1", T::Real, "2", 1, kBig, "boundary Harnack enlargement"},
        {"far_ball_center", T::List, "-1,0", -kBig, kBig, "B* of u = harmonic measure of B*"},
        {"far_ball_radius", T::Real, "0.3", 1e-15, kBig, "radius of B*"},
        {"harnack_pole", T::List, "-0.5,0", -kBig, kBig, "pole p of v = G(p, .)"},
        {"rho_point", T::List, "0,0", -kBig, kBig, "x0 of the rho check"},
        {"rho_samples", T::Integer, "8", 1, 1e5, "sphere points of the rho average"},
        {"whitney_center", T::List, "0.5,0", -kBig, kBig, "center of the Whitney open ball"},
        {"whitney_radius", T::Real, "0.3", 1e-15, kBig, "radius of the Whitney open ball"},
        {"whitney_delta", T::Real, "0.005", 1e-12, 0.01, "Whitney selection constant"},
        {"ainfty_eps", T::List, "0.05,0.1,0.2,0.5", 0, 1, "A-infinity budgets"},
        {"ainfty_instances", T::Integer, "200", 0, 1e7, "random instances against exhaustive search"},
        {"ainfty_atoms", T::Integer, "12", 1, 20, "atoms per random instance"},
        {"riesz_sizes", T::List, "100,400,1600", 2, 1e6, "segment atom counts"},
        {"riesz_eps_multiples", T::List, "1,2,4", 1, 1e6, "truncations as multiples of the spacing"},
        {"bin_window", T::Real, "10", 1, kBig, "omega window as a multiple of B0"},
        {"key_lemma_refine", T::Bool, "true", 0, 0, "rerun the key lemma with twice the walks"},
        {"corona_domain", T::Bool, "false", 0, 0, "corona x_B from corkscrew points of the domain"},
        {"max_nodes", T::Integer, "100000", 1, 1e9, "corona node cap"},
    };
    return schema;
}

Config Config::parse(std::istream& in, const std::string& origin) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            config_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (cfg.values_.count(key)) config_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.set(key, trim(line.substr(eq + 1)));
    }
    if (!cfg.has("experiment")) config_error(origin + ": missing 'experiment'");
    cfg.stopping().validate();
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config '" + path + "'");
    return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
    validate_value(key, value);
    values_[key] = value;
}

void Config::validate_value(const std::string& key, const std::string& value) const {
    const ConfigKey* k = find_key(key);
    if (!k) config_error("unknown key '" + key + "'");
    auto range = [&](double v) {
        if (v < k->lo || v > k->hi)
            config_error(key + " = " + value + " is outside [" + std::to_string(k->lo) + ", " +
                         std::to_string(k->hi) + "]");
    };
    switch (k->type) {
        case T::Text: break;
        case T::Bool:
            if (value != "true" && value != "false") config_error(key + ": expected true or false");
            break;
        case T::Real:
            if (value != "auto") range(parse_real(key, value));
            break;
        case T::Integer:
            if (value != "auto") range(static_cast<double>(parse_integer(key, value)));
            break;
        case T::List:
            for (double v : parse_list(key, value)) range(v);
            break;
    }
}

std::string Config::str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const ConfigKey* k = find_key(key);
    if (!k) config_error("unknown key '" + key + "'");
    return k->fallback;
}

double Config::num(const std::string& key) const {
    const std::string v = str(key);
    if (v.empty() || v == "auto") config_error(key + " has no value");
    return parse_real(key, v);
}

long long Config::integer(const std::string& key) const {
    const std::string v = str(key);
    if (v.empty() || v == "auto") config_error(key + " has no value");
    return parse_integer(key, v);
}

std::uint64_t Config::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

bool Config::flag(const std::string& key) const { return str(key) == "true"; }

std::vector<double> Config::list(const std::string& key) const { return parse_list(key, str(key)); }

std::optional<double> Config::maybe(const std::string& key) const {
    const std::string v = str(key);
    if (v.empty() || v == "auto") return std::nullopt;
    return parse_real(key, v);
}

std::map<std::string, std::string> Config::effective() const {
    std::map<std::string, std::string> out;
    for (const ConfigKey& k : config_schema()) out[k.name] = str(k.name);
    return out;
}

StoppingConfig Config::stopping() const {
    StoppingConfig s;
    s.A = num("A");
    s.eps = num("eps");
    s.eps_prime = num("eps_prime");
    s.eta = num("eta");
    s.tau = num("tau");
    s.lambda0 = num("lambda0");
    s.delta0 = num("delta0");
    s.C1 = num("C1");
    s.C2 = num("C2");
    s.min_atoms = static_cast<std::size_t>(integer("min_atoms"));
    s.corkscrew_samples = static_cast<std::size_t>(integer("corkscrew_samples"));
    s.validate();
    return s;
}

LatticeParams Config::lattice() const {
    LatticeParams p;
    p.C0 = num("C0");
    p.A0 = maybe("A0");
    if (auto k = maybe("k0")) p.k0 = static_cast<int>(*k);
    if (auto k = maybe("k_max")) p.k_max = static_cast<int>(*k);
    return p;
}

WalkParams Config::walk() const {
    WalkParams w;
    w.shell_eps = num("shell_eps");
    w.max_steps = static_cast<std::size_t>(integer("max_steps"));
    return w;
}

PointMeasure Config::measure() const {
    const std::string file = str("measure_file");
    if (!file.empty()) return load_measure(file);
    const std::string g = str("measure");
    const auto N = static_cast<std::size_t>(integer("measure_atoms"));
    if (g == "circle") return generators::circle(N, Point{0.0, 0.0}, num("measure_radius"));
    if (g == "segment") return generators::unit_segment(N);
    if (g == "square_boundary") return generators::square_boundary(N);
    if (g == "two_cluster") return generators::two_cluster(N, num("measure_width"), num("measure_separation"));
    if (g == "sphere_shell") return generators::sphere_shell(N, num("measure_radius"));
    if (g == "parallel_segments") return generators::parallel_segments(N, num("measure_gap"));
    if (g == "segment_plus_cluster")
        return generators::segment_plus_cluster(N, static_cast<std::size_t>(integer("cluster_atoms")),
                                                num("cluster_width"), num("cluster_mass"));
    config_error("unknown measure generator '" + g + "'");
}

}  // namespace hmlab
