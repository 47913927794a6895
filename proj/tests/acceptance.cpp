// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
// below. Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmlab/harmonic.h"
#include "hmlab/lattice.h"
#include "hmlab/measure.h"
#include "hmlab/riesz.h"

using namespace hmlab;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kWalks = 100000;
constexpr double kShellEps = 1e-4;
constexpr double kZMax = 3.0;             // criterion 1
constexpr double kWosSeconds = 30.0;      // criterion 1
constexpr double kTvMax = 0.02;           // criterion 2
constexpr double kGreenRelErr = 0.05;     // criterion 3
constexpr double kSigmas = 3.0;           // criterion 3
constexpr double kQuotientMax = 3.0;      // criterion 4
constexpr double kLatticeSeconds = 10.0;  // criterion 5
constexpr double kDoublingShare = 0.5;    // criterion 6
constexpr double kKnapsackSeconds = 5.0;  // criterion 7
constexpr double kKnapsackTol = 1e-12;    // criterion 7
constexpr std::size_t kGrid = 1000000;    // criterion 8
constexpr double kNormSpread = 0.10;      // criterion 9
constexpr double kSvdRelTol = 1e-3;       // criterion 9
constexpr double kDriftMax = 2.0;         // criteria 10 and 11

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

WalkParams walk_params(unsigned threads = 0) {
    WalkParams p;
    p.shell_eps = kShellEps;
    p.threads = threads;
    return p;
}

// Analytic arc probabilities of the disk by closed form: the automorphism
// z -> (z - a)/(1 - conj(a) z) pushes harmonic measure from a to the
// uniform law, independently of the quadrature used by the library.
double disk_arc(double ax, double th0, double th1) {
    auto phi = [&](double th) {
        const std::complex<double> z = std::polar(1.0, th), a(ax, 0.0);
        return std::arg((z - a) / (1.0 - std::conj(a) * z));
    };
    double d = phi(th1) - phi(th0);
    while (d < 0.0) d += 2.0 * std::numbers::pi;
    return d / (2.0 * std::numbers::pi);
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const HarmonicMeasure hm =
        harmonic_measure(builtin_domain("disk"), Point{0, 0}, arc_targets(16), kWalks, 7, walk_params(1));
    const double secs = seconds_since(t0);
    const double p = 1.0 / 16.0, se = std::sqrt(p * (1 - p) / static_cast<double>(hm.valid));
    double zmax = 0.0;
    for (double f : hm.prob) zmax = std::max(zmax, std::abs(f - p) / se);
    report(1, "wos_disk_uniformity", zmax <= kZMax && secs < kWosSeconds,
           fmt("max|z|=%.3f (<= %.0f)  single-thread %.1f s (< %.0f s)", zmax, kZMax, secs, kWosSeconds));
}

void criterion2() {
    const HarmonicMeasure hm =
        harmonic_measure(builtin_domain("disk"), Point{0.5, 0}, arc_targets(16), kWalks, 8, walk_params());
    double tv = 0.0;
    for (int j = 0; j < 16; ++j)
        tv += 0.5 * std::abs(hm.prob[j] - disk_arc(0.5, 2 * std::numbers::pi * j / 16, 2 * std::numbers::pi * (j + 1) / 16));
    report(2, "poisson_kernel_tv", tv < kTvMax, fmt("TV=%.4f (< %.2f)", tv, kTvMax));
}

void criterion3() {
    const Domain disk = builtin_domain("disk");
    const Point x{0.3, 0.2}, y{-0.2, -0.4}, ext{1.5, 0.0};
    const ExitDistribution from_y = sample_exits(disk, y, kWalks, 9, walk_params());
    const ExitDistribution from_x = sample_exits(disk, x, kWalks, 10, walk_params());
    const Estimate gxy = green_from_exits(x, from_y), gyx = green_from_exits(y, from_x), ge = green_from_exits(ext, from_y);
    // Closed form of the disk Green function, written out here.
    const double dx = x[0] - y[0], dy = x[1] - y[1];
    const double cx = 1.0 - (x[0] * y[0] + x[1] * y[1]), cy = x[0] * y[1] - x[1] * y[0];
    const double exact = std::log(std::hypot(cx, cy) / std::hypot(dx, dy)) / (2.0 * std::numbers::pi);
    const double rel = std::abs(gxy.value - exact) / exact;
    const bool ext_ok = std::abs(ge.value) <= kSigmas * ge.stderr_ + 1e-12;
    const double sym = std::abs(gxy.value - gyx.value), sym_bound = kSigmas * std::hypot(gxy.stderr_, gyx.stderr_);
    report(3, "green_identity", rel < kGreenRelErr && ext_ok && sym < sym_bound,
           fmt("rel=%.4f (< %.2f)  exterior |G|/se=%.2f", rel, kGreenRelErr,
               ge.stderr_ > 0 ? std::abs(ge.value) / ge.stderr_ : 0.0) +
               fmt("  sym=%.2e (< %.2e)", sym, sym_bound));
}

void criterion4() {
    const Domain disk = builtin_domain("disk");
    const Ball B{Point{1, 0}, 0.5};
    const ChangeOfPoleResult r =
        change_of_pole(disk, B, ball_pieces(B, 8, Point{0, 1}), Point{0, 0}, Point{-0.5, 0}, 2.0, kWalks, 11, walk_params());
    const Ball Bs{Point{0.5, 0}, 0.25};
    const ChangeOfPoleResult s = change_of_pole(builtin_domain("slit_disk"), Bs, ball_pieces(Bs, 8, Point{1, 0}, true),
                                                Point{0.5, 0.5}, Point{0.5, -0.5}, 2.0, kWalks, 12, walk_params());
    report(4, "change_of_pole", r.quotient <= kQuotientMax,
           fmt("disk quotient=%.3f (<= %.0f)  slit control %.3f = %.2fx disk (informational)", r.quotient, kQuotientMax,
               s.quotient, s.quotient / r.quotient));
}

void criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    const DMLattice lat = build_lattice(generators::unit_segment(1000));
    const LatticeAudit audit = audit_lattice(lat);
    const double secs = seconds_since(t0);
    std::size_t fails = 0, tested = 0;
    for (const AuditRow& r : audit.rows) {
        fails += r.failures;
        tested += r.tested;
    }
    report(5, "lattice_invariants", audit.passed() && fails == 0 && secs < kLatticeSeconds,
           fmt("%.0f generations, %.0f tests, %.0f failures, %.2f s", lat.generation_count(), tested, fails, secs));
}

void criterion6() {
    const PointMeasure seg = generators::unit_segment(1000);
    LatticeParams p;
    p.k_max = 4;
    const DMLattice lat = build_lattice(seg, p);
    const Point c{0.5, 0.0};
    const WhitneyResult w = whitney_decompose(lat, [&](PointView x) { return distance(x, c) - 0.3; }, 0.005);
    const bool props = w.inside_ok && w.covers_in_set_atoms && w.pairwise_disjoint && std::isfinite(w.T0) &&
                       w.max_generation_gap <= 1;
    report(6, "whitney_claim", props && w.doubling_fraction >= kDoublingShare,
           fmt("%.0f cells, T0=%.1f, D0=%.0f, doubling share %.3f", w.cells.size(), w.T0, w.D0, w.doubling_fraction));
}

void criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t instances = 0, below = 0, exact_budget = 0, unequal = 0, literal_hits = 0, literal_unequal = 0;
    for (int t = 0; t < 64; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 15);
        const bool integer = t % 2 == 0;
        std::vector<double> mu(n), om(n);
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = integer ? std::floor(5 * u(rng)) : u(rng);
            om[i] = integer ? std::floor(5 * u(rng)) : u(rng);
        }
        om[0] += 1.0;
        mu[n - 1] += 1.0;
        const double eps = integer ? 0.25 * static_cast<double>(1 + t % 3) : u(rng);
        double mt = 0, ot = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mt += mu[i];
            ot += om[i];
        }
        double best = 0.0;
        bool hit = false;
        for (std::uint32_t s = 0; s < (1u << n); ++s) {
            double m = 0, o = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (s >> i & 1u) {
                    m += mu[i];
                    o += om[i];
                }
            if (std::abs(m - eps * mt) <= kKnapsackTol * mt) hit = true;
            if (m <= eps * mt * (1 + kKnapsackTol)) best = std::max(best, o / ot);
        }
        const AinftyResult r = ainfty_scan(mu, om, eps);
        ++instances;
        if (r.eps_prime < best - kKnapsackTol) ++below;
        if (!r.fractional) {
            ++exact_budget;
            if (std::abs(r.eps_prime - best) > kKnapsackTol) ++unequal;
        }
        if (hit) {
            ++literal_hits;
            if (std::abs(r.eps_prime - best) > kKnapsackTol) ++literal_unequal;
        }
    }
    const double secs = seconds_since(t0);
    report(7, "ainfty_knapsack", below == 0 && unequal == 0 && secs < kKnapsackSeconds,
           fmt("%.0f instances: relaxation below a set %.0f times; greedy meets budget %.0f, unequal %.0f", instances,
               below, exact_budget, unequal) +
               fmt("; some subset meets budget %.0f, relaxation strictly above %.0f; %.2f s", literal_hits, literal_unequal,
                   secs));
}

void criterion8() {
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const RieszConfig rc = RieszConfig::standard(1);
    double worst_riesz = 0.0, worst_density = 0.0;
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
        PointMeasure nu(2, 1);
        for (int i = 0; i < 10; ++i) nu.add(Point{u(rng), u(rng)}, std::abs(u(rng)) + 0.05);
        const Point x{u(rng), u(rng)};
        const double delta = 0.01;
        double dmax = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) dmax = std::max(dmax, distance(x, nu.point(i)));
        const double hi = dmax * 1.01, step = (hi - delta) / static_cast<double>(kGrid);
        double grid_riesz = 0.0, grid_density = 0.0;
        for (std::size_t g = 1; g <= kGrid; ++g) {
            const double e = delta + step * static_cast<double>(g);
            double sx = 0, sy = 0, m = 0;
            for (std::size_t i = 0; i < nu.size(); ++i) {
                const double dx = x[0] - nu.point(i)[0], dy = x[1] - nu.point(i)[1];
                const double r = std::hypot(dx, dy);
                if (r > e) {
                    sx += nu.weight(i) * dx / (r * r);
                    sy += nu.weight(i) * dy / (r * r);
                }
                if (r <= e) m += nu.weight(i);
            }
            grid_riesz = std::max(grid_riesz, std::hypot(sx, sy));
            grid_density = std::max(grid_density, m / e);
        }
        const double exact_riesz = maximal_riesz(rc, nu, {}, x, delta);
        const double exact_density = maximal_density(rc, nu, x, delta).value;
        // The transform is piecewise constant in ε, so the grid reaches the
        // supremum; the density decays like 1/r between atoms, so the grid
        // misses it by at most one step relative to r > δ.
        const double er = std::abs(exact_riesz - grid_riesz) / exact_riesz;
        const double ed = (exact_density - grid_density) / exact_density;
        worst_riesz = std::max(worst_riesz, er);
        worst_density = std::max(worst_density, std::abs(ed));
        ok = ok && er <= 1e-9 && ed >= -1e-12 && ed <= step / delta;
    }
    report(8, "maximal_operator_exactness", ok,
           fmt("worst rel. gap: maximal Riesz %.2e, maximal density %.2e (grid step/delta bound)", worst_riesz,
               worst_density));
}

void criterion9() {
    const RieszConfig rc = RieszConfig::standard(1);
    std::vector<double> norms;
    std::string detail;
    double svd_gap = 0.0;
    for (std::size_t N : {100, 400, 1600}) {
        // Unit spacing and unit weights: atoms at i + 1/2.
        const PointMeasure mu = generators::segment(N, Point{0, 0}, Point{static_cast<double>(N), 0});
        const OperatorNorm on = operator_norm_l2(rc, mu, 1.0);
        norms.push_back(on.norm);
        detail += fmt("N=%.0f: %.4f  ", N, on.norm);
        if (N == 100) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * N, N);
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    const double d = mu.point(i)[0] - mu.point(j)[0];
                    if (std::abs(d) > 1.0) A(2 * i, j) = d / (d * d);
                }
            const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
            svd_gap = std::abs(on.norm - s) / s;
        }
    }
    const double spread = *std::max_element(norms.begin(), norms.end()) / *std::min_element(norms.begin(), norms.end()) - 1;
    report(9, "riesz_l2_boundedness", spread <= kNormSpread && svd_gap <= kSvdRelTol,
           detail + fmt("spread %.3f (<= %.2f), SVD gap at N=100 %.1e", spread, kNormSpread, svd_gap));
}

// CLI-driven criteria.

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

int cli_run(const fs::path& cfg, const fs::path& out, const std::string& extra = "") {
    const std::string cmd = std::string(HMLAB_CLI_PATH) + " run --config " + cfg.string() + " --out " + out.string() +
                            " " + extra + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir() {
    const fs::path p = fs::temp_directory_path() / "hmlab_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void criterion10(const fs::path& work) {
    const fs::path out = work / "packing";
    if (cli_run(fs::path(HMLAB_CONFIG_DIR) / "packing.cfg", out) != 0) {
        report(10, "corona_packing", false, "packing run failed");
        return;
    }
    const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
    const auto& p = s["results"]["packing"];
    const double drift = p["drift"].is_number() ? p["drift"].get<double>() : NAN;
    const double base = p["base"], deep = p["deepened"];
    const auto& b = s["results"]["packing_base"];
    report(10, "corona_packing", std::isfinite(base) && std::isfinite(drift) && drift < kDriftMax,
           fmt("packing %.4f -> %.4f (drift %.3f < %.0f)", base, deep, drift, kDriftMax) +
               fmt("; eq10 violations %.0f at eta=%.3f; %.0f nodes, %.0f unresolved", b["eq10_violations"].get<double>(),
                   b["eta"].get<double>(), b["nodes"].get<double>(), b["unresolved"].get<double>()));
}

void criterion11(const fs::path& work) {
    const fs::path cfg = work / "key.cfg";
    std::ofstream(cfg) << "experiment = full-pipeline\ndomain = disk\nmeasure = circle\nmeasure_atoms = 2000\n"
                          "ball_center = 1, 0\nball_radius = 0.5\neta = 0.05\nwalks = 100000\n"
                          "key_lemma_refine = true\nseed = 42\n";
    const fs::path out = work / "key";
    if (cli_run(cfg, out) != 0) {
        report(11, "key_lemma_stability", false, "full-pipeline run failed");
        return;
    }
    const auto k = nlohmann::json::parse(slurp(out / "summary.json"))["results"]["key_lemma"];
    if (!k.contains("refinement_drift")) {
        report(11, "key_lemma_stability", false, "probe family empty");
        return;
    }
    const double a = k["worst"]["value"], b = k["refined"]["worst"]["value"], drift = k["refinement_drift"];
    report(11, "key_lemma_stability", drift < kDriftMax,
           fmt("worst %.4f at 1e5 walks, %.4f at 2e5 (drift %.4f < %.0f)", a, b, drift, kDriftMax));
}

void criterion12(const fs::path& work) {
    std::size_t runs = 0, files = 0, differing = 0, failed = 0;
    std::vector<fs::path> configs;
    for (const auto& e : fs::directory_iterator(HMLAB_CONFIG_DIR))
        if (e.path().extension() == ".cfg") configs.push_back(e.path());
    std::sort(configs.begin(), configs.end());
    for (const fs::path& cfg : configs) {
        const fs::path a = work / ("det_a_" + cfg.stem().string()), b = work / ("det_b_" + cfg.stem().string());
        if (cli_run(cfg, a) != 0 || cli_run(cfg, b) != 0) {
            ++failed;
            continue;
        }
        ++runs;
        for (const auto& e : fs::directory_iterator(a)) {
            ++files;
            if (slurp(e.path()) != slurp(b / e.path().filename())) ++differing;
        }
    }
    report(12, "determinism", failed == 0 && differing == 0 && runs == configs.size(),
           fmt("%.0f configs rerun, %.0f files compared, %.0f differ, %.0f failed runs", runs, files, differing, failed));
}

}  // namespace

int main() {
    const fs::path work = scratch_dir();
    const std::vector<std::function<void()>> criteria = {
        criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9,
        [&] { criterion10(work); }, [&] { criterion11(work); }, [&] { criterion12(work); },
    };
    for (const auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& e) {
            report(0, "exception", false, e.what());
        }
    }
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
