#include "hmlab/corona.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "hmlab/error.h"
#include "hmlab/harmonic.h"
#include "hmlab/parallel.h"

namespace hmlab {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

double worst_thin_ratio(const PointMeasure& mu, const Ball& B) {
    const auto grid = default_t_grid();
    double w = 0.0;
    for (const auto& [t, ratio] : thin_boundary_profile(mu, B, grid)) w = std::max(w, ratio);
    return w;
}

// Nearest atom of `mu` to x, lowest index on ties.
std::size_t nearest_atom(const BallIndex& index, const PointMeasure& mu, PointView x, double start) {
    for (double r = start;; r *= 2.0) {
        const auto cand = index.query(x, r);
        if (cand.empty()) continue;
        std::size_t best = cand.front();
        double bd = distance(x, mu.point(best));
        for (std::size_t j : cand) {
            const double d = distance(x, mu.point(j));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        return best;
    }
}

double index_cell(const PointMeasure& mu) {
    const double res = resolution_scale(mu);
    if (std::isfinite(res) && res > 0.0) return res;
    return 1.0;
}

// Positive-weight ω atoms as a measure on the μ positions.
struct OmegaMeasure {
    PointMeasure measure;
    std::vector<std::size_t> mu_index;
};

OmegaMeasure omega_measure(const OmegaOnMu& om, const PointMeasure& mu, const Ball* restrict_to) {
    OmegaMeasure out{PointMeasure(mu.dim(), mu.n()), {}};
    for (std::size_t j = 0; j < mu.size(); ++j) {
        if (om.omega[j] <= 0.0) continue;
        if (restrict_to && !restrict_to->contains(mu.point(j))) continue;
        out.measure.add(mu.point(j), om.omega[j]);
        out.mu_index.push_back(j);
    }
    return out;
}

// sup over r >= r_min of (mass of `nu` within r of x) / r^n, at the
// breakpoints of the step function.
double ball_growth_from(const PointMeasure& nu, PointView x, double r_min) {
    std::vector<std::pair<double, double>> dw(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) dw[i] = {distance(x, nu.point(i)), nu.weight(i)};
    std::sort(dw.begin(), dw.end());
    const int n = nu.n();
    double best = 0.0, cum = 0.0;
    std::size_t i = 0;
    while (i < dw.size() && dw[i].first <= r_min) cum += dw[i++].second;
    if (r_min > 0.0) best = cum / std::pow(r_min, n);
    while (i < dw.size()) {
        const double d = dw[i].first;
        while (i < dw.size() && dw[i].first == d) cum += dw[i++].second;
        if (d > 0.0) best = std::max(best, cum / std::pow(d, n));
    }
    return best;
}

// sup over eps in (a, b] of |Σ_{eps < |x-y| <= b} K(x-y) w_y|.
double window_sup(const RieszConfig& rc, const PointMeasure& nu, PointView x, double a, double b) {
    struct Term {
        double d;
        Point k;
    };
    std::vector<Term> terms;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double d = distance(x, nu.point(i));
        if (d <= a || d > b) continue;
        Point k = riesz_kernel(rc, sub(x, nu.point(i)));
        for (double& v : k) v *= nu.weight(i);
        terms.push_back({d, std::move(k)});
    }
    std::sort(terms.begin(), terms.end(), [](const Term& l, const Term& r) { return l.d > r.d; });
    Point acc(static_cast<std::size_t>(nu.dim()), 0.0);
    double best = 0.0;
    std::size_t i = 0;
    while (i < terms.size()) {
        const double d = terms[i].d;
        while (i < terms.size() && terms[i].d >= d * (1.0 - 1e-9)) {
            for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += terms[i].k[c];
            ++i;
        }
        best = std::max(best, norm(acc));
    }
    return best;
}

double binomial_stderr(double p, std::size_t N) {
    if (N == 0) return 0.0;
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(N));
}

}  // namespace

void StoppingConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (!(A > 1.0)) fail("A must exceed 1");
    if (!(eps > 0.0 && eps < 1.0)) fail("eps must lie in (0, 1)");
    if (!(eps_prime > 0.0 && eps_prime < 1.0)) fail("eps_prime must lie in (0, 1)");
    if (!(eta > 0.0 && eta < 0.1)) fail("eta must lie in (0, 1/10)");
    if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0, 1)");
    if (!(lambda0 > 0.0 && lambda0 < 1.0)) fail("lambda0 must lie in (0, 1)");
    if (!(delta0 > 0.0 && delta0 < 1.0)) fail("delta0 must lie in (0, 1)");
    if (!(C1 >= 1.0)) fail("C1 must be at least 1");
    if (!(C2 >= 1.0)) fail("C2 must be at least 1");
    if (corkscrew_samples == 0) fail("corkscrew_samples must be positive");
}

B0Result make_B0(const PointMeasure& mu, const Ball& B, const StoppingConfig& cfg,
                 const std::vector<double>* omega) {
    B0Result out;
    out.B = B;
    out.thin_ratio = worst_thin_ratio(mu, B);
    if (out.thin_ratio > cfg.C1)
        throw Error(ErrorCode::PreconditionFailed,
                    "B does not have C1-thin boundary (worst ratio " + std::to_string(out.thin_ratio) + ")");
    out.mu_2B = mass(mu, B.scaled(2.0));
    out.mu_half_delta_B = mass(mu, B.scaled(cfg.delta0 / 2.0));
    if (out.mu_2B > cfg.C2 * out.mu_half_delta_B)
        throw Error(ErrorCode::PreconditionFailed, "mu(2B) exceeds C2 mu(delta0 B / 2)");
    out.lambda = cfg.lambda();
    out.B0 = B.scaled(out.lambda);
    out.mu_B0 = mass(mu, out.B0);
    out.mu_2B0 = mass(mu, out.B0.scaled(2.0));
    out.mu_doubling = out.mu_2B0 <= 2.0 * cfg.C2 * out.mu_B0;
    out.mu_B = mass(mu, B);
    out.mu_B_bound = out.mu_B <= cfg.C2 * out.mu_B0;
    if (omega) {
        if (omega->size() != mu.size()) throw Error(ErrorCode::InvalidArgument, "omega must have one weight per atom");
        const PointMeasure om = mu.with_weights(*omega);
        out.omega_checked = true;
        out.omega_B = mass(om, out.B0.scaled(cfg.alpha()));
        out.omega_B0 = mass(om, out.B0);
        out.omega_doubling = out.omega_B <= out.omega_B0 / (1.0 - cfg.eps_prime);
    }
    return out;
}

OmegaOnMu omega_from_weights(std::vector<double> omega, const PointMeasure& mu, const Ball& window,
                             std::size_t N, std::uint64_t seed) {
    if (omega.size() != mu.size()) throw Error(ErrorCode::InvalidArgument, "omega must have one weight per atom");
    OmegaOnMu out;
    out.omega = std::move(omega);
    out.N = N;
    out.seed = seed;
    out.window = window;
    out.sigma = PointMeasure(mu.dim(), mu.n());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        if (out.omega[j] < 0.0) throw Error(ErrorCode::InvalidArgument, "omega weights must be nonnegative");
        if (out.omega[j] > 0.0 && window.contains(mu.point(j))) {
            out.sigma.add(mu.point(j), out.omega[j]);
            out.mu_of_sigma.push_back(j);
        }
    }
    return out;
}

OmegaOnMu bin_omega(const ExitDistribution& exits, const PointMeasure& mu, const Ball& window) {
    if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "mu is empty");
    if (exits.dim != mu.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
    const std::size_t valid = exits.valid();
    std::vector<double> omega(mu.size(), 0.0);
    if (valid > 0) {
        const BallIndex index(mu, index_cell(mu));
        const double start = index_cell(mu);
        const double unit = 1.0 / static_cast<double>(valid);
        for (std::size_t i = 0; i < exits.walk_count; ++i) {
            if (!exits.kept[i]) continue;
            omega[nearest_atom(index, mu, exits.exit(i), start)] += unit;
        }
    }
    return omega_from_weights(std::move(omega), mu, window, valid, exits.seed);
}

BadCubeReport classify_bad(const DMLattice& lat, const OmegaOnMu& om, const PointMeasure& mu,
                           const Ball& B0, const StoppingConfig& cfg) {
    const PointMeasure& sigma = lat.measure();
    if (sigma.size() != om.mu_of_sigma.size())
        throw Error(ErrorCode::InvalidArgument, "lattice was not built on sigma");
    BadCubeReport rep;
    rep.N = om.N;
    rep.seed = om.seed;
    const Ball alphaB0 = B0.scaled(cfg.alpha());

    std::vector<char> in_B0(mu.size()), in_alpha(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        in_B0[j] = B0.contains(mu.point(j));
        in_alpha[j] = alphaB0.contains(mu.point(j));
        if (in_B0[j]) {
            rep.mu_B0 += mu.weight(j);
            rep.omega_B0 += om.omega[j];
        }
        if (in_alpha[j]) {
            rep.mu_alphaB0 += mu.weight(j);
            rep.omega_alphaB0 += om.omega[j];
        }
    }
    if (sigma.empty() || rep.omega_B0 <= 0.0 || rep.mu_B0 <= 0.0)
        throw Error(ErrorCode::EmptyG0, "B0 carries no mu or omega mass");

    // Attribute every μ atom of the window to its nearest σ atom.
    rep.sigma_of_mu.assign(mu.size(), npos);
    {
        const BallIndex index(sigma, index_cell(sigma));
        const double start = index_cell(sigma);
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (om.window.contains(mu.point(j))) rep.sigma_of_mu[j] = nearest_atom(index, sigma, mu.point(j), start);
    }

    const std::size_t ncell = lat.cells().size();
    rep.cell_mu.assign(ncell, 0.0);
    rep.cell_atoms.assign(ncell, {});
    std::vector<char> inside(ncell, 1), meets(ncell, 0);
    for (int k = lat.k0(); k <= lat.k_max(); ++k) {
        for (std::size_t j = 0; j < mu.size(); ++j) {
            if (rep.sigma_of_mu[j] == npos) continue;
            const std::size_t id = lat.cell_of(k, rep.sigma_of_mu[j]);
            rep.cell_mu[id] += mu.weight(j);
            rep.cell_atoms[id].push_back(j);
            if (!in_alpha[j]) inside[id] = 0;
            if (in_B0[j]) meets[id] = 1;
        }
    }

    const double w0 = rep.omega_B0, m0 = rep.mu_B0;
    // 0: undecided, 1: bad1, 2: bad2, 3: below a bad cell
    std::vector<int> state(ncell, 0);
    double plo = kInf, phi = 0.0;
    for (int k = lat.k0(); k <= lat.k_max(); ++k) {
        for (std::size_t id : lat.generation(k)) {
            const DMCell& c = lat.cell(id);
            if (c.parent && state[*c.parent] != 0) {
                state[id] = 3;
                continue;
            }
            if (!inside[id]) continue;
            const double w = c.mass / w0, m = rep.cell_mu[id] / m0;
            if (w <= m / cfg.A) {
                state[id] = 1;
                rep.bad1.push_back(id);
                rep.mu_bad1 += rep.cell_mu[id];
                rep.omega_bad1 += c.mass;
            } else if (m <= w / cfg.A) {
                state[id] = 2;
                rep.bad2.push_back(id);
                rep.mu_bad2 += rep.cell_mu[id];
                rep.omega_bad2 += c.mass;
            } else if (meets[id]) {
                rep.good.push_back(id);
                if (m > 0.0) {
                    plo = std::min(plo, w / m);
                    phi = std::max(phi, w / m);
                }
            }
        }
    }
    rep.poisson_lower = std::isfinite(plo) ? plo : 0.0;
    rep.poisson_upper = phi;

    for (std::size_t j = 0; j < mu.size(); ++j) {
        if (!in_B0[j]) continue;
        bool bad = false;
        const std::size_t s = rep.sigma_of_mu[j];
        for (int k = lat.k0(); k <= lat.k_max() && !bad; ++k) {
            const int st = state[lat.cell_of(k, s)];
            if (st == 1) {
                rep.mu_bad1_B0 += mu.weight(j);
                bad = true;
            } else if (st == 2) {
                rep.omega_bad2_B0 += om.omega[j];
                bad = true;
            }
        }
        if (bad) continue;
        rep.G0.push_back(j);
        rep.mu_G0 += mu.weight(j);
        rep.omega_G0 += om.omega[j];
    }
    if (rep.mu_G0 <= 0.0 || rep.omega_G0 <= 0.0)
        throw Error(ErrorCode::EmptyG0, "G0 carries no mu or omega mass");

    rep.bad1_constant = rep.omega_bad1 * cfg.A / w0;
    rep.bad2_constant = rep.mu_bad2 * cfg.A / m0;
    rep.eps1_prime = rep.mu_G0 / m0;
    rep.eps2_prime = rep.omega_G0 / w0;

    std::vector<double> mu_w, om_w;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        if (!in_B0[j]) continue;
        mu_w.push_back(mu.weight(j));
        om_w.push_back(om.omega[j]);
    }
    rep.ainfty_eps_prime = ainfty_scan(mu_w, om_w, cfg.eps / 2.0).eps_prime;
    rep.complement_mu_share = ainfty_scan(om_w, mu_w, 1.0 - rep.ainfty_eps_prime).eps_prime;

    rep.omega_B0_stderr = binomial_stderr(rep.omega_B0, om.N);
    rep.omega_G0_stderr = binomial_stderr(rep.omega_G0, om.N);
    return rep;
}

GrowthCheck growth_check(const DMLattice& lat, const OmegaOnMu& om, const PointMeasure& mu,
                         const BadCubeReport& rep, const Ball& B0, const StoppingConfig& cfg) {
    GrowthCheck out;
    const Ball alphaB0 = B0.scaled(cfg.alpha());
    const OmegaMeasure w = omega_measure(om, mu, nullptr);
    const double scale = rep.mu_B0 / rep.omega_B0;
    const int n = mu.n();

    std::vector<char> good(lat.cells().size(), 0);
    for (std::size_t id : rep.good) {
        good[id] = 1;
        const DMCell& c = lat.cell(id);
        const Ball big = c.ball().scaled(100.0);
        if (!big.inside(alphaB0)) continue;
        ++out.cells_tested;
        const double v = mass(w.measure, big) * scale / std::pow(lat.side_length(c), n);
        out.cell_constant = std::max(out.cell_constant, v);
    }

    for (std::size_t j : rep.G0) {
        const std::size_t s = rep.sigma_of_mu[j];
        std::optional<std::size_t> finest;
        for (int k = lat.k0(); k <= lat.k_max(); ++k) {
            const std::size_t id = lat.cell_of(k, s);
            if (good[id]) finest = id;
        }
        if (!finest) continue;
        ++out.points_tested;
        const double l = lat.side_length(lat.cell(*finest));
        out.ball_constant = std::max(out.ball_constant, ball_growth_from(w.measure, mu.point(j), l) * scale);
    }
    return out;
}

KeyLemmaResult key_lemma_check(const DMLattice& lat, const OmegaOnMu& om, const PointMeasure& mu,
                               const BadCubeReport& rep, const Ball& B0, const Ball& B, PointView x_B,
                               const StoppingConfig& cfg) {
    KeyLemmaResult out;
    const RieszConfig rc = RieszConfig::standard(mu.n());
    const OmegaMeasure w = omega_measure(om, mu, nullptr);
    const double scale = rep.mu_B0 / rep.omega_B0;
    const double er = cfg.eta * B.radius;

    std::vector<std::size_t> probes;
    for (std::size_t id : rep.good) {
        const DMCell& c = lat.cell(id);
        if (!c.ball().scaled(100.0).inside(B)) continue;
        if (cfg.delta0 * 28.0 * c.radius > er) continue;
        bool meets = false, clear = true;
        for (std::size_t j : rep.cell_atoms[id]) {
            const double d = distance(mu.point(j), x_B);
            if (d <= er / 2.0) clear = false;
            if (d > er && B0.contains(mu.point(j))) meets = true;
        }
        if (meets && clear && !rep.cell_atoms[id].empty()) probes.push_back(id);
    }
    if (probes.empty()) throw Error(ErrorCode::EmptyProbeFamily, "no good cell satisfies the probe conditions");

    std::vector<double> worst(probes.size(), 0.0);
    parallel_for(probes.size(), [&](std::size_t p) {
        const DMCell& c = lat.cell(probes[p]);
        const double l = lat.side_length(c);
        for (std::size_t j : rep.cell_atoms[probes[p]])
            worst[p] = std::max(worst[p], norm(truncated_riesz(rc, w.measure, {}, mu.point(j), l)) * scale);
    });
    out.probes = probes.size();
    for (std::size_t p = 0; p < probes.size(); ++p) {
        out.points += rep.cell_atoms[probes[p]].size();
        if (worst[p] > out.worst) {
            out.worst = worst[p];
            out.worst_cell = probes[p];
        }
    }

    std::vector<std::size_t> pts;
    for (std::size_t j : rep.G0)
        if (distance(mu.point(j), x_B) > er) pts.push_back(j);
    std::vector<double> mx(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
        mx[i] = maximal_riesz(rc, w.measure, {}, mu.point(pts[i]), 0.0) * scale;
    });
    out.maximal_points = pts.size();
    for (double v : mx) out.maximal_worst = std::max(out.maximal_worst, v);
    return out;
}

T1Result t1_hypotheses(const OmegaOnMu& om, const PointMeasure& mu, const BadCubeReport& rep, const Ball& B0,
                       const Ball& B, PointView x_B, const StoppingConfig& cfg) {
    T1Result out;
    const RieszConfig rc = RieszConfig::standard(mu.n());
    const Ball alphaB0 = B0.scaled(cfg.alpha());
    const double scale = rep.mu_B0 / rep.omega_B0;
    const double er = cfg.eta * B.radius;

    OmegaMeasure w = omega_measure(om, mu, &alphaB0);
    std::vector<double> nw = w.measure.weights();
    for (double& v : nw) v *= scale;
    const PointMeasure nu = w.measure.with_weights(nw);
    out.nu_norm = nu.total_mass();
    out.nu_norm_ratio = out.nu_norm / rep.mu_B0;
    out.nu_norm_ok = out.nu_norm_ratio >= 1.0 - 1e-12 && out.nu_norm_ratio <= 1.0 / (1.0 - cfg.eps_prime) + 1e-12;

    for (std::size_t j : rep.G0)
        if (distance(mu.point(j), x_B) > er) out.G1.push_back(j);
    std::vector<char> in_g1(mu.size(), 0);
    for (std::size_t j : out.G1) in_g1[j] = 1;

    std::vector<std::size_t> subset;
    double g1_mass = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i)
        if (in_g1[w.mu_index[i]]) {
            subset.push_back(i);
            g1_mass += nu.weight(i);
        }
    out.degenerate = g1_mass <= 0.0;
    out.delta1 = out.nu_norm > 0.0 ? 1.0 - g1_mass / out.nu_norm : 1.0;
    if (out.degenerate) {
        out.delta1 = 1.0;
        return out;
    }

    const double res = resolution_scale(nu);
    out.op_eps = std::isfinite(res) ? res : 0.0;
    std::vector<double> c4(out.G1.size(), 0.0);
    parallel_for(out.G1.size(), [&](std::size_t i) {
        c4[i] = ball_growth_from(nu, mu.point(out.G1[i]), out.op_eps);
    });
    for (double v : c4) out.C4 = std::max(out.C4, v);

    std::vector<double> c5(subset.size(), 0.0);
    parallel_for(subset.size(), [&](std::size_t i) {
        c5[i] = maximal_riesz(rc, nu, {}, nu.point(subset[i]), 0.0) * nu.weight(subset[i]);
    });
    out.C5 = std::accumulate(c5.begin(), c5.end(), 0.0) / out.nu_norm;

    out.op = operator_norm_l2(rc, nu, subset, out.op_eps);
    return out;
}

std::string to_string(CoronaLabel label) {
    switch (label) {
        case CoronaLabel::Nice: return "nice";
        case CoronaLabel::Ugly: return "ugly";
        case CoronaLabel::Unresolved: return "unresolved";
    }
    return "unknown";
}

NiceUgly classify_nice_ugly(const DMLattice& lat, std::size_t q, const StoppingConfig& cfg, const Domain* dom,
                            std::uint64_t seed) {
    const PointMeasure& mu = lat.measure();
    const DMCell& Q = lat.cell(q);
    const double l = lat.side_length(Q);
    NiceUgly out;

    std::vector<char> member(mu.size(), 0);
    for (std::size_t i : Q.members) member[i] = 1;
    std::vector<double> gap(Q.members.size(), kInf);
    for (std::size_t a = 0; a < Q.members.size(); ++a)
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (!member[j]) gap[a] = std::min(gap[a], distance(mu.point(Q.members[a]), mu.point(j)));

    // Q_λ: members at distance >= λ ℓ(Q) from the rest of the support.
    std::vector<std::size_t> qlam;
    double lam = cfg.lambda0;
    for (int halving = 0; halving < 64; ++halving, lam /= 2.0) {
        qlam.clear();
        double m = 0.0;
        for (std::size_t a = 0; a < Q.members.size(); ++a)
            if (gap[a] >= lam * l) {
                qlam.push_back(Q.members[a]);
                m += mu.weight(Q.members[a]);
            }
        out.q_lambda_mass = m;
        if (m >= Q.mass / 2.0) break;
    }
    out.lambda_used = lam;
    out.q_lambda_ok = out.q_lambda_mass >= Q.mass / 2.0;
    if (qlam.empty()) qlam = Q.members;

    // B′: heaviest ball of radius δ0 λ ℓ / 10 centered at a point of Q_λ.
    const double rp = cfg.delta0 * lam * l / 10.0;
    Point centroid(static_cast<std::size_t>(mu.dim()), 0.0);
    for (std::size_t i : qlam)
        for (std::size_t c = 0; c < centroid.size(); ++c) centroid[c] += mu.point(i)[c] / static_cast<double>(qlam.size());
    std::vector<std::size_t> by_x(mu.size());
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
        return std::make_pair(mu.point(a)[0], a) < std::make_pair(mu.point(b)[0], b);
    });
    std::vector<double> xs(by_x.size());
    for (std::size_t t = 0; t < by_x.size(); ++t) xs[t] = mu.point(by_x[t])[0];
    // Heaviest ball of radius r around one of `cands`; ties go to the point
    // nearest `ref`, then the lowest index.
    auto densest = [&](const std::vector<std::size_t>& cands, double r, PointView ref) {
        std::size_t best = cands.front();
        double best_m = -1.0, best_d = kInf;
        for (std::size_t c : cands) {
            const double cx = mu.point(c)[0];
            auto lo = std::lower_bound(xs.begin(), xs.end(), cx - r);
            auto hi = std::upper_bound(xs.begin(), xs.end(), cx + r);
            double m = 0.0;
            for (auto it = lo; it != hi; ++it) {
                const std::size_t j = by_x[static_cast<std::size_t>(it - xs.begin())];
                if (distance(mu.point(j), mu.point(c)) <= r) m += mu.weight(j);
            }
            const double dc = distance(mu.point(c), ref);
            if (m > best_m || (m == best_m && (dc < best_d || (dc == best_d && c < best)))) {
                best = c;
                best_m = m;
                best_d = dc;
            }
        }
        return best;
    };
    const std::size_t best = densest(qlam, rp, centroid);
    const Point pc(mu.point(best).begin(), mu.point(best).end());
    out.B_prime = Ball{pc, rp};

    const ThinBall tb = find_thin_boundary_ball(mu, out.B_prime, 2.0 / cfg.delta0, 2.2 / cfg.delta0, cfg.C1);
    out.B = tb.ball;
    out.thin_ratio = tb.worst_ratio;

    if (dom) {
        out.x_B = corkscrew_point(*dom, out.B.center, cfg.kappa() * out.B.radius, cfg.corkscrew_samples, seed).point;
        out.x_B_proxy = false;
    } else {
        // Proxy: the atom of B with the heaviest witness ball.
        std::vector<std::size_t> in_B = members(mu, out.B);
        out.x_B = out.B_prime.center;
        if (!in_B.empty()) {
            const PointView p = mu.point(densest(in_B, cfg.eta * out.B.radius, out.B.center));
            out.x_B.assign(p.begin(), p.end());
        }
        out.x_B_proxy = true;
    }

    out.witness = Ball{out.x_B, cfg.eta * out.B.radius};
    out.mu_witness = mass(mu, out.witness);
    out.mu_B = mass(mu, out.B);
    const double half = mass(mu, out.B.scaled(cfg.delta0 / 2.0));
    out.c2_achieved = half > 0.0 ? mass(mu, out.B.scaled(2.0)) / half : kInf;
    out.two_B_in_Q = true;
    for (std::size_t j : members(mu, out.B.scaled(2.0)))
        if (!member[j]) out.two_B_in_Q = false;

    if (out.mu_witness >= cfg.tau * out.mu_B) {
        out.label = CoronaLabel::Ugly;
        return out;
    }
    out.label = CoronaLabel::Nice;
    const Ball B0 = out.B.scaled(cfg.lambda());
    for (std::size_t i : Q.members)
        if (B0.contains(mu.point(i)) && !out.witness.contains(mu.point(i))) {
            out.good_set.push_back(i);
            out.good_mass += mu.weight(i);
        }
    out.separation = kInf;
    for (std::size_t i : out.good_set)
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (!member[j]) out.separation = std::min(out.separation, distance(mu.point(i), mu.point(j)));
    out.separation_ok = out.separation >= out.B.radius;
    return out;
}

CoronaTree build_corona(const DMLattice& lat, std::size_t root, const StoppingConfig& cfg, const Domain* dom,
                        std::size_t max_nodes) {
    if (!lat.cell(root).doubling) throw Error(ErrorCode::PreconditionFailed, "root cell is not doubling");
    const PointMeasure& mu = lat.measure();
    CoronaTree tree;
    tree.lattice = &lat;
    tree.root_cell = root;

    auto push = [&](std::size_t cell, int level, std::optional<std::size_t> parent) {
        CoronaNode node;
        node.cell = cell;
        node.level = level;
        node.parent = parent;
        const DMCell& c = lat.cell(cell);
        node.mass = c.mass;
        node.theta = lat.theta(c);
        node.theta_mu = node.theta * node.mass;
        tree.nodes.push_back(std::move(node));
        return tree.nodes.size() - 1;
    };
    push(root, 0, std::nullopt);

    for (std::size_t ni = 0; ni < tree.nodes.size(); ++ni) {
        const std::size_t qid = tree.nodes[ni].cell;
        const DMCell& Q = lat.cell(qid);
        NiceUgly info;
        try {
            info = classify_nice_ugly(lat, qid, cfg, dom, derive_seed(0x636f726f6e61ULL, qid));
            if (members(mu, info.B).size() < cfg.min_atoms) {
                info.label = CoronaLabel::Unresolved;
                info.note = "fewer than min_atoms atoms in B";
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoThinBall) throw;
            info = NiceUgly{};
            info.label = CoronaLabel::Unresolved;
            info.note = "no thin-boundary ball";
        }
        tree.nodes[ni].info = std::move(info);
        const NiceUgly& nu = tree.nodes[ni].info;
        if (nu.label == CoronaLabel::Unresolved) ++tree.unresolved;
        if (nu.label != CoronaLabel::Ugly) continue;

        if (Q.generation + 1 > lat.k_max()) {
            tree.nodes[ni].depth_exhausted = true;
            ++tree.depth_exhausted;
            continue;
        }
        // Generation whose side length is log-nearest to η r(B).
        const double target = cfg.eta * nu.B.radius;
        int gen = Q.generation + 1;
        double gbest = kInf;
        for (int k = Q.generation + 1; k <= lat.k_max(); ++k) {
            const double g = std::abs(std::log(lat.side_length(k) / target));
            if (g < gbest) {
                gbest = g;
                gen = k;
            }
        }
        std::map<std::size_t, double> cand;
        for (std::size_t i : Q.members)
            if (nu.witness.contains(mu.point(i))) cand[lat.cell_of(gen, i)] = 0.0;
        if (cand.empty()) {
            std::size_t near = Q.members.front();
            for (std::size_t i : Q.members)
                if (distance(mu.point(i), nu.x_B) < distance(mu.point(near), nu.x_B)) near = i;
            cand[lat.cell_of(gen, near)] = 0.0;
        }
        std::size_t pt = cand.begin()->first;
        for (const auto& [id, unused] : cand)
            if (lat.cell(id).mass > lat.cell(pt).mass) pt = id;
        std::size_t pq = pt;
        while (!lat.cell(pq).doubling && pq != qid) pq = *lat.cell(pq).parent;
        tree.nodes[ni].p_tilde = pt;
        tree.nodes[ni].p_q = pq;
        const int stop_gen = std::max(lat.cell(pq).generation, Q.generation + 1);
        tree.nodes[ni].stop_generation = stop_gen;

        std::set<std::size_t> stop;
        for (std::size_t i : Q.members) stop.insert(lat.cell_of(stop_gen, i));
        tree.nodes[ni].stop.assign(stop.begin(), stop.end());

        std::vector<std::size_t> next_cells;
        for (std::size_t p : stop) {
            const auto cover = covering_by_doubling(lat, p);
            next_cells.insert(next_cells.end(), cover.family.begin(), cover.family.end());
        }
        double next_sum = 0.0;
        for (std::size_t c : next_cells) next_sum += lat.theta(lat.cell(c)) * lat.cell(c).mass;
        tree.nodes[ni].next_sum = next_sum;
        tree.nodes[ni].eq10_ok = next_sum >= 2.0 * tree.nodes[ni].theta_mu;
        if (!tree.nodes[ni].eq10_ok) ++tree.eq10_violations;

        const int level = tree.nodes[ni].level + 1;
        for (std::size_t c : next_cells) {
            if (tree.nodes.size() >= max_nodes) {
                tree.truncated = true;
                break;
            }
            const std::size_t child = push(c, level, ni);
            tree.nodes[ni].next.push_back(child);
        }
    }
    return tree;
}

double packing_check(const CoronaTree& tree) {
    const double root_mass = tree.lattice->cell(tree.root_cell).mass;
    if (root_mass <= 0.0) return 0.0;
    double s = 0.0;
    for (const CoronaNode& node : tree.nodes) s += node.theta_mu;
    return s / root_mass;
}

std::vector<std::size_t> good_set_of_root(const CoronaTree& tree) {
    const DMLattice& lat = *tree.lattice;
    std::vector<char> keep(lat.measure().size(), 0);
    for (std::size_t i : lat.cell(tree.root_cell).members) keep[i] = 1;
    for (const CoronaNode& node : tree.nodes)
        if (node.info.label == CoronaLabel::Nice)
            for (std::size_t i : lat.cell(node.cell).members) keep[i] = 0;
    for (const CoronaNode& node : tree.nodes)
        if (node.info.label == CoronaLabel::Nice)
            for (std::size_t i : node.info.good_set) keep[i] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

RStarL1 r_star_l1_check(const CoronaTree& tree) {
    const DMLattice& lat = *tree.lattice;
    const PointMeasure& mu = lat.measure();
    const RieszConfig rc = RieszConfig::standard(mu.n());
    const std::vector<std::size_t> g = good_set_of_root(tree);
    const PointMeasure nu = mu.restricted(g);
    RStarL1 out;
    out.atoms = g.size();
    out.nu_mass = nu.total_mass();
    if (g.empty() || out.nu_mass <= 0.0) return out;
    const double r_root = lat.cell(tree.root_cell).radius;

    std::vector<double> total(g.size()), tail(g.size()), ugly(g.size()), nice(g.size());
    std::vector<char> ok(g.size(), 1);
    parallel_for(g.size(), [&](std::size_t a) {
        const std::size_t atom = g[a];
        const PointView x = nu.point(a);
        total[a] = maximal_riesz(rc, nu, {}, x, 0.0);
        tail[a] = maximal_riesz(rc, nu, {}, x, r_root);
        double u = 0.0, v = 0.0;
        std::optional<std::size_t> ni = 0;
        while (ni) {
            const CoronaNode& node = tree.nodes[*ni];
            const double rb = lat.cell(node.cell).radius;
            std::optional<std::size_t> child;
            for (std::size_t c : node.next) {
                const std::size_t cc = tree.nodes[c].cell;
                if (lat.cell_of(lat.cell(cc).generation, atom) == cc) {
                    child = c;
                    break;
                }
            }
            if (node.info.label == CoronaLabel::Ugly && !node.depth_exhausted) {
                const double lo = child ? lat.cell(tree.nodes[*child].cell).radius : 0.0;
                u += window_sup(rc, nu, x, lo, rb);
            } else {
                v += window_sup(rc, nu, x, 0.0, rb);
            }
            ni = child;
        }
        ugly[a] = u;
        nice[a] = v;
        ok[a] = total[a] <= (tail[a] + u + v) * (1.0 + 1e-9) + 1e-12;
    });
    double t = 0, ta = 0, ug = 0, ni = 0;
    for (std::size_t a = 0; a < g.size(); ++a) {
        const double w = nu.weight(a);
        t += total[a] * w;
        ta += tail[a] * w;
        ug += ugly[a] * w;
        ni += nice[a] * w;
        if (!ok[a]) out.splitting_ok = false;
    }
    out.normalized = t / out.nu_mass;
    out.tail = ta / out.nu_mass;
    out.ugly_levels = ug / out.nu_mass;
    out.nice_levels = ni / out.nu_mass;
    return out;
}

nlohmann::json CoronaTree::to_json() const {
    nlohmann::json j;
    j["root_cell"] = root_cell;
    j["eq10_violations"] = eq10_violations;
    j["depth_exhausted"] = depth_exhausted;
    j["unresolved"] = unresolved;
    j["truncated"] = truncated;
    auto ball = [](const Ball& b) { return nlohmann::json{{"center", b.center}, {"radius", b.radius}}; };
    const double root_mass = lattice->cell(root_cell).mass;
    double partial = 0.0;
    nlohmann::json arr = nlohmann::json::array();
    for (const CoronaNode& n : nodes) {
        partial += n.theta_mu;
        nlohmann::json o;
        o["cell"] = n.cell;
        o["generation"] = lattice->cell(n.cell).generation;
        o["level"] = n.level;
        o["parent"] = n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr);
        o["label"] = to_string(n.info.label);
        if (!n.info.note.empty()) o["note"] = n.info.note;
        o["theta"] = n.theta;
        o["mass"] = n.mass;
        o["theta_mu"] = n.theta_mu;
        // Running Σ Θ(Q) μ(Q) / μ(R) in node order.
        o["packing_partial"] = root_mass > 0.0 ? partial / root_mass : 0.0;
        o["B"] = ball(n.info.B);
        o["x_B"] = n.info.x_B;
        o["x_B_proxy"] = n.info.x_B_proxy;
        o["lambda_used"] = n.info.lambda_used;
        o["mu_witness"] = n.info.mu_witness;
        o["mu_B"] = n.info.mu_B;
        if (n.p_tilde) o["p_tilde"] = *n.p_tilde;
        if (n.p_q) o["p_q"] = *n.p_q;
        if (n.info.label == CoronaLabel::Ugly) {
            o["stop_generation"] = n.stop_generation;
            o["stop"] = n.stop;
            o["next_sum"] = n.next_sum;
            o["eq10_ok"] = n.eq10_ok;
        }
        o["next"] = n.next;
        o["depth_exhausted"] = n.depth_exhausted;
        arr.push_back(std::move(o));
    }
    j["nodes"] = std::move(arr);
    return j;
}

}  // namespace hmlab
