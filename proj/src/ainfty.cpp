#include <algorithm>
#include <numeric>

#include "hmlab/error.h"
#include "hmlab/harmonic.h"

namespace hmlab {

AinftyResult ainfty_scan(std::span<const double> mu, std::span<const double> omega, double eps) {
    if (mu.size() != omega.size()) throw Error(ErrorCode::InvalidArgument, "mu and omega differ in length");
    if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be nonnegative");
    AinftyResult out;
    double mu_total = 0.0, omega_total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mu_total += mu[i];
        omega_total += omega[i];
    }
    if (omega_total <= 0.0) return out;

    std::vector<std::size_t> order(mu.size());
    std::iota(order.begin(), order.end(), 0);
    // μ = 0 atoms with ω > 0 first (infinite ratio), then ω/μ descending,
    // then atoms without ω mass; ties keep index order.
    auto category = [&](std::size_t i) { return omega[i] <= 0.0 ? 2 : (mu[i] == 0.0 ? 0 : 1); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int ca = category(a), cb = category(b);
        if (ca != cb) return ca < cb;
        return ca == 1 && omega[a] / mu[a] > omega[b] / mu[b];
    });

    double remaining = eps * mu_total;
    double taken = 0.0;
    for (std::size_t i : order) {
        if (omega[i] <= 0.0) break;
        if (mu[i] == 0.0) {
            out.zero_mu_hit = true;
        } else if (mu[i] > remaining) {
            if (remaining > 0.0) {
                taken += omega[i] * (remaining / mu[i]);
                out.fractional = true;
            }
            break;
        } else {
            remaining -= mu[i];
        }
        taken += omega[i];
        ++out.atoms_taken;
    }
    out.eps_prime = taken / omega_total;
    return out;
}

}  // namespace hmlab
