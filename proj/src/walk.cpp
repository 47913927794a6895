#include "hmlab/walk.h"

#include <cmath>
#include <string>

#include "hmlab/csv.h"
#include "hmlab/error.h"
#include "hmlab/parallel.h"
#include "hmlab/random.h"

namespace hmlab {

WalkExit wos_exit(const Domain& dom, PointView x, std::uint64_t seed, std::uint64_t walk_index,
                  const WalkParams& params) {
    if (!(dom.sdf(x) < 0.0)) throw Error(ErrorCode::InvalidArgument, "walk must start inside the domain");
    StreamRng rng(seed, walk_index);
    Point y(x.begin(), x.end());
    Point dir(y.size());
    WalkExit out;
    for (;;) {
        const double r = -dom.sdf(y);
        if (r < params.shell_eps) break;
        if (out.steps == params.max_steps)
            throw Error(ErrorCode::MaxStepsExceeded, "walk " + std::to_string(walk_index));
        rng.direction(dir);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += r * dir[k];
        ++out.steps;
    }
    out.side = dom.side(y);
    out.point = dom.project(y);
    return out;
}

ExitDistribution sample_exits(const Domain& dom, PointView pole, std::size_t N, std::uint64_t seed,
                              const WalkParams& params) {
    if (!(dom.sdf(pole) < 0.0)) throw Error(ErrorCode::InvalidArgument, "pole must lie inside the domain");
    ExitDistribution out;
    out.dim = dom.dim();
    out.pole.assign(pole.begin(), pole.end());
    out.seed = seed;
    out.shell_eps = params.shell_eps;
    out.walk_count = N;
    const std::size_t d = static_cast<std::size_t>(out.dim);
    out.exits.assign(N * d, 0.0);
    out.sides.assign(N, 0);
    out.kept.assign(N, 1);
    parallel_for(
        N,
        [&](std::size_t i) {
            try {
                const WalkExit e = wos_exit(dom, pole, seed, i, params);
                for (std::size_t k = 0; k < d; ++k) out.exits[i * d + k] = e.point[k];
                out.sides[i] = e.side;
            } catch (const Error& err) {
                if (err.code() != ErrorCode::MaxStepsExceeded) throw;
                out.kept[i] = 0;
            }
        },
        params.threads);
    for (char k : out.kept)
        if (!k) ++out.discarded;
    return out;
}

void write_exits_csv(std::ostream& out, const ExitDistribution& dist, const std::vector<int>& target_ids) {
    CsvWriter w(out);
    std::vector<std::string> head{"walk_index"};
    for (int k = 0; k < dist.dim; ++k) head.push_back("exit_x" + std::to_string(k + 1));
    head.push_back("target_id");
    w.header(head);
    for (std::size_t i = 0; i < dist.walk_count; ++i) {
        w << static_cast<unsigned long long>(i);
        for (double c : dist.exit(i)) w << c;
        w << (dist.kept[i] && i < target_ids.size() ? target_ids[i] : -1);
        w.end_row();
    }
}

std::vector<Point> quasi_sphere(const Point& center, double radius, std::size_t count, std::uint64_t seed) {
    const int d = static_cast<int>(center.size());
    if (d != 2 && d != 3) throw Error(ErrorCode::InvalidArgument, "quasi_sphere supports d = 2, 3");
    QuasiSequence q(d - 1, seed);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto u = q.at(i);
        if (d == 2) {
            const double t = 2.0 * std::numbers::pi * u[0];
            out.push_back({center[0] + radius * std::cos(t), center[1] + radius * std::sin(t)});
        } else {
            const double z = 1.0 - 2.0 * u[0];
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double t = 2.0 * std::numbers::pi * u[1];
            out.push_back({center[0] + radius * rho * std::cos(t), center[1] + radius * rho * std::sin(t),
                           center[2] + radius * z});
        }
    }
    return out;
}

std::vector<Point> quasi_ball(const Point& center, double radius, std::size_t count, std::uint64_t seed) {
    const int d = static_cast<int>(center.size());
    if (d != 2 && d != 3) throw Error(ErrorCode::InvalidArgument, "quasi_ball supports d = 2, 3");
    QuasiSequence q(d, seed);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto u = q.at(i);
        const double r = radius * std::pow(u[0], 1.0 / d);
        const double t = 2.0 * std::numbers::pi * u[1];
        if (d == 2) {
            out.push_back({center[0] + r * std::cos(t), center[1] + r * std::sin(t)});
        } else {
            const double z = 1.0 - 2.0 * u[2];
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            out.push_back({center[0] + r * rho * std::cos(t), center[1] + r * rho * std::sin(t),
                           center[2] + r * z});
        }
    }
    return out;
}

}  // namespace hmlab
