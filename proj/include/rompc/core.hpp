#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rompc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    // One fixed seeding path so every run is reproducible across platforms.
    std::mt19937_64 rng(seed);
    rng.discard(8);
    return rng;
}

/// Uniform sample on the sphere of the given radius (by normalization).
inline Vector sphere_sample(std::mt19937_64& rng, int dim, double radius) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(dim);
    double norm = 0.0;
    do {
        for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
        norm = v.norm();
    } while (norm < 1e-12);
    return (radius / norm) * v;
}

/// Uniform sample in the closed ball of the given radius.
inline Vector ball_sample(std::mt19937_64& rng, int dim, double radius) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
    return sphere_sample(rng, dim, r);
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots; iteration order is unspecified.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    std::atomic<int> next{0};
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace rompc
