#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mixkinetics {

using Vec3 = std::array<double, 3>;  // velocity-space vector, components [0,d) used

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDensity : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct SingularConstraintSystem : Error { using Error::Error; };
struct EqualMassUnsupported : Error { using Error::Error; };
struct ZeroRelativeVelocity : Error { using Error::Error; };
struct TableGridMismatch : Error { using Error::Error; };
struct DimensionOverflow : Error { using Error::Error; };
struct EigenFailure : Error { using Error::Error; };
struct SingularMS : Error { using Error::Error; };
struct PositivityLoss : Error { using Error::Error; };
struct CFLViolation : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct IndefiniteForm : Error { using Error::Error; };
struct NonPositiveState : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

inline double dot(const Vec3& a, const Vec3& b, int d) {
    double s = 0;
    for (int k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(const Vec3& a, int d) { return std::sqrt(dot(a, a, d)); }

// Deterministic splitmix64-based generator; avoids libstdc++ distribution
// implementation dependence in frozen test values.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        // Box-Muller, cached second value
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        have_spare_ = true;
        spare_ = r * std::sin(2.0 * M_PI * u2);
        return r * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Static-partition parallel map over [0, n). Each worker owns a disjoint index
// range and inner summation order is fixed, so results do not depend on the
// thread count.
class ThreadPool {
  public:
    static int& max_threads() {
        static int n = static_cast<int>(std::thread::hardware_concurrency());
        return n;
    }

    static void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
        int nt = max_threads();
        if (nt <= 1 || n <= 1) {
            for (std::size_t i = 0; i < n; ++i) body(i);
            return;
        }
        std::size_t nthreads = std::min<std::size_t>(nt, n);
        std::vector<std::thread> workers;
        workers.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) {
            workers.emplace_back([&, t]() {
                for (std::size_t i = t; i < n; i += nthreads) body(i);
            });
        }
        for (auto& w : workers) w.join();
    }
};

inline double sphere_measure(int d) {
    return d == 2 ? 2.0 * M_PI : 4.0 * M_PI;  // |S^{d-1}|
}

}  // namespace mixkinetics
