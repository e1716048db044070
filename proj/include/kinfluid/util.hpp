#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinfluid {

// Error taxonomy mapped to CLI exit codes: config -> 2, numerical -> 3, data -> 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a requested dt exceeds the stability limit; carries the admissible step.
struct StepRejected : NumericalError {
    double admissible_dt;
    StepRejected(double adm, const std::string& msg)
        : NumericalError(msg), admissible_dt(adm) {}
};

// Fixed-capacity vector for spatial quantities; entries past dim stay zero.
using Vec3 = std::array<double, 3>;

inline Vec3 vec_zero() { return {0.0, 0.0, 0.0}; }

inline Vec3 vec_add(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 vec_sub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 vec_scale(const Vec3& a, double s) {
    return {a[0] * s, a[1] * s, a[2] * s};
}

inline double vec_dot(const Vec3& a, const Vec3& b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += a[d] * b[d];
    return s;
}

inline double vec_norm(const Vec3& a, int dim) {
    return std::sqrt(vec_dot(a, a, dim));
}

// Neumaier compensated summation. Used for every conserved-quantity reduction
// so that mass/momentum drift checks sit at the 1e-13 level even for 1e5+ terms.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace kinfluid
