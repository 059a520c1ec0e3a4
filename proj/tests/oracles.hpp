#pragma once

// Test-only reference computations. Nothing here calls into the library's
// solution paths; each oracle reaches its answer by an independent route.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline double det3(const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Cramer's rule.
inline std::array<double, 3> solve3(const Mat3& a, const std::array<double, 3>& b) {
    const double d = det3(a);
    std::array<double, 3> x{};
    for (int col = 0; col < 3; ++col) {
        Mat3 m = a;
        for (int row = 0; row < 3; ++row) m[row][col] = b[row];
        x[col] = det3(m) / d;
    }
    return x;
}

struct VmgUnknowns {
    double hb, ha, lb;
};

// Solves "LH moments == HL moments" for (U_HB^2, U_HA^2, U_LB^2) as a linear
// system, one equation each for u2, i2 and p_ab of the voltage divider.
//   LH: Alice R_LA (U_LA^2 known), Bob R_HB (x = U_HB^2)
//   HL: Alice R_HA (y = U_HA^2),   Bob R_LB (z = U_LB^2)
inline VmgUnknowns vmg_linear_system(double r_ha, double r_la, double r_hb, double r_lb,
                                     double u_la) {
    const double s1 = (r_la + r_hb) * (r_la + r_hb);
    const double s2 = (r_ha + r_lb) * (r_ha + r_lb);
    // unknown order: x, y, z
    const Mat3 a = {{
        {r_la * r_la / s1, -r_lb * r_lb / s2, -r_ha * r_ha / s2},  // u2
        {1.0 / s1, -1.0 / s2, -1.0 / s2},                          // i2
        {-r_la / s1, -r_lb / s2, r_ha / s2},                       // p_ab
    }};
    const std::array<double, 3> b = {-u_la * r_hb * r_hb / s1, -u_la / s1, -u_la * r_hb / s1};
    const auto x = solve3(a, b);
    return {x[0], x[1], x[2]};
}

// E[U^2 | I = 0] for a zero-mean jointly Gaussian pair with covariance
// [[u2, p], [p, i2]], by brute force: draw pairs, keep |I| < eps * sigma_I
// for several eps, and extrapolate the kept mean square linearly in eps^2
// to eps = 0.
inline double conditional_variance_by_rejection(double u2, double i2, double p,
                                                std::size_t draws, std::uint64_t seed) {
    const std::array<double, 4> eps = {0.2, 0.15, 0.1, 0.05};
    std::array<double, 4> sum{};
    std::array<std::size_t, 4> kept{};
    const double su = std::sqrt(u2);
    const double si = std::sqrt(i2);
    const double a = su > 0 ? p / su : 0.0;
    const double b = std::sqrt(std::max(0.0, i2 - a * a));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    for (std::size_t k = 0; k < draws; ++k) {
        const double z1 = n01(rng);
        const double z2 = n01(rng);
        const double u = su * z1;
        const double i = a * z1 + b * z2;
        for (std::size_t e = 0; e < eps.size(); ++e) {
            if (std::abs(i) < eps[e] * si) {
                sum[e] += u * u;
                ++kept[e];
            }
        }
    }
    // least squares y = c0 + c1 * eps^2
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t e = 0; e < eps.size(); ++e) {
        const double x = eps[e] * eps[e];
        const double y = sum[e] / static_cast<double>(kept[e]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(eps.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return (sy - slope * sx) / n;
}

inline double excess_kurtosis(std::span<const double> x) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double m2 = 0, m4 = 0;
    for (double v : x) {
        const double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    return m4 / (m2 * m2) - 3.0;
}

// Standard error of a sample mean-square of a zero-mean Gaussian process
// with flat one-sided spectrum on (0, B]: var = ms^2 / M with M = N B / f_s
// independent spectral bins.
inline double flat_band_ms_std_error(double mean_square, std::size_t n, double bandwidth,
                                     double sample_rate) {
    return mean_square / std::sqrt(static_cast<double>(n) * bandwidth / sample_rate);
}

// Standard error of a correlated series' mean from non-overlapping batch means.
inline double batch_std_error(std::span<const double> x, std::size_t batch) {
    const std::size_t nb = x.size() / batch;
    std::vector<double> means(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t k = 0; k < batch; ++k) means[b] += x[b * batch + k];
        means[b] /= static_cast<double>(batch);
    }
    double m = 0;
    for (double v : means) m += v;
    m /= static_cast<double>(nb);
    double ss = 0;
    for (double v : means) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));
}

}  // namespace oracle
