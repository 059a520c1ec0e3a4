#include "kljn/wire_circuit.hpp"

#include "kljn/errors.hpp"

#include <cmath>

namespace kljn {

namespace {

void require_positive(double r, const char* what) {
    if (!(r > 0.0)) throw DomainError(std::string(what) + ": resistance must be > 0");
}

double normalized_cross(double u2, double i2, double p_ab) {
    const double scale = std::sqrt(u2 * i2);
    return scale > 0.0 ? p_ab / scale : 0.0;
}

}  // namespace

void wire_observables_into(std::span<const double> u_alice, double r_alice,
                           std::span<const double> u_bob, double r_bob, WireTrace& out) {
    if (u_alice.size() != u_bob.size()) throw ArgumentError("wire_observables: length mismatch");
    const double total = r_alice + r_bob;
    const std::size_t n = u_alice.size();
    out.u_c.resize(n);
    out.i_c.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ua = u_alice[k];
        const double ub = u_bob[k];
        out.u_c[k] = (ua * r_bob + ub * r_alice) / total;
        out.i_c[k] = (ua - ub) / total;
    }
}

WireTrace wire_observables(const Branch& alice, const Branch& bob) {
    if (!alice.trace || !bob.trace) throw ArgumentError("wire_observables: branch without trace");
    require_positive(alice.resistance, "wire_observables");
    require_positive(bob.resistance, "wire_observables");
    if (alice.trace->size() != bob.trace->size())
        throw ArgumentError("wire_observables: trace length mismatch");
    if (alice.trace->sample_rate() != bob.trace->sample_rate())
        throw ArgumentError("wire_observables: sample rate mismatch");
    WireTrace out;
    out.sample_rate = alice.trace->sample_rate();
    wire_observables_into(alice.trace->samples(), alice.resistance, bob.trace->samples(),
                          bob.resistance, out);
    return out;
}

MomentSummary analytic_moments(double r_a, double u2_a, double r_b, double u2_b) {
    require_positive(r_a, "analytic_moments");
    require_positive(r_b, "analytic_moments");
    const double s2 = (r_a + r_b) * (r_a + r_b);
    MomentSummary m;
    m.u2 = (u2_a * r_b * r_b + u2_b * r_a * r_a) / s2;
    m.i2 = (u2_a + u2_b) / s2;
    // (u2_a r_b - u2_b r_a) written through the per-ohm levels so that equal
    // levels give exactly zero power.
    m.p_ab = r_a * r_b * (u2_a / r_a - u2_b / r_b) / s2;
    m.rho = normalized_cross(m.u2, m.i2, m.p_ab);
    return m;
}

MomentSummary measured_moments(const WireTrace& wire) {
    const auto s = sample_moments(wire.u_c, wire.i_c);
    return {s.mean_square_x, s.mean_square_y, s.cross_moment,
            normalized_cross(s.mean_square_x, s.mean_square_y, s.cross_moment)};
}

Resultants resultants(double r_a, double r_b) {
    require_positive(r_a, "resultants");
    require_positive(r_b, "resultants");
    return {r_a * r_b / (r_a + r_b), r_a + r_b};
}

EquilibriumSpectra equilibrium_spectra(double temperature_k, double r_a, double r_b) {
    if (temperature_k < 0.0) throw DomainError("equilibrium_spectra: temperature must be >= 0");
    const auto r = resultants(r_a, r_b);
    const double four_kt = 4.0 * kBoltzmann * temperature_k;
    return {four_kt * r.parallel, four_kt / r.serial};
}

double conditional_zc_variance(const MomentSummary& m) {
    return m.u2 * (1.0 - m.rho * m.rho);
}

}  // namespace kljn
