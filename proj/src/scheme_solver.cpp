#include "kljn/scheme_solver.hpp"

#include "kljn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace kljn {

std::string_view to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::classic: return "classic";
        case SchemeKind::vmg: return "vmg";
        case SchemeKind::fck1: return "fck1";
    }
    return "?";
}

std::string_view to_string(BranchId id) {
    switch (id) {
        case BranchId::ha: return "HA";
        case BranchId::la: return "LA";
        case BranchId::hb: return "HB";
        case BranchId::lb: return "LB";
    }
    return "?";
}

std::string_view to_string(Choice c) { return c == Choice::low ? "L" : "H"; }

BranchId branch_of(Party party, Choice choice) {
    if (party == Party::alice) return choice == Choice::low ? BranchId::la : BranchId::ha;
    return choice == Choice::low ? BranchId::lb : BranchId::hb;
}

const LevelEntry& LevelTable::at(Choice alice, Choice bob) const {
    if (alice == Choice::low) return bob == Choice::low ? ll : lh;
    return bob == Choice::low ? hl : hh;
}

namespace {

MomentSummary pairing(const SchemeConfig& c, Choice alice, Choice bob) {
    const auto& a = c.at(branch_of(Party::alice, alice));
    const auto& b = c.at(branch_of(Party::bob, bob));
    return analytic_moments(a.resistance, a.mean_square, b.resistance, b.mean_square);
}

double relative_gap(double x, double y) {
    const double scale = std::max(std::abs(x), std::abs(y));
    return scale > 0.0 ? std::abs(x - y) / scale : 0.0;
}

void require_resistances(std::initializer_list<double> rs, const char* who) {
    for (double r : rs) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw ConfigurationError(std::string(who) + ": resistances must be finite and > 0");
    }
}

}  // namespace

void SchemeConfig::validate() const {
    if (!(bandwidth > 0.0)) throw ConfigurationError("scheme: bandwidth must be > 0");
    for (BranchId id : kAllBranches) {
        const auto& b = at(id);
        if (!(b.resistance > 0.0))
            throw ConfigurationError("scheme: branch " + std::string(to_string(id)) +
                                     " resistance must be > 0");
        if (!(b.mean_square > 0.0))
            throw ConfigurationError("scheme: branch " + std::string(to_string(id)) +
                                     " mean square must be > 0");
    }
    const auto report = security_check(*this);
    if (!(report.max_relative_mismatch <= kSecurityTolerance)) {
        throw ConfigurationError("scheme: LH and HL wire statistics differ (relative mismatch " +
                                 std::to_string(report.max_relative_mismatch) + ")");
    }
}

namespace {

// A double x near level * r with x / r == level exactly, if one exists.
std::optional<double> numerator_for(double level, double r) {
    double x = level * r;
    if (x / r == level) return x;
    for (const double dir : {std::numeric_limits<double>::infinity(), 0.0}) {
        double y = x;
        for (int step = 0; step < 4; ++step) {
            y = std::nextafter(y, dir);
            if (y / r == level) return y;
        }
    }
    return std::nullopt;
}

}  // namespace

SchemeConfig classic_kljn(double r_l, double r_h, double u2_low, double bandwidth) {
    require_resistances({r_l, r_h}, "classic_kljn");
    if (!(r_l < r_h)) throw ConfigurationError("classic_kljn: r_l must be < r_h");
    if (!(u2_low > 0.0)) throw ConfigurationError("classic_kljn: mean square must be > 0");
    if (!(bandwidth > 0.0)) throw ConfigurationError("classic_kljn: bandwidth must be > 0");

    // Mean squares whose per-ohm levels agree bit-for-bit, so the equilibrium
    // power cancels exactly. Division can skip representable quotients, so
    // the shared level may move by a few ulps from u2_low / r_l.
    double level = u2_low / r_l;
    double u2_high = 0.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const auto low = numerator_for(level, r_l);
        const auto high = numerator_for(level, r_h);
        if (low && high) {
            u2_low = *low;
            u2_high = *high;
            break;
        }
        level = std::nextafter(level, std::numeric_limits<double>::infinity());
    }
    if (u2_high == 0.0) u2_high = u2_low / r_l * r_h;

    SchemeConfig c;
    c.kind = SchemeKind::classic;
    c.bandwidth = bandwidth;
    c.at(BranchId::la) = {r_l, u2_low};
    c.at(BranchId::lb) = {r_l, u2_low};
    c.at(BranchId::ha) = {r_h, u2_high};
    c.at(BranchId::hb) = {r_h, u2_high};
    return c;
}

VmgMeanSquares vmg_mean_squares(double r_ha, double r_la, double r_hb, double r_lb, double u2_la) {
    VmgMeanSquares s;
    s.hb = u2_la * (r_lb * (r_ha + r_hb) - r_ha * r_hb - r_hb * r_hb) /
           (r_la * r_la + r_lb * (r_la - r_ha) - r_ha * r_la);
    s.ha = u2_la * (r_lb * (r_ha + r_hb) + r_ha * r_hb + r_ha * r_ha) /
           (r_la * r_la + r_lb * (r_la + r_hb) + r_hb * r_la);
    s.lb = u2_la * (r_lb * (r_ha - r_hb) - r_ha * r_hb + r_lb * r_lb) /
           (r_la * r_la + r_la * (r_hb - r_ha) - r_ha * r_hb);
    return s;
}

VmgMeanSquares vmg_mean_squares_factorized(double r_ha, double r_la, double r_hb, double r_lb,
                                           double u2_la) {
    VmgMeanSquares s;
    s.hb = u2_la * (r_hb - r_lb) * (r_ha + r_hb) / ((r_la + r_lb) * (r_ha - r_la));
    s.ha = u2_la * (r_ha + r_hb) * (r_ha + r_lb) / ((r_la + r_lb) * (r_la + r_hb));
    s.lb = u2_la * (r_hb - r_lb) * (r_ha + r_lb) / ((r_ha - r_la) * (r_la + r_hb));
    return s;
}

SchemeConfig solve_vmg(double r_ha, double r_la, double r_hb, double r_lb, double u2_la,
                       double bandwidth) {
    require_resistances({r_ha, r_la, r_hb, r_lb}, "solve_vmg");
    if (!(u2_la > 0.0)) throw ConfigurationError("solve_vmg: U_LA^2 must be > 0");
    if (!(bandwidth > 0.0)) throw ConfigurationError("solve_vmg: bandwidth must be > 0");
    if (r_ha == r_la) {
        throw UnphysicalSolution("", "solve_vmg: singular denominator (R_HA == R_LA)");
    }
    const auto s = vmg_mean_squares(r_ha, r_la, r_hb, r_lb, u2_la);
    const std::pair<BranchId, double> solved[] = {
        {BranchId::hb, s.hb}, {BranchId::ha, s.ha}, {BranchId::lb, s.lb}};
    for (const auto& [id, value] : solved) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw UnphysicalSolution(std::string(to_string(id)),
                                     "solve_vmg: unphysical solution, U_" +
                                         std::string(to_string(id)) +
                                         "^2 = " + std::to_string(value) + " V^2 (must be > 0)");
        }
    }
    SchemeConfig c;
    c.kind = SchemeKind::vmg;
    c.bandwidth = bandwidth;
    c.at(BranchId::la) = {r_la, u2_la};
    c.at(BranchId::ha) = {r_ha, s.ha};
    c.at(BranchId::hb) = {r_hb, s.hb};
    c.at(BranchId::lb) = {r_lb, s.lb};
    return c;
}

double fck1_fourth_resistor(double r_ha, double r_la, double r_hb) {
    if (!(r_ha > 0.0) || !(r_la > 0.0) || !(r_hb > 0.0))
        throw DomainError("fck1_fourth_resistor: resistances must be > 0");
    return r_hb * r_la / r_ha;
}

SchemeConfig fck1_scheme(double r_ha, double r_la, double r_hb, double u2_la, double bandwidth) {
    const double r_lb = fck1_fourth_resistor(r_ha, r_la, r_hb);
    auto c = solve_vmg(r_ha, r_la, r_hb, r_lb, u2_la, bandwidth);
    c.kind = SchemeKind::fck1;
    return c;
}

std::array<double, 4> branch_temperatures(const SchemeConfig& config) {
    std::array<double, 4> t{};
    for (BranchId id : kAllBranches) {
        const auto& b = config.at(id);
        t[static_cast<std::size_t>(id)] =
            noise_temperature(b.mean_square, b.resistance, config.bandwidth);
    }
    return t;
}

SecurityReport security_check(const SchemeConfig& config) {
    SecurityReport r;
    r.lh = pairing(config, Choice::low, Choice::high);
    r.hl = pairing(config, Choice::high, Choice::low);
    const double power_scale = std::sqrt(std::max(r.lh.u2 * r.lh.i2, r.hl.u2 * r.hl.i2));
    const double power_gap = power_scale > 0.0 ? std::abs(r.lh.p_ab - r.hl.p_ab) / power_scale : 0.0;
    r.max_relative_mismatch =
        std::max({relative_gap(r.lh.u2, r.hl.u2), relative_gap(r.lh.i2, r.hl.i2), power_gap});
    r.zero_power = std::abs(r.lh.p_ab) <= kZeroPowerTolerance * power_scale &&
                   std::abs(r.hl.p_ab) <= kZeroPowerTolerance * power_scale;
    return r;
}

LevelTable level_table(const SchemeConfig& config) {
    auto entry = [&](Choice a, Choice b) {
        const auto m = pairing(config, a, b);
        return LevelEntry{m.u2, m.i2};
    };
    return {entry(Choice::low, Choice::low), entry(Choice::low, Choice::high),
            entry(Choice::high, Choice::low), entry(Choice::high, Choice::high)};
}

}  // namespace kljn
