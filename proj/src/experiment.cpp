#include "kljn/experiment.hpp"

#include "kljn/errors.hpp"
#include "kljn/seeding.hpp"
#include "kljn/zc_attack.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace kljn {

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw std::invalid_argument("not a finite number: '" + std::string(v) + "'");
    return out;
}

template <typename Int>
Int parse_integer(std::string_view v) {
    Int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("not a non-negative integer: '" + std::string(v) + "'");
    return out;
}

SchemeKind parse_scheme(std::string_view v) {
    for (SchemeKind k : {SchemeKind::classic, SchemeKind::vmg, SchemeKind::fck1}) {
        if (to_string(k) == v) return k;
    }
    throw std::invalid_argument("unknown scheme '" + std::string(v) + "' (classic, vmg, fck1)");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"scheme", [](auto& c, auto v) { c.scheme = parse_scheme(v); }},
        {"r_l", [](auto& c, auto v) { c.r_l = parse_number(v); }},
        {"r_h", [](auto& c, auto v) { c.r_h = parse_number(v); }},
        {"r_ha", [](auto& c, auto v) { c.r_ha = parse_number(v); }},
        {"r_la", [](auto& c, auto v) { c.r_la = parse_number(v); }},
        {"r_hb", [](auto& c, auto v) { c.r_hb = parse_number(v); }},
        {"r_lb", [](auto& c, auto v) { c.r_lb = parse_number(v); }},
        {"u_la_sq", [](auto& c, auto v) { c.u_la_sq = parse_number(v); }},
        {"bandwidth_hz", [](auto& c, auto v) { c.bandwidth_hz = parse_number(v); }},
        {"oversample", [](auto& c, auto v) { c.oversample = parse_number(v); }},
        {"samples_per_bit", [](auto& c, auto v) { c.samples_per_bit = parse_integer<std::size_t>(v); }},
        {"bits_per_run", [](auto& c, auto v) { c.bits_per_run = parse_integer<std::size_t>(v); }},
        {"runs", [](auto& c, auto v) { c.runs = parse_integer<std::size_t>(v); }},
        {"seed", [](auto& c, auto v) { c.seed = parse_integer<std::uint64_t>(v); }},
        {"zc_mode",
         [](auto& c, auto v) {
             auto m = parse_zc_mode(v);
             if (!m) {
                 throw std::invalid_argument(
                     "unknown zc_mode '" + std::string(v) +
                     "' (interpolated, sample_before, sample_after, nearest)");
             }
             c.zc_mode = *m;
         }},
        {"calibration_bits",
         [](auto& c, auto v) { c.calibration_bits = parse_integer<std::size_t>(v); }},
        {"output",
         [](auto& c, auto v) {
             if (v.empty()) throw std::invalid_argument("output prefix must not be empty");
             c.output = std::string(v);
         }},
    };
    return table;
}

// Where each key was set, for error messages.
class KeySources {
public:
    void set(const std::string& key, std::string where) { where_[key] = std::move(where); }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        auto it = where_.find(key);
        const std::string where = it == where_.end() ? "default" : it->second;
        throw ConfigurationError(where + ": " + key + ": " + message);
    }

    bool has(const std::string& key) const { return where_.contains(key); }

private:
    std::map<std::string, std::string> where_;
};

void validate(ExperimentConfig& c, const KeySources& src) {
    auto positive = [&](const std::optional<double>& v, const char* key) {
        if (v && !(*v > 0.0)) src.fail(key, "must be > 0");
    };
    positive(c.r_l, "r_l");
    positive(c.r_h, "r_h");
    positive(c.r_ha, "r_ha");
    positive(c.r_la, "r_la");
    positive(c.r_hb, "r_hb");
    positive(c.r_lb, "r_lb");
    if (!(c.u_la_sq > 0.0)) src.fail("u_la_sq", "must be > 0");
    if (!(c.bandwidth_hz > 0.0)) src.fail("bandwidth_hz", "must be > 0");
    if (!(c.oversample >= 1.0)) src.fail("oversample", "must be >= 1");
    if (c.samples_per_bit < 2) src.fail("samples_per_bit", "must be >= 2");
    if (static_cast<double>(c.samples_per_bit) < 2.0 * c.oversample)
        src.fail("samples_per_bit", "must be >= 2 * oversample so a bit holds an in-band bin");
    if (c.bits_per_run < 1) src.fail("bits_per_run", "must be >= 1");
    if (c.runs < 1) src.fail("runs", "must be >= 1");
    if (c.calibration_bits < kMinCalibrationBits) src.fail("calibration_bits", "must be >= 100");

    const std::string kind(to_string(c.scheme));
    auto require = [&](const std::optional<double>& v, const char* key) {
        if (!v) src.fail(key, "missing; required by scheme " + kind);
    };
    auto forbid = [&](const std::optional<double>& v, const char* key) {
        if (v) src.fail(key, "not used by scheme " + kind);
    };
    switch (c.scheme) {
        case SchemeKind::classic:
            require(c.r_l, "r_l");
            require(c.r_h, "r_h");
            for (auto [v, key] : {std::pair{&c.r_ha, "r_ha"}, {&c.r_la, "r_la"},
                                  {&c.r_hb, "r_hb"}, {&c.r_lb, "r_lb"}})
                forbid(*v, key);
            if (!(*c.r_l < *c.r_h)) src.fail("r_h", "must be greater than r_l");
            break;
        case SchemeKind::vmg:
        case SchemeKind::fck1:
            forbid(c.r_l, "r_l");
            forbid(c.r_h, "r_h");
            require(c.r_ha, "r_ha");
            require(c.r_la, "r_la");
            require(c.r_hb, "r_hb");
            if (c.scheme == SchemeKind::vmg) {
                require(c.r_lb, "r_lb");
            } else {
                const double derived = fck1_fourth_resistor(*c.r_ha, *c.r_la, *c.r_hb);
                if (c.r_lb && std::abs(*c.r_lb - derived) > 1e-9 * derived) {
                    src.fail("r_lb", "must equal r_hb * r_la / r_ha = " + format_double(derived) +
                                         " for scheme fck1 (or be omitted)");
                }
                c.r_lb = derived;
            }
            break;
    }
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::ofstream open_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + path + "' for writing");
    return out;
}

void close_output(std::ofstream& file, const std::string& path) {
    file.close();
    if (!file) throw IoError("failed writing output file '" + path + "'");
}

void write_metadata(std::ostream& os, std::string_view command, const ExperimentConfig& c) {
    os << "# kljn " << kVersion << '\n';
    os << "# command: " << command << '\n';
    os << "# config_hash: " << config_hash(c) << '\n';
    os << "# seed: " << c.seed << '\n';
    os << "# generator: " << kGeneratorName << '\n';
    std::istringstream lines(serialize_config(c));
    for (std::string line; std::getline(lines, line);) os << "# config: " << line << '\n';
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

// Runs a command body and maps exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const UnphysicalSolution& e) {
        err << "error: " << e.what() << '\n';
        if (!e.branch().empty()) err << "offending branch: " << e.branch() << '\n';
        return kExitUnphysical;
    } catch (const ConfigurationError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CalibrationError& e) {
        err << "calibration error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

std::string pm(const MeanWithError& m) {
    return fmt::format("{:.6g} +- {:.2g}", m.mean, m.std_error);
}

const std::array<BitCase, 4> kCases{BitCase{Choice::low, Choice::low}, kCaseLH, kCaseHL,
                                    BitCase{Choice::high, Choice::high}};

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides) {
    ExperimentConfig c;
    KeySources src;
    std::map<std::string, int> seen;

    auto apply = [&](std::string_view key_text, std::string_view value, const std::string& where) {
        const std::string key(trim(key_text));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigurationError(where + ": unknown key '" + key + "'");
        src.set(key, where);
        try {
            it->second(c, trim(value));
        } catch (const std::invalid_argument& e) {
            src.fail(key, e.what());
        }
    };

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(line_no);
        if (eq == std::string_view::npos)
            throw ConfigurationError(where + ": expected 'key = value', got '" + std::string(line) + "'");
        const std::string key(trim(line.substr(0, eq)));
        if (seen.contains(key)) {
            throw ConfigurationError(where + ": " + key + ": duplicate key (first set on line " +
                                     std::to_string(seen[key]) + ")");
        }
        seen[key] = line_no;
        apply(key, line.substr(eq + 1), where);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw ConfigurationError("override '" + o + "': expected key=value");
        apply(std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1),
              "override '" + o + "'");
    }
    validate(c, src);
    return c;
}

std::string serialize_config(const ExperimentConfig& c) {
    std::string s;
    auto put = [&](std::string_view key, const std::string& value) {
        s += key;
        s += " = ";
        s += value;
        s += '\n';
    };
    auto put_opt = [&](std::string_view key, const std::optional<double>& v) {
        if (v) put(key, format_double(*v));
    };
    put("scheme", std::string(to_string(c.scheme)));
    put_opt("r_l", c.r_l);
    put_opt("r_h", c.r_h);
    put_opt("r_ha", c.r_ha);
    put_opt("r_la", c.r_la);
    put_opt("r_hb", c.r_hb);
    put_opt("r_lb", c.r_lb);
    put("u_la_sq", format_double(c.u_la_sq));
    put("bandwidth_hz", format_double(c.bandwidth_hz));
    put("oversample", format_double(c.oversample));
    put("samples_per_bit", std::to_string(c.samples_per_bit));
    put("bits_per_run", std::to_string(c.bits_per_run));
    put("runs", std::to_string(c.runs));
    put("seed", std::to_string(c.seed));
    put("zc_mode", std::string(to_string(c.zc_mode)));
    put("calibration_bits", std::to_string(c.calibration_bits));
    put("output", c.output);
    return s;
}

std::string config_hash(const ExperimentConfig& config) {
    return fmt::format("{:016x}", fnv1a(serialize_config(config)));
}

SchemeConfig build_scheme(const ExperimentConfig& c) {
    switch (c.scheme) {
        case SchemeKind::classic:
            return classic_kljn(c.r_l.value(), c.r_h.value(), c.u_la_sq, c.bandwidth_hz);
        case SchemeKind::vmg:
            return solve_vmg(c.r_ha.value(), c.r_la.value(), c.r_hb.value(), c.r_lb.value(),
                             c.u_la_sq, c.bandwidth_hz);
        case SchemeKind::fck1:
            return fck1_scheme(c.r_ha.value(), c.r_la.value(), c.r_hb.value(), c.u_la_sq,
                               c.bandwidth_hz);
    }
    throw ConfigurationError("unknown scheme kind");
}

SessionConfig session_config(const ExperimentConfig& c, unsigned threads) {
    SessionConfig s;
    s.scheme = build_scheme(c);
    s.samples_per_bit = c.samples_per_bit;
    s.oversample = c.oversample;
    s.bits_per_run = c.bits_per_run;
    s.runs = c.runs;
    s.master_seed = c.seed;
    s.zc_mode = c.zc_mode;
    s.threads = threads;
    return s;
}

// ---------------------------------------------------------------------------
// Reference rows

std::span<const ReferenceRow> reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        {"KLJN", SchemeKind::classic, 10e3, 1e3, 10e3, 1e3, 0.908, 0.091e-6, 0.0, 0.907, 0.908,
         0.5002, 0.0091},
        {"VMG-1", SchemeKind::vmg, 16.7e3, 100, 16.7e3, 278, 0.991, 0.314e-6, 0.026e-3, 0.989,
         1.009, 0.5885, 0.0022},
        {"VMG-2", SchemeKind::vmg, 46416, 278, 278, 100, 0.368, 4.786e-6, 0.471e-3, 0.301, 0.576,
         0.7006, 0.0053},
        {"VMG-3", SchemeKind::vmg, 360e3, 100, 6e3, 2.2e3, 0.967, 0.073e-6, 0.156e-3, 0.675,
         0.845, 0.6281, 0.0021},
        {"FCK1", SchemeKind::fck1, 100e3, 10e3, 10e3, 1e3, 0.500, 0.005e-6, 0.0, 0.498, 0.502,
         0.5028, 0.0091},
    };
    return rows;
}

SchemeConfig reference_scheme(const ReferenceRow& row, double u_la_sq, double bandwidth) {
    switch (row.kind) {
        case SchemeKind::classic: return classic_kljn(row.r_la, row.r_ha, u_la_sq, bandwidth);
        case SchemeKind::vmg:
            return solve_vmg(row.r_ha, row.r_la, row.r_hb, row.r_lb, u_la_sq, bandwidth);
        case SchemeKind::fck1: return fck1_scheme(row.r_ha, row.r_la, row.r_hb, u_la_sq, bandwidth);
    }
    throw ConfigurationError("unknown scheme kind");
}

const ReferenceRow* find_reference_row(const SchemeConfig& scheme) {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); };
    for (const auto& row : reference_rows()) {
        if (close(scheme.at(BranchId::ha).resistance, row.r_ha) &&
            close(scheme.at(BranchId::la).resistance, row.r_la) &&
            close(scheme.at(BranchId::hb).resistance, row.r_hb) &&
            close(scheme.at(BranchId::lb).resistance, row.r_lb))
            return &row;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const SchemeConfig scheme = build_scheme(config);
        const auto temps = branch_temperatures(scheme);
        const auto report = security_check(scheme);

        const std::string path = config.output + "_solution.csv";
        auto file = open_output(path);
        write_metadata(file, "solve", config);
        file << "branch,resistance_ohm,mean_square_v2,temperature_k\n";

        fmt::print(out, "scheme: {}  bandwidth: {} Hz\n", to_string(scheme.kind), scheme.bandwidth);
        fmt::print(out, "{:<6} {:>14} {:>16} {:>16}\n", "branch", "R [ohm]", "U^2 [V^2]", "T [K]");
        for (BranchId id : kAllBranches) {
            const auto& b = scheme.at(id);
            const double t = temps[static_cast<std::size_t>(id)];
            fmt::print(out, "{:<6} {:>14.6g} {:>16.6g} {:>16.6g}\n", to_string(id), b.resistance,
                       b.mean_square, t);
            file << to_string(id) << ',' << format_double(b.resistance) << ','
                 << format_double(b.mean_square) << ',' << format_double(t) << '\n';
        }
        auto moments = [&](const char* label, const MomentSummary& m) {
            fmt::print(out, "{}: U_c^2 = {:.6g} V^2, I_c^2 = {:.6g} A^2, P_AB = {:.6g} W, rho = {:.6g}\n",
                       label, m.u2, m.i2, m.p_ab, m.rho);
            file << "# " << label << ": u2=" << format_double(m.u2) << " i2=" << format_double(m.i2)
                 << " p_ab=" << format_double(m.p_ab) << '\n';
        };
        moments("LH", report.lh);
        moments("HL", report.hl);
        fmt::print(out, "max relative LH/HL mismatch: {:.3g}\n", report.max_relative_mismatch);
        if (report.zero_power) {
            fmt::print(out, "equilibrium: yes; P_AB = 0\n");
        } else {
            fmt::print(out, "equilibrium: no; P_AB = {:.6g} W\n", report.lh.p_ab);
        }
        file << "# max_relative_mismatch=" << format_double(report.max_relative_mismatch)
             << " zero_power=" << (report.zero_power ? "yes" : "no") << '\n';
        close_output(file, path);
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

// ---------------------------------------------------------------------------
// simulate

namespace {

void print_case_table(std::ostream& out, const std::array<CaseAggregate, 4>& agg) {
    fmt::print(out, "{:<4} {:>7} {:>26} {:>26} {:>26} {:>26} {:>9}\n", "case", "bits",
               "U_c^2 [V^2]", "I_c^2 [A^2]", "P_AB [W]", "U_c,zc^2 [V^2]", "n_zc");
    for (const auto& bc : kCases) {
        const auto& a = agg[bc.index()];
        if (a.u2.n == 0) continue;
        fmt::print(out, "{:<4} {:>7} {:>26} {:>26} {:>26} {:>26} {:>9.1f}\n", bc.label(), a.u2.n,
                   pm(a.u2), pm(a.i2), pm(a.p_ab), pm(a.u_zc2), a.n_crossings.mean);
    }
}

}  // namespace

int cmd_simulate(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
                 unsigned threads) {
    return guarded(err, [&] {
        const SessionConfig session = session_config(config, threads);
        const auto runs = run_session(session);

        const std::string path = config.output + "_bits.csv";
        auto file = open_output(path);
        write_metadata(file, "simulate", config);
        file << "run,bit,alice,bob,case,u2,i2,p_ab,n_zc,u_zc2,secure\n";
        std::size_t errors = 0;
        std::size_t secure = 0;
        for (const auto& run : runs) {
            errors += run.classification_error_count;
            secure += run.secure_count;
            for (const auto& r : run.records) {
                file << r.run << ',' << r.bit << ',' << to_string(r.bit_case.alice) << ','
                     << to_string(r.bit_case.bob) << ',' << r.bit_case.label() << ','
                     << format_double(r.moments.u2) << ',' << format_double(r.moments.i2) << ','
                     << format_double(r.moments.p_ab) << ',' << r.n_crossings << ','
                     << optional_number(r.u_zc2) << ',' << (r.secure ? 1 : 0) << '\n';
            }
        }
        close_output(file, path);

        const auto agg = aggregate_by_case(runs);
        const std::size_t total = session.runs * session.bits_per_run;
        fmt::print(out, "scheme {} | {} runs x {} bits | f_s = {} Hz | {} samples/bit | zc_mode {}\n",
                   to_string(session.scheme.kind), session.runs, session.bits_per_run,
                   session.sample_rate(), session.samples_per_bit, to_string(session.zc_mode));
        print_case_table(out, agg);
        const auto report = security_check(session.scheme);
        fmt::print(out, "analytic secure level: U_c^2 = {:.6g} V^2, I_c^2 = {:.6g} A^2, P_AB = {:.6g} W\n",
                   report.lh.u2, report.lh.i2, report.lh.p_ab);
        fmt::print(out, "secure bits: {} of {}; classification errors: {}\n", secure, total, errors);
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

// ---------------------------------------------------------------------------
// attack

int cmd_attack(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads) {
    return guarded(err, [&] {
        const SessionConfig session = session_config(config, threads);
        const auto cal = calibrate(session, config.calibration_bits, config.seed);
        const auto runs = run_session(session);
        const auto outcome = attack_statistics(runs, cal, config.seed);
        const auto agg = aggregate_by_case(runs);
        const auto report = security_check(session.scheme);

        const std::string path = config.output + "_attack.csv";
        auto file = open_output(path);
        write_metadata(file, "attack", config);
        file << "run,n_secure,p_run\n";
        std::size_t contributing = 0;
        for (const auto& run : runs) {
            if (run.secure_count == 0) continue;
            file << run.records.front().run << ',' << run.secure_count << ','
                 << format_double(outcome.per_run_p[contributing++]) << '\n';
        }
        const auto& lh = agg[kCaseLH.index()];
        const auto& hl = agg[kCaseHL.index()];
        std::vector<std::pair<std::string, std::string>> footer = {
            {"p", format_double(outcome.p)},
            {"sigma_p", format_double(outcome.sigma_p)},
            {"ci95_half_width", format_double(outcome.ci_half_width)},
            {"n_secure_bits", std::to_string(outcome.n_secure_bits)},
            {"n_runs", std::to_string(outcome.n_runs)},
            {"excluded_runs", std::to_string(outcome.excluded_runs)},
            {"calibration_mean_zc_lh", format_double(cal.mean_zc_lh)},
            {"calibration_mean_zc_hl", format_double(cal.mean_zc_hl)},
            {"threshold", format_double(cal.threshold)},
            {"polarity", std::string(to_string(cal.polarity))},
            {"zc_mode", std::string(to_string(session.zc_mode))},
            {"oversample", format_double(session.oversample)},
            {"session_mean_zc_lh", format_double(lh.u_zc2.mean)},
            {"session_mean_zc_hl", format_double(hl.u_zc2.mean)},
            {"session_crossings_lh", format_double(lh.n_crossings.mean)},
            {"session_crossings_hl", format_double(hl.n_crossings.mean)},
            {"session_crossings_lh_se", format_double(lh.n_crossings.std_error)},
            {"session_crossings_hl_se", format_double(hl.n_crossings.std_error)},
            {"continuum_zc_variance", format_double(conditional_zc_variance(report.lh))},
        };
        const ReferenceRow* row = find_reference_row(session.scheme);
        if (row) {
            footer.emplace_back("published_p", format_double(row->p_guess));
            footer.emplace_back("published_sigma_p", format_double(row->sigma_p));
        }
        for (const auto& [k, v] : footer) file << "# " << k << '=' << v << '\n';
        close_output(file, path);

        fmt::print(out, "scheme {} | zc_mode {} | oversample {} | {} runs x {} bits\n",
                   to_string(session.scheme.kind), to_string(session.zc_mode), session.oversample,
                   session.runs, session.bits_per_run);
        fmt::print(out, "calibration ({} bits/case): mean U_zc^2 LH = {:.6g} +- {:.2g}, HL = {:.6g} +- {:.2g}\n",
                   cal.bits_per_case, cal.mean_zc_lh, cal.std_error_lh, cal.mean_zc_hl,
                   cal.std_error_hl);
        fmt::print(out, "threshold = {:.6g} V^2, polarity = {}\n", cal.threshold, to_string(cal.polarity));
        fmt::print(out, "continuum-limit U_zc^2 (both cases) = {:.6g} V^2, wire U_c^2 = {:.6g} V^2\n",
                   conditional_zc_variance(report.lh), report.lh.u2);
        fmt::print(out, "p = {:.4f}  sigma_p = {:.4f}  95% CI half-width = {:.4f}  ({} secure bits, {} runs)\n",
                   outcome.p, outcome.sigma_p, outcome.ci_half_width, outcome.n_secure_bits,
                   outcome.n_runs);
        if (row) {
            fmt::print(out,
                       "published ({}): p = {:.4f}, sigma_p = {:.4f}; simulated - published = {:+.4f} "
                       "[experiment output, not asserted]\n",
                       row->name, row->p_guess, row->sigma_p, outcome.p - row->p_guess);
        }
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

// ---------------------------------------------------------------------------
// hist

std::optional<HistStatistic> parse_hist_statistic(std::string_view text) {
    if (text == "u2") return HistStatistic::u2;
    if (text == "i2") return HistStatistic::i2;
    if (text == "u_zc2") return HistStatistic::u_zc2;
    return std::nullopt;
}

int cmd_hist(const ExperimentConfig& config, HistStatistic statistic, std::size_t bins,
             std::ostream& out, std::ostream& err, unsigned threads) {
    return guarded(err, [&] {
        if (bins < 1) throw ConfigurationError("hist: bins must be >= 1");
        const SessionConfig session = session_config(config, threads);
        const auto runs = run_session(session);

        std::vector<double> values[2];  // LH, HL
        for (const auto& run : runs) {
            for (const auto& r : run.records) {
                if (!r.secure) continue;
                auto& dst = values[r.bit_case == kCaseHL ? 1 : 0];
                switch (statistic) {
                    case HistStatistic::u2: dst.push_back(r.moments.u2); break;
                    case HistStatistic::i2: dst.push_back(r.moments.i2); break;
                    case HistStatistic::u_zc2:
                        if (r.u_zc2) dst.push_back(*r.u_zc2);
                        break;
                }
            }
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& v : values) {
            for (double x : v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
        if (!(lo <= hi)) lo = hi = 0.0;

        const std::string stat_name = statistic == HistStatistic::u2   ? "u2"
                                      : statistic == HistStatistic::i2 ? "i2"
                                                                       : "u_zc2";
        const std::string path = config.output + "_hist.csv";
        auto file = open_output(path);
        write_metadata(file, "hist", config);
        file << "stat,case,bin_lo,bin_hi,count\n";
        const char* labels[2] = {"LH", "HL"};
        for (int c = 0; c < 2; ++c) {
            const auto h = histogram(values[c], bins, lo, hi);
            const auto m = mean_with_error(values[c]);
            fmt::print(out, "{} {}: {} bits, mean {:.6g} +- {:.2g}\n", stat_name, labels[c],
                       values[c].size(), m.mean, m.std_error);
            for (const auto& b : h.bins) {
                file << stat_name << ',' << labels[c] << ',' << format_double(b.lo) << ','
                     << format_double(b.hi) << ',' << b.count << '\n';
            }
        }
        close_output(file, path);
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

// ---------------------------------------------------------------------------
// table1 / table2

namespace {

SessionConfig row_session(const ExperimentConfig& config, const ReferenceRow& row, unsigned threads) {
    SessionConfig s;
    s.scheme = reference_scheme(row, config.u_la_sq, config.bandwidth_hz);
    s.samples_per_bit = config.samples_per_bit;
    s.oversample = config.oversample;
    s.bits_per_run = config.bits_per_run;
    s.runs = config.runs;
    s.master_seed = config.seed;
    s.zc_mode = config.zc_mode;
    s.threads = threads;
    s.validate();
    return s;
}

}  // namespace

int cmd_table1(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads) {
    return guarded(err, [&] {
        const std::string path = config.output + "_table1.csv";
        auto file = open_output(path);
        write_metadata(file, "table1", config);
        file << "scheme,case,r_a,r_b,bits,u2_sim,u2_se,u2_analytic,u2_published,i2_sim,i2_se,"
                "i2_analytic,i2_published,p_ab_sim,p_ab_se,p_ab_analytic,p_ab_published,"
                "u_zc2_sim,u_zc2_se,u_zc2_published,u_zc2_continuum,n_zc_mean\n";
        const std::size_t bits = config.bits_per_run * config.runs;
        fmt::print(out, "{} bits per case | f_s = {} Hz | {} samples/bit | zc_mode {}\n", bits,
                   2.0 * config.oversample * config.bandwidth_hz, config.samples_per_bit,
                   to_string(config.zc_mode));
        fmt::print(out, "{:<6} {:<3} {:>10} {:>10} {:>10} {:>11} {:>11} {:>11} {:>10} {:>10} {:>9} {:>9} {:>9}\n",
                   "scheme", "bit", "U2 sim", "U2 pub", "I2 sim", "I2 pub", "P sim", "P pub",
                   "Uzc2 sim", "+-", "Uzc2 pub", "continuum", "n_zc");
        std::size_t index = 0;
        for (const auto& row : reference_rows()) {
            const SessionConfig session = row_session(config, row, threads);
            const std::uint64_t seed = derive_seed(config.seed, {index++});
            for (const BitCase bc : {kCaseLH, kCaseHL}) {
                const auto obs = observe_case(session, bc, bits, seed);
                const auto a = aggregate(obs);
                const auto& ra = session.scheme.at(branch_of(Party::alice, bc.alice));
                const auto& rb = session.scheme.at(branch_of(Party::bob, bc.bob));
                const auto exact = analytic_moments(ra.resistance, ra.mean_square, rb.resistance,
                                                    rb.mean_square);
                const double published_zc = bc == kCaseLH ? row.u_zc2_lh : row.u_zc2_hl;
                const double continuum = conditional_zc_variance(exact);
                file << row.name << ',' << bc.label() << ',' << format_double(ra.resistance) << ','
                     << format_double(rb.resistance) << ',' << bits << ','
                     << format_double(a.u2.mean) << ',' << format_double(a.u2.std_error) << ','
                     << format_double(exact.u2) << ',' << format_double(row.u2) << ','
                     << format_double(a.i2.mean) << ',' << format_double(a.i2.std_error) << ','
                     << format_double(exact.i2) << ',' << format_double(row.i2) << ','
                     << format_double(a.p_ab.mean) << ',' << format_double(a.p_ab.std_error) << ','
                     << format_double(exact.p_ab) << ',' << format_double(row.p_ab) << ','
                     << format_double(a.u_zc2.mean) << ',' << format_double(a.u_zc2.std_error) << ','
                     << format_double(published_zc) << ',' << format_double(continuum) << ','
                     << format_double(a.n_crossings.mean) << '\n';
                fmt::print(out,
                           "{:<6} {:<3} {:>10.4g} {:>10.4g} {:>10.4g} {:>11.4g} {:>11.4g} {:>11.4g} "
                           "{:>10.4g} {:>10.2g} {:>9.4g} {:>9.4g} {:>9.1f}\n",
                           row.name, bc.label(), a.u2.mean, row.u2, a.i2.mean, row.i2, a.p_ab.mean,
                           row.p_ab, a.u_zc2.mean, a.u_zc2.std_error, published_zc, continuum,
                           a.n_crossings.mean);
            }
        }
        close_output(file, path);
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

int cmd_table2(const ExperimentConfig& config, std::ostream& out, std::ostream& err,
               unsigned threads) {
    return guarded(err, [&] {
        const std::string path = config.output + "_table2.csv";
        auto file = open_output(path);
        write_metadata(file, "table2", config);
        file << "scheme,p_ab_analytic,p,sigma_p,ci95_half_width,n_secure,published_p,"
                "published_sigma_p,mean_zc_lh,mean_zc_hl,threshold,polarity,zc_mode,oversample\n";
        fmt::print(out, "{} runs x {} bits | zc_mode {} | oversample {}\n", config.runs,
                   config.bits_per_run, to_string(config.zc_mode), config.oversample);
        fmt::print(out, "{:<6} {:>11} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>11}\n", "scheme",
                   "P_AB [W]", "p", "sigma_p", "CI95+-", "p pub", "sig pub", "cal LH", "cal HL",
                   "polarity");
        std::size_t index = 0;
        for (const auto& row : reference_rows()) {
            SessionConfig session = row_session(config, row, threads);
            const std::uint64_t seed = derive_seed(config.seed, {index++});
            session.master_seed = seed;
            const auto cal = calibrate(session, config.calibration_bits, seed);
            const auto runs = run_session(session);
            const auto o = attack_statistics(runs, cal, seed);
            const double power = security_check(session.scheme).lh.p_ab;
            file << row.name << ',' << format_double(power) << ',' << format_double(o.p) << ','
                 << format_double(o.sigma_p) << ',' << format_double(o.ci_half_width) << ','
                 << o.n_secure_bits << ',' << format_double(row.p_guess) << ','
                 << format_double(row.sigma_p) << ',' << format_double(cal.mean_zc_lh) << ','
                 << format_double(cal.mean_zc_hl) << ',' << format_double(cal.threshold) << ','
                 << to_string(cal.polarity) << ',' << to_string(session.zc_mode) << ','
                 << format_double(session.oversample) << '\n';
            fmt::print(out, "{:<6} {:>11.4g} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>10.4g} {:>10.4g} {:>11}\n",
                       row.name, power, o.p, o.sigma_p, o.ci_half_width, row.p_guess, row.sigma_p,
                       cal.mean_zc_lh, cal.mean_zc_hl, to_string(cal.polarity));
        }
        close_output(file, path);
        fmt::print(out, "wrote {}\n", path);
        return int{kExitOk};
    });
}

}  // namespace kljn
