#include "kljn/errors.hpp"
#include "kljn/seeding.hpp"
#include "kljn/zc_attack.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace kljn;

namespace {

WireTrace make_wire(std::vector<double> u, std::vector<double> i, double fs = 1.0) {
    WireTrace w;
    w.u_c = std::move(u);
    w.i_c = std::move(i);
    w.sample_rate = fs;
    return w;
}

SessionConfig session_for(SchemeConfig scheme, std::size_t samples_per_bit = 16384) {
    SessionConfig s;
    s.scheme = std::move(scheme);
    s.samples_per_bit = samples_per_bit;
    return s;
}

AttackCalibration paper_like_calibration() {
    AttackCalibration cal;
    cal.mean_zc_lh = 0.301;
    cal.mean_zc_hl = 0.576;
    cal.threshold = 0.5 * (0.301 + 0.576);
    cal.polarity = Polarity::hl_above;
    return cal;
}

ExchangeRecord secure_record(std::size_t run, std::size_t bit, BitCase c, std::optional<double> u) {
    ExchangeRecord r;
    r.run = run;
    r.bit = bit;
    r.bit_case = c;
    r.secure = c.secure();
    r.u_zc2 = u;
    r.n_crossings = u ? 1 : 0;
    return r;
}

}  // namespace

TEST_CASE("detect_zero_crossings examples") {
    const auto w = make_wire({2.0, 4.0}, {1.0, -1.0}, 10.0);
    const auto s = detect_zero_crossings(w, ZcMode::interpolated);
    REQUIRE(s.values.size() == 1);
    CHECK(s.values[0] == 3.0);
    CHECK(s.times[0] == doctest::Approx(0.05));
    CHECK(s.mode == ZcMode::interpolated);

    CHECK(detect_zero_crossings(make_wire({1, 1, 1}, {1, 2, 3}), ZcMode::interpolated).values.empty());
    CHECK(detect_zero_crossings(make_wire({1, 1, 1}, {-1, -2, -3}), ZcMode::nearest).values.empty());

    SUBCASE("modes") {
        // crossing between samples 1 and 2, closer to sample 2
        const auto m = make_wire({0.0, 10.0, 20.0, 30.0}, {3.0, 3.0, -1.0, -2.0});
        CHECK(detect_zero_crossings(m, ZcMode::sample_before).values == std::vector<double>{10.0});
        CHECK(detect_zero_crossings(m, ZcMode::sample_after).values == std::vector<double>{20.0});
        CHECK(detect_zero_crossings(m, ZcMode::nearest).values == std::vector<double>{20.0});
        const auto in = detect_zero_crossings(m, ZcMode::interpolated);
        CHECK(in.values[0] == doctest::Approx(17.5));
        CHECK(in.times[0] == doctest::Approx(1.75));
        for (ZcMode mode : {ZcMode::sample_before, ZcMode::sample_after, ZcMode::nearest})
            CHECK(detect_zero_crossings(m, mode).times == in.times);
    }
    SUBCASE("exact zero sample") {
        const auto z = make_wire({5.0, 6.0, 7.0}, {1.0, 0.0, -1.0});
        for (ZcMode mode : {ZcMode::interpolated, ZcMode::sample_before, ZcMode::sample_after,
                            ZcMode::nearest}) {
            const auto s2 = detect_zero_crossings(z, mode);
            REQUIRE(s2.values.size() == 1);
            CHECK(s2.values[0] == 6.0);
            CHECK(s2.times[0] == 1.0);
        }
    }
    CHECK_THROWS_AS(detect_zero_crossings(make_wire({1.0}, {1.0, 2.0}), ZcMode::nearest), ArgumentError);
}

TEST_CASE("crossing times strictly increase and summaries agree") {
    NoiseSpec spec;
    spec.mean_square = 1.0;
    spec.num_samples = 1u << 14;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        spec.seed = seed;
        const auto u = synthesize(spec);
        spec.seed = seed + 100;
        const auto i = synthesize(spec);
        const auto w = make_wire(std::vector<double>(u.samples().begin(), u.samples().end()),
                                 std::vector<double>(i.samples().begin(), i.samples().end()), 16000.0);
        for (ZcMode mode : {ZcMode::interpolated, ZcMode::sample_before, ZcMode::sample_after,
                            ZcMode::nearest}) {
            const auto s = detect_zero_crossings(w, mode);
            REQUIRE(s.values.size() == s.times.size());
            REQUIRE(s.values.size() > 100);
            for (std::size_t k = 1; k < s.times.size(); ++k) REQUIRE(s.times[k] > s.times[k - 1]);
            const auto sum = summarize_crossings(w.u_c, w.i_c, mode);
            CHECK(sum.count == s.values.size());
            CHECK(sum.sum_squares / static_cast<double>(sum.count) ==
                  doctest::Approx(*zc_mean_square(s)).epsilon(1e-12));
        }
    }
}

TEST_CASE("zc_mean_square") {
    CrossingSampleSet s;
    s.values = {3.0, -3.0};
    CHECK(*zc_mean_square(s) == 9.0);
    CHECK_FALSE(zc_mean_square(CrossingSampleSet{}).has_value());
}

TEST_CASE("equilibrium wire: zero-crossing mean square equals wire u2") {
    const auto scheme = classic_kljn(1e3, 10e3, 1.0, 500.0);
    auto session = session_for(scheme, 1u << 17);
    WireTrace w;
    std::vector<double> values;
    for (std::uint64_t b = 0; values.size() < 20000; ++b) {
        observe_bit(session, kCaseLH, 500 + b, w);
        const auto s = detect_zero_crossings(w, ZcMode::interpolated);
        for (double v : s.values) values.push_back(v * v);
    }
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    const double se = oracle::batch_std_error(values, 200);
    const double u2 = security_check(scheme).lh.u2;
    CHECK(std::abs(mean - u2) < 4.0 * se);
    CHECK(mean == doctest::Approx(0.907).epsilon(0.02));
}

TEST_CASE("calibrate") {
    SUBCASE("errors") {
        const auto s = session_for(classic_kljn(1e3, 10e3, 1.0, 500.0));
        CHECK_THROWS_AS(calibrate(s, 99, 1), ConfigurationError);
        // 64 samples at oversample 16 cover two noise periods: too few crossings
        const auto shortbits = session_for(classic_kljn(1e3, 10e3, 1.0, 500.0), 64);
        CHECK_THROWS_AS(calibrate(shortbits, 100, 1), CalibrationError);
    }
    SUBCASE("classic is indistinct") {
        const auto cal = calibrate(session_for(classic_kljn(1e3, 10e3, 1.0, 500.0)), 500, 7);
        CHECK(cal.polarity == Polarity::indistinct);
        CHECK(cal.bits_per_case == 500);
        CHECK(cal.threshold == doctest::Approx(0.5 * (cal.mean_zc_lh + cal.mean_zc_hl)));
        CHECK(cal.mean_crossings_lh > kMinCrossingsPerBit);
    }
    SUBCASE("fck1 is indistinct") {
        const auto cal = calibrate(session_for(fck1_scheme(100e3, 10e3, 10e3, 1.0, 500.0)), 500, 7);
        CHECK(cal.polarity == Polarity::indistinct);
        CHECK(cal.mean_zc_lh == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("calibrate_from sets polarity from separated means") {
        std::vector<BitObservation> lh(200), hl(200);
        for (std::size_t k = 0; k < 200; ++k) {
            lh[k].n_crossings = hl[k].n_crossings = 20;
            lh[k].u_zc2 = 0.301 + 0.01 * ((k % 2) ? 1.0 : -1.0);
            hl[k].u_zc2 = 0.576 + 0.01 * ((k % 2) ? 1.0 : -1.0);
        }
        auto cal = calibrate_from(lh, hl);
        CHECK(cal.polarity == Polarity::hl_above);
        CHECK(cal.threshold == doctest::Approx(0.4385));
        CHECK(cal.threshold > cal.mean_zc_lh);
        CHECK(cal.threshold < cal.mean_zc_hl);
        cal = calibrate_from(hl, lh);
        CHECK(cal.polarity == Polarity::lh_above);
    }
}

TEST_CASE("eve_guess_bit") {
    const auto cal = paper_like_calibration();
    CHECK(eve_guess_bit(0.55, cal, 1) == SecureCase::hl);
    CHECK(eve_guess_bit(0.30, cal, 1) == SecureCase::lh);
    auto flipped = cal;
    flipped.polarity = Polarity::lh_above;
    CHECK(eve_guess_bit(0.55, flipped, 1) == SecureCase::lh);

    SUBCASE("coin flips") {
        auto indistinct = cal;
        indistinct.polarity = Polarity::indistinct;
        const std::size_t n = 20000;
        std::size_t hl = 0, hl_absent = 0;
        for (std::size_t k = 0; k < n; ++k) {
            hl += eve_guess_bit(0.55, indistinct, derive_seed(9, {k})) == SecureCase::hl;
            hl_absent += eve_guess_bit(std::nullopt, cal, derive_seed(10, {k})) == SecureCase::hl;
        }
        const double se = std::sqrt(0.25 / static_cast<double>(n));
        CHECK(std::abs(static_cast<double>(hl) / n - 0.5) < 4.0 * se);
        CHECK(std::abs(static_cast<double>(hl_absent) / n - 0.5) < 4.0 * se);
        CHECK(eve_guess_bit(std::nullopt, cal, 5) == eve_guess_bit(std::nullopt, cal, 5));
    }
}

TEST_CASE("attack_statistics") {
    const auto cal = paper_like_calibration();
    SUBCASE("all correct") {
        std::vector<RunResult> runs(3);
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t b = 0; b < 10; ++b) {
                const bool hl = (b % 3) == 0;
                runs[r].records.push_back(secure_record(r, b, hl ? kCaseHL : kCaseLH, hl ? 0.6 : 0.3));
            }
        }
        const auto out = attack_statistics(runs, cal, 1);
        CHECK(out.p == 1.0);
        CHECK(out.sigma_p == 0.0);
        CHECK(out.n_runs == 3);
        CHECK(out.n_secure_bits == 30);
        CHECK(out.n_correct == 30);
    }
    SUBCASE("per-run averaging and exclusion") {
        std::vector<RunResult> runs(3);
        // run 0: 1 of 2 correct; run 1: only HH; run 2: 4 of 4 correct
        runs[0].records = {secure_record(0, 0, kCaseHL, 0.6), secure_record(0, 1, kCaseHL, 0.2)};
        runs[1].records = {secure_record(1, 0, BitCase{Choice::high, Choice::high}, 5.0)};
        for (std::size_t b = 0; b < 4; ++b) runs[2].records.push_back(secure_record(2, b, kCaseLH, 0.1));
        const auto out = attack_statistics(runs, cal, 1);
        CHECK(out.excluded_runs == 1);
        CHECK(out.n_runs == 2);
        REQUIRE(out.per_run_p.size() == 2);
        CHECK(out.per_run_p[0] == 0.5);
        CHECK(out.per_run_p[1] == 1.0);
        CHECK(out.p == 0.75);
        CHECK(out.sigma_p == doctest::Approx(std::sqrt(0.125)));
        CHECK(out.n_secure_bits == 6);
        CHECK(out.ci_half_width == doctest::Approx(binomial_half_width(5.0 / 6.0, 6)));
    }
    SUBCASE("no secure bit") {
        std::vector<RunResult> runs(1);
        runs[0].records = {secure_record(0, 0, BitCase{Choice::low, Choice::low}, 1.0)};
        CHECK_THROWS_AS(attack_statistics(runs, cal, 1), ArgumentError);
    }
    SUBCASE("classic session gives a coin-flip rate") {
        SessionConfig s = session_for(classic_kljn(1e3, 10e3, 1.0, 500.0));
        s.bits_per_run = 500;
        s.runs = 4;
        const auto c = calibrate(s, 200, 3);
        const auto out = attack_statistics(run_session(s), c, 3);
        CHECK(out.p >= 0.0);
        CHECK(out.p <= 1.0);
        CHECK(std::abs(out.p - 0.5) < 4.0 * std::sqrt(0.25 / static_cast<double>(out.n_secure_bits)) + 0.01);
    }
    CHECK(binomial_half_width(0.5, 10000) == doctest::Approx(0.0098).epsilon(1e-3));
}

TEST_CASE("histogram") {
    const auto h = histogram(std::vector<double>{1, 1, 1}, 1, 0.5, 1.5);
    REQUIRE(h.bins.size() == 1);
    CHECK(h.bins[0].count == 3);

    std::vector<double> grid;
    for (int k = 0; k < 100; ++k) grid.push_back(k + 0.5);
    const auto u = histogram(grid, 10, 0.0, 100.0);
    for (const auto& b : u.bins) CHECK(b.count == 10);
    CHECK(u.bins.back().hi == 100.0);

    const auto o = histogram(std::vector<double>{-1.0, 0.0, 1.0, 2.0, 3.0, std::nan("")}, 2, 0.0, 2.0);
    CHECK(o.underflow == 1);
    CHECK(o.overflow == 2);
    CHECK(o.bins[0].count == 1);
    CHECK(o.bins[1].count == 2);  // upper edge is inclusive

    const auto e = histogram(std::vector<double>{}, 3, 0.0, 1.0);
    for (const auto& b : e.bins) CHECK(b.count == 0);

    CHECK_THROWS_AS(histogram(grid, 0, 0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(histogram(grid, 2, 1.0, 0.0), ArgumentError);
}

TEST_CASE("classic u_zc2 histograms for LH and HL overlap") {
    SessionConfig s = session_for(classic_kljn(1e3, 10e3, 1.0, 500.0));
    const auto lh = observe_case(s, kCaseLH, 300, 5);
    const auto hl = observe_case(s, kCaseHL, 300, 5);
    std::vector<double> a, b;
    for (const auto& o : lh) a.push_back(*o.u_zc2);
    for (const auto& o : hl) b.push_back(*o.u_zc2);
    const auto ha = histogram(a, 10, 0.6, 1.2);
    const auto hb = histogram(b, 10, 0.6, 1.2);
    std::size_t shared = 0;
    for (std::size_t k = 0; k < 10; ++k) shared += std::min(ha.bins[k].count, hb.bins[k].count);
    CHECK(shared > 200);
}

namespace {

double interpolated_zc_mean(const SchemeConfig& scheme, double gamma, std::size_t bits,
                            double& std_error) {
    SessionConfig s = session_for(scheme);
    s.oversample = gamma;
    s.zc_mode = ZcMode::interpolated;
    auto obs = observe_case(s, kCaseLH, bits, 40 + static_cast<std::uint64_t>(gamma));
    const auto hl = observe_case(s, kCaseHL, bits, 41 + static_cast<std::uint64_t>(gamma));
    obs.insert(obs.end(), hl.begin(), hl.end());
    const auto a = aggregate(obs);
    std_error = a.u_zc2.std_error;
    return a.u_zc2.mean;
}

}  // namespace

// Known failure at gamma = 4: linear interpolation between samples of
// band-limited noise loses variance (see the next test case). Registered as
// its own ctest entry.
TEST_CASE("interpolated mode: equilibrium u_zc2 stays at u2 as oversampling grows") {
    for (const auto& scheme : {classic_kljn(1e3, 10e3, 1.0, 500.0), fck1_scheme(100e3, 10e3, 10e3, 1.0, 500.0)}) {
        const double u2 = security_check(scheme).lh.u2;
        for (double gamma : {4.0, 16.0, 64.0}) {
            double se = 0;
            const double m = interpolated_zc_mean(scheme, gamma, 1000, se);
            CAPTURE(to_string(scheme.kind));
            CAPTURE(gamma);
            CAPTURE(m);
            CAPTURE(u2);
            CHECK(std::abs(m - u2) < 4.0 * se);
        }
    }
}

TEST_CASE("interpolated mode: equilibrium bias matches the interpolation variance loss") {
    // At equilibrium U_c is independent of I_c, so the interpolated value
    // (1-f) U_k + f U_{k+1} has mean square u2 (2/3 + r/3) for a crossing
    // fraction f uniform on [0, 1), where r = sinc(pi / gamma) is the one-sample
    // autocorrelation of flat-band noise.
    for (const auto& scheme : {classic_kljn(1e3, 10e3, 1.0, 500.0), fck1_scheme(100e3, 10e3, 10e3, 1.0, 500.0)}) {
        const double u2 = security_check(scheme).lh.u2;
        for (double gamma : {4.0, 16.0, 64.0}) {
            const double x = std::numbers::pi / gamma;
            const double expected = u2 * (2.0 / 3.0 + std::sin(x) / x / 3.0);
            double se = 0;
            const double m = interpolated_zc_mean(scheme, gamma, 1000, se);
            CAPTURE(to_string(scheme.kind));
            CAPTURE(gamma);
            CHECK(std::abs(m - expected) < 4.0 * se);
        }
    }
}
