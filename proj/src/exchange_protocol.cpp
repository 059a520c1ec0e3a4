#include "kljn/exchange_protocol.hpp"

#include "kljn/errors.hpp"
#include "kljn/seeding.hpp"
#include "kljn/zc_attack.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace kljn {

std::string_view to_string(ZcMode mode) {
    switch (mode) {
        case ZcMode::interpolated: return "interpolated";
        case ZcMode::sample_before: return "sample_before";
        case ZcMode::sample_after: return "sample_after";
        case ZcMode::nearest: return "nearest";
    }
    return "?";
}

std::optional<ZcMode> parse_zc_mode(std::string_view text) {
    for (ZcMode m : {ZcMode::interpolated, ZcMode::sample_before, ZcMode::sample_after,
                     ZcMode::nearest}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

std::string BitCase::label() const {
    return std::string(to_string(alice)) + std::string(to_string(bob));
}

std::size_t BitCase::index() const noexcept {
    return (alice == Choice::high ? 2u : 0u) + (bob == Choice::high ? 1u : 0u);
}

void SessionConfig::validate() const {
    scheme.validate();
    if (samples_per_bit < 2) throw ConfigurationError("session: samples_per_bit must be >= 2");
    if (!(oversample >= 1.0) || !std::isfinite(oversample))
        throw ConfigurationError("session: oversample must be >= 1");
    if (bits_per_run < 1) throw ConfigurationError("session: bits_per_run must be >= 1");
    if (runs < 1) throw ConfigurationError("session: runs must be >= 1");
    // One FFT bin inside (0, B] is the least a bit period can carry.
    if (static_cast<double>(samples_per_bit) < 2.0 * oversample * (1.0 - 1e-12))
        throw ConfigurationError("session: samples_per_bit must be >= 2 * oversample");
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

BitObservation observe_bit(const SessionConfig& session, BitCase bit_case,
                           std::uint64_t bit_seed, WireTrace& wire) {
    thread_local std::vector<double> u_alice;
    thread_local std::vector<double> u_bob;

    const auto& scheme = session.scheme;
    const BranchId a_id = branch_of(Party::alice, bit_case.alice);
    const BranchId b_id = branch_of(Party::bob, bit_case.bob);
    const auto& a = scheme.at(a_id);
    const auto& b = scheme.at(b_id);

    NoiseSpec spec;
    spec.bandwidth = scheme.bandwidth;
    spec.sample_rate = session.sample_rate();
    spec.num_samples = session.samples_per_bit;

    spec.mean_square = a.mean_square;
    spec.seed = derive_seed(bit_seed, {static_cast<std::uint64_t>(a_id)});
    synthesize_into(spec, u_alice);

    spec.mean_square = b.mean_square;
    spec.seed = derive_seed(bit_seed, {static_cast<std::uint64_t>(b_id)});
    synthesize_into(spec, u_bob);

    wire.sample_rate = spec.sample_rate;
    wire_observables_into(u_alice, a.resistance, u_bob, b.resistance, wire);

    BitObservation obs;
    obs.moments = measured_moments(wire);
    const auto zc = summarize_crossings(wire.u_c, wire.i_c, session.zc_mode);
    obs.n_crossings = zc.count;
    if (zc.count > 0) obs.u_zc2 = zc.sum_squares / static_cast<double>(zc.count);
    return obs;
}

BitObservation observe_bit(const SessionConfig& session, BitCase bit_case,
                           std::uint64_t bit_seed) {
    thread_local WireTrace wire;
    return observe_bit(session, bit_case, bit_seed, wire);
}

std::vector<BitObservation> observe_case(const SessionConfig& session, BitCase bit_case,
                                         std::size_t count, std::uint64_t seed) {
    std::vector<BitObservation> out(count);
    parallel_for(count, session.threads, [&](std::size_t i) {
        out[i] = observe_bit(session, bit_case, derive_seed(seed, {bit_case.index(), i}));
    });
    return out;
}

BitCase draw_choices(std::uint64_t master_seed, std::size_t run, std::size_t bit) {
    const std::uint64_t r = derive_seed(master_seed, {tag(SeedStream::choices), run, bit});
    return {(r & 1u) ? Choice::high : Choice::low, (r & 2u) ? Choice::high : Choice::low};
}

Classification classify_partner_choice(Party own_party, Choice own_choice, double measured_u2,
                                       const LevelTable& levels) {
    auto level = [&](Choice partner) {
        return own_party == Party::alice ? levels.at(own_choice, partner).u2
                                         : levels.at(partner, own_choice).u2;
    };
    const double d_low = std::abs(measured_u2 - level(Choice::low));
    const double d_high = std::abs(measured_u2 - level(Choice::high));
    if (d_low == d_high) return {Choice::low, true};
    return {d_low < d_high ? Choice::low : Choice::high, false};
}

Classification classify_partner_choice(Party own_party, Choice own_choice, const WireTrace& wire,
                                       const SchemeConfig& scheme) {
    if (wire.size() == 0) throw ArgumentError("classify_partner_choice: empty wire trace");
    double sum = 0.0;
    for (double u : wire.u_c) sum += u * u;
    return classify_partner_choice(own_party, own_choice,
                                   sum / static_cast<double>(wire.size()), level_table(scheme));
}

std::vector<RunResult> run_session(const SessionConfig& session) {
    session.validate();
    const LevelTable levels = level_table(session.scheme);
    std::vector<RunResult> runs(session.runs);
    for (auto& r : runs) r.records.resize(session.bits_per_run);

    const std::size_t total = session.runs * session.bits_per_run;
    parallel_for(total, session.threads, [&](std::size_t task) {
        const std::size_t run = task / session.bits_per_run;
        const std::size_t bit = task % session.bits_per_run;
        const BitCase bit_case = draw_choices(session.master_seed, run, bit);
        const std::uint64_t bit_seed =
            derive_seed(session.master_seed, {tag(SeedStream::branch_noise), run, bit});
        const BitObservation obs = observe_bit(session, bit_case, bit_seed);

        ExchangeRecord& rec = runs[run].records[bit];
        rec.run = run;
        rec.bit = bit;
        rec.bit_case = bit_case;
        rec.moments = obs.moments;
        rec.n_crossings = obs.n_crossings;
        rec.u_zc2 = obs.u_zc2;
        rec.secure = bit_case.secure();
        const auto alice = classify_partner_choice(Party::alice, bit_case.alice, obs.moments.u2, levels);
        const auto bob = classify_partner_choice(Party::bob, bit_case.bob, obs.moments.u2, levels);
        rec.alice_inference = alice.partner;
        rec.bob_inference = bob.partner;
        rec.classification_tie = alice.tie || bob.tie;
    });

    for (auto& r : runs) {
        for (const auto& rec : r.records) {
            if (rec.secure) ++r.secure_count;
            if (rec.alice_inference != rec.bit_case.bob || rec.bob_inference != rec.bit_case.alice)
                ++r.classification_error_count;
        }
    }
    return runs;
}

std::vector<ExchangeRecord> filter_secure_bits(std::span<const ExchangeRecord> records) {
    std::vector<ExchangeRecord> out;
    for (const auto& r : records) {
        if (r.bit_case.secure()) out.push_back(r);
    }
    return out;
}

bool key_bit(const ExchangeRecord& record, bool hl_value) {
    if (!record.bit_case.secure()) throw ArgumentError("key_bit: record is not a secure bit");
    return record.bit_case == kCaseHL ? hl_value : !hl_value;
}

MeanWithError mean_with_error(std::span<const double> values) {
    MeanWithError m;
    m.n = values.size();
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std_error = std::sqrt(ss / static_cast<double>(m.n - 1) / static_cast<double>(m.n));
    }
    return m;
}

namespace {

struct Columns {
    std::vector<double> u2, i2, p_ab, u_zc2, n_crossings;

    void add(const MomentSummary& m, std::size_t crossings, const std::optional<double>& zc) {
        u2.push_back(m.u2);
        i2.push_back(m.i2);
        p_ab.push_back(m.p_ab);
        n_crossings.push_back(static_cast<double>(crossings));
        if (zc) u_zc2.push_back(*zc);
    }

    CaseAggregate finish() const {
        return {mean_with_error(u2), mean_with_error(i2), mean_with_error(p_ab),
                mean_with_error(u_zc2), mean_with_error(n_crossings)};
    }
};

}  // namespace

std::array<CaseAggregate, 4> aggregate_by_case(std::span<const RunResult> runs) {
    std::array<Columns, 4> cols;
    for (const auto& run : runs) {
        for (const auto& rec : run.records) {
            cols[rec.bit_case.index()].add(rec.moments, rec.n_crossings, rec.u_zc2);
        }
    }
    return {cols[0].finish(), cols[1].finish(), cols[2].finish(), cols[3].finish()};
}

CaseAggregate aggregate(std::span<const BitObservation> bits) {
    Columns cols;
    for (const auto& b : bits) cols.add(b.moments, b.n_crossings, b.u_zc2);
    return cols.finish();
}

}  // namespace kljn
