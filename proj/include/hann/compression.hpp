#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hann/common.hpp"
#include "hann/geometry.hpp"
#include "hann/hac.hpp"
#include "hann/minnorm.hpp"

namespace hann::compression {

using geometry::Arrangement;
using geometry::SignVector;
using hac::HacClassifier;
using hac::LabeledSample;

inline int ceil_log2(int k) {
    if (k < 1) throw std::invalid_argument("ceil_log2: k must be >= 1");
    int bits = 0;
    while ((1 << bits) < k) ++bits;
    return bits;
}

/// One retained margin constraint: the sign of sample relative to hyperplane
/// `hyperplane_index`, paired index-by-index with qp_samples.
struct SideInfoEntry {
    int sign_bit;          // +-1
    int hyperplane_index;  // in [0, k)
};

struct SideInfo {
    std::vector<SideInfoEntry> entries;
    int k = 1;

    std::size_t bit_cost() const { return entries.size() * (1 + static_cast<std::size_t>(ceil_log2(k))); }
};

struct CompressedSample {
    std::vector<LabeledSample> qp_samples;     // <= (d+1)k, aligned with side_info
    SideInfo side_info;
    std::vector<LabeledSample> table_samples;  // <= C(k, <= r)
    int d = 1, r = 1, k = 1;
};

struct SchemeSize {
    std::uint64_t m_samples;
    std::uint64_t s_bits;
    std::uint64_t total;
};

/// Size of the compression scheme for given dimensions:
/// m = k(d+1) + C(k,<=r) retained samples, s = k(d+1)(1+ceil(log2 k)) bits.
inline SchemeSize scheme_size(int d, int r, int k) {
    if (d < 1 || k < 1 || r < 1 || r > std::min(d, k))
        throw std::invalid_argument("scheme_size: need 1 <= r <= min(d, k)");
    unsigned __int128 kd1 = static_cast<unsigned __int128>(k) * (d + 1);
    unsigned __int128 m = kd1 + geometry::binom_le(k, r);
    unsigned __int128 s = kd1 * static_cast<unsigned __int128>(1 + ceil_log2(k));
    if (m + s > static_cast<unsigned __int128>(UINT64_MAX))
        throw Error("scheme_size: result exceeds 64-bit range");
    return {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(s),
            static_cast<std::uint64_t>(m + s)};
}

/// 8 x scheme size: the VC dimension upper bound for HAC(d, r, k).
inline std::uint64_t vc_upper_bound(int d, int r, int k) {
    SchemeSize sz = scheme_size(d, r, k);
    if (sz.total > UINT64_MAX / 8) throw Error("vc_upper_bound: overflow");
    return 8 * sz.total;
}

/// c * sqrt((vc + ln(1/delta)) / n): the uniform deviation bound.
inline double uniform_deviation_bound(std::uint64_t vc, std::uint64_t n, double delta, double c) {
    if (n < 1) throw std::invalid_argument("uniform_deviation_bound: n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("uniform_deviation_bound: delta must be in (0,1)");
    if (!(c > 0.0)) throw std::invalid_argument("uniform_deviation_bound: c must be positive");
    return c * std::sqrt((static_cast<double>(vc) + std::log(1.0 / delta)) / static_cast<double>(n));
}

namespace detail {

inline void check_consistent(const HacClassifier& clf, const std::vector<LabeledSample>& samples,
                             const char* who) {
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (hac::predict(clf, samples[i].x) != samples[i].y)
            throw Error(std::string(who) + ": classifier disagrees with sample " +
                        std::to_string(i) + " (realizability violation)");
}

inline double margin(const Arrangement& arr, const Vec& x, int j) {
    double t = arr.offsets[static_cast<std::size_t>(j)];
    for (int i = 0; i < arr.d(); ++i)
        t += arr.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) *
             x[static_cast<std::size_t>(i)];
    return t;
}

}  // namespace detail

/// Rescale (and if necessary nudge) the arrangement so every sample margin
/// satisfies |v_j^T x_i + c_j| >= 1 while all sample predictions are
/// unchanged. Samples sitting exactly on a hyperplane are lifted off it by a
/// positive offset perturbation (the +1 side, matching sgn(0) = +1) before
/// the rescale.
inline HacClassifier canonicalize(const HacClassifier& clf,
                                  const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("canonicalize: samples must be nonempty");
    hac::check_binary_labels(samples);
    detail::check_consistent(clf, samples, "canonicalize");

    HacClassifier out = clf;
    Arrangement& arr = out.arrangement;
    const int k = arr.k();

    for (int j = 0; j < k; ++j) {
        std::vector<double> margins(samples.size());
        bool on_plane = false;
        double smallest_nonzero = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            margins[i] = detail::margin(arr, samples[i].x, j);
            if (margins[i] == 0.0)
                on_plane = true;
            else
                smallest_nonzero = std::min(smallest_nonzero, std::abs(margins[i]));
        }

        if (on_plane) {
            double delta = std::isfinite(smallest_nonzero) ? 0.5 * smallest_nonzero : 1.0;
            bool ok = false;
            for (int attempt = 0; attempt < 40 && !ok; ++attempt, delta *= 0.5) {
                ok = true;
                for (std::size_t i = 0; i < samples.size(); ++i)
                    if (sgn(margins[i] + delta) != sgn(margins[i])) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    arr.offsets[static_cast<std::size_t>(j)] += delta;
                    for (std::size_t i = 0; i < samples.size(); ++i) margins[i] += delta;
                }
            }
            if (!ok) throw Error("canonicalize: perturbation failed to preserve predictions");
        }

        double lambda = std::numeric_limits<double>::infinity();
        for (double m : margins) lambda = std::min(lambda, std::abs(m));
        if (!(lambda > 0.0)) throw Error("canonicalize: zero margin survived perturbation");
        for (int i = 0; i < arr.d(); ++i)
            arr.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) /= lambda;
        arr.offsets[static_cast<std::size_t>(j)] /= lambda;
    }

    detail::check_consistent(out, samples, "canonicalize(post)");
    return out;
}

/// The compression map. Per hyperplane j, the margin constraints
/// s_ij (w_j^T x_i + b_j) >= 1 define a QP in R^{d+1}; its min-norm point's
/// Caratheodory support (<= d+1 constraints) names the samples to keep, with
/// the pair (s_ij, j) as side information. One representative sample per
/// distinct sign vector (lowest input index) fills the table section.
inline CompressedSample compress(const std::vector<LabeledSample>& samples,
                                 const HacClassifier& clf, double tol = 1e-8) {
    if (samples.empty()) throw std::invalid_argument("compress: samples must be nonempty");
    hac::check_binary_labels(samples);
    const Arrangement& arr = clf.arrangement;
    const int d = arr.d(), k = arr.k();
    if (k < 1) throw std::invalid_argument("compress: arrangement must have k >= 1");
    detail::check_consistent(clf, samples, "compress");

    std::vector<SignVector> patterns(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        patterns[i] = geometry::sign_vector(arr, samples[i].x);
        for (int j = 0; j < k; ++j) {
            double m = patterns[i][static_cast<std::size_t>(j)] *
                       detail::margin(arr, samples[i].x, j);
            if (m < 1.0 - 1e-9)
                throw Error("compress: classifier is not canonical (margin below 1)");
        }
    }

    CompressedSample comp;
    comp.d = d;
    comp.r = clf.rank_budget;
    comp.k = k;
    comp.side_info.k = k;

    for (int j = 0; j < k; ++j) {
        minnorm::Polyhedron poly;
        poly.a = Matrix(samples.size(), static_cast<std::size_t>(d) + 1);
        poly.b.assign(samples.size(), -1.0);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            int s = patterns[i][static_cast<std::size_t>(j)];
            for (int t = 0; t < d; ++t)
                poly.a(i, static_cast<std::size_t>(t)) = -s * samples[i].x[static_cast<std::size_t>(t)];
            poly.a(i, static_cast<std::size_t>(d)) = -s;
        }
        minnorm::SolverOptions opts;
        opts.seed = derive_seed(0xC0117E55ull, static_cast<std::uint64_t>(j));
        opts.relative_tol = true;  // canonical rescale can push ||(w,b)|| far above 1
        minnorm::MinNormSolution sol = minnorm::min_norm_point(poly, tol, opts);
        double scaled_tol = tol * minnorm::detail::residual_scale(sol.point, sol.duals);
        minnorm::CaratheodorySupport sup = minnorm::caratheodory_support(sol, poly, scaled_tol);

        std::sort(sup.indices.begin(), sup.indices.end());
        for (int idx : sup.indices) {
            comp.qp_samples.push_back(samples[static_cast<std::size_t>(idx)]);
            comp.side_info.entries.push_back(
                {patterns[static_cast<std::size_t>(idx)][static_cast<std::size_t>(j)], j});
        }
    }
    if (comp.qp_samples.size() > static_cast<std::size_t>(d + 1) * static_cast<std::size_t>(k))
        throw Error("compress: QP sample budget exceeded");

    std::map<SignVector, bool> seen;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (seen.emplace(patterns[i], true).second) comp.table_samples.push_back(samples[i]);
    if (comp.table_samples.size() > geometry::binom_le(k, comp.r))
        throw Error("compress: table sample budget exceeded (rank budget understated?)");
    return comp;
}

/// The reconstruction map: re-solve the per-hyperplane margin QPs over the
/// retained constraints only, then read the table off the reconstructed
/// arrangement's sign vectors at the table samples.
inline HacClassifier reconstruct(const CompressedSample& comp, double tol = 1e-8) {
    const int d = comp.d, k = comp.k;
    if (comp.qp_samples.size() != comp.side_info.entries.size())
        throw Error("reconstruct: side info misaligned with qp samples");

    std::vector<std::vector<Vec>> pts(static_cast<std::size_t>(k));
    std::vector<std::vector<int>> sgns(static_cast<std::size_t>(k));
    for (std::size_t e = 0; e < comp.side_info.entries.size(); ++e) {
        const SideInfoEntry& ent = comp.side_info.entries[e];
        if (ent.hyperplane_index < 0 || ent.hyperplane_index >= k)
            throw Error("reconstruct: hyperplane index out of range");
        if (ent.sign_bit != 1 && ent.sign_bit != -1)
            throw Error("reconstruct: invalid sign bit");
        pts[static_cast<std::size_t>(ent.hyperplane_index)].push_back(comp.qp_samples[e].x);
        sgns[static_cast<std::size_t>(ent.hyperplane_index)].push_back(ent.sign_bit);
    }

    HacClassifier clf;
    clf.rank_budget = comp.r;
    clf.arrangement.normals = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(k));
    clf.arrangement.offsets.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        if (pts[static_cast<std::size_t>(j)].empty())
            throw Error("reconstruct: no constraints stored for hyperplane " + std::to_string(j));
        minnorm::SolverOptions opts;
        opts.seed = derive_seed(0x2EC0455ull, static_cast<std::uint64_t>(j));
        opts.relative_tol = true;
        minnorm::MarginSolution sol = minnorm::margin_qp(
            pts[static_cast<std::size_t>(j)], sgns[static_cast<std::size_t>(j)], tol, opts);
        for (int i = 0; i < d; ++i)
            clf.arrangement.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                sol.w[static_cast<std::size_t>(i)];
        clf.arrangement.offsets[static_cast<std::size_t>(j)] = sol.b;
    }

    for (const LabeledSample& s : comp.table_samples) {
        SignVector sv = geometry::sign_vector(clf.arrangement, s.x);
        auto [it, fresh] = clf.table.entries.emplace(sv, s.y);
        if (!fresh && it->second != s.y)
            throw Error("reconstruct: conflicting table samples (corrupt compression)");
    }
    clf.table.default_label = +1;
    return clf;
}

struct RoundTripReport {
    bool consistent = false;
    std::vector<std::size_t> violations;  // sample indices mislabeled by the reconstruction
    std::string failure;                  // nonempty when an exception interrupted the pipeline

    std::size_t n = 0;
    int d = 0, r = 0, k = 0;
    std::size_t qp_count = 0;
    std::size_t qp_budget = 0;      // (d+1) k
    std::size_t qp_budget_alt = 0;  // d (k+1), surfaced for comparison
    std::size_t side_bits = 0;
    std::size_t side_bits_budget = 0;
    std::size_t table_count = 0;
    std::uint64_t table_budget = 0;  // C(k, <= r)
    bool budgets_ok = false;
    bool membership_ok = false;  // every stored sample appears in the input
    double min_margin_canonical = 0.0;
};

/// canonicalize -> compress -> reconstruct -> empirical re-check, with all
/// size-budget and stored-sample-membership checks. Failures land in the
/// report instead of being thrown.
inline RoundTripReport verify_round_trip(const std::vector<LabeledSample>& samples,
                                         const HacClassifier& clf) {
    RoundTripReport rep;
    rep.n = samples.size();
    try {
        HacClassifier canon = canonicalize(clf, samples);

        double min_margin = std::numeric_limits<double>::infinity();
        for (const auto& s : samples)
            for (int j = 0; j < canon.arrangement.k(); ++j)
                min_margin = std::min(min_margin,
                                      std::abs(detail::margin(canon.arrangement, s.x, j)));
        rep.min_margin_canonical = min_margin;

        CompressedSample comp = compress(samples, canon);
        rep.d = comp.d;
        rep.r = comp.r;
        rep.k = comp.k;
        rep.qp_count = comp.qp_samples.size();
        rep.qp_budget = static_cast<std::size_t>(comp.d + 1) * static_cast<std::size_t>(comp.k);
        rep.qp_budget_alt = static_cast<std::size_t>(comp.d) * static_cast<std::size_t>(comp.k + 1);
        rep.side_bits = comp.side_info.bit_cost();
        rep.side_bits_budget = rep.qp_budget * (1 + static_cast<std::size_t>(ceil_log2(comp.k)));
        rep.table_count = comp.table_samples.size();
        rep.table_budget = geometry::binom_le(comp.k, comp.r);
        rep.budgets_ok = rep.qp_count <= rep.qp_budget && rep.side_bits <= rep.side_bits_budget &&
                         rep.table_count <= rep.table_budget;

        auto member = [&](const LabeledSample& s) {
            for (const auto& t : samples)
                if (t.y == s.y && t.x == s.x) return true;
            return false;
        };
        rep.membership_ok = true;
        for (const auto& s : comp.qp_samples) rep.membership_ok = rep.membership_ok && member(s);
        for (const auto& s : comp.table_samples) rep.membership_ok = rep.membership_ok && member(s);

        HacClassifier rec = reconstruct(comp);
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (hac::predict(rec, samples[i].x) != samples[i].y) rep.violations.push_back(i);
        rep.consistent = rep.violations.empty() && rep.budgets_ok && rep.membership_ok;
    } catch (const std::exception& e) {
        rep.failure = e.what();
        rep.consistent = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Canonical binary layout
// ---------------------------------------------------------------------------
// header: d, r, k, n_qp, n_table as u32 little-endian
// qp_samples: n_qp rows of (d feature f64 LE + 1 label f64 LE)
// side info:  n_qp entries of 1 sign bit (1 = +1) followed by ceil(log2 k)
//             index bits, packed MSB-first within bytes, zero-padded to a
//             whole byte
// table_samples: n_table rows in the same row format

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
    std::span<const std::uint8_t> buf;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size()) throw Error("compressed payload truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
        return v;
    }
    double f64() {
        if (pos + 8 > buf.size()) throw Error("compressed payload truncated");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

class BitWriter {
  public:
    void push(bool bit) {
        if (fill_ == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - fill_));
        fill_ = (fill_ + 1) % 8;
    }
    void push_uint(std::uint32_t v, int bits) {
        for (int i = bits - 1; i >= 0; --i) push((v >> i) & 1u);
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  private:
    std::vector<std::uint8_t> bytes_;
    int fill_ = 0;
};

class BitReader {
  public:
    BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    bool pop() {
        std::size_t byte = bit_ / 8;
        if (byte >= bytes_.size()) throw Error("compressed payload truncated (bitstream)");
        bool v = (bytes_[byte] >> (7 - bit_ % 8)) & 1u;
        ++bit_;
        return v;
    }
    std::uint32_t pop_uint(int bits) {
        std::uint32_t v = 0;
        for (int i = 0; i < bits; ++i) v = (v << 1) | (pop() ? 1u : 0u);
        return v;
    }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t bit_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> to_bytes(const CompressedSample& comp) {
    std::vector<std::uint8_t> out;
    detail::put_u32(out, static_cast<std::uint32_t>(comp.d));
    detail::put_u32(out, static_cast<std::uint32_t>(comp.r));
    detail::put_u32(out, static_cast<std::uint32_t>(comp.k));
    detail::put_u32(out, static_cast<std::uint32_t>(comp.qp_samples.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(comp.table_samples.size()));

    auto put_sample = [&](const LabeledSample& s) {
        if (static_cast<int>(s.x.size()) != comp.d) throw Error("to_bytes: sample dim mismatch");
        for (double v : s.x) detail::put_f64(out, v);
        detail::put_f64(out, static_cast<double>(s.y));
    };
    for (const auto& s : comp.qp_samples) put_sample(s);

    detail::BitWriter bits;
    const int idx_bits = ceil_log2(comp.k);
    for (const auto& e : comp.side_info.entries) {
        bits.push(e.sign_bit > 0);
        bits.push_uint(static_cast<std::uint32_t>(e.hyperplane_index), idx_bits);
    }
    out.insert(out.end(), bits.bytes().begin(), bits.bytes().end());

    for (const auto& s : comp.table_samples) put_sample(s);
    return out;
}

inline CompressedSample from_bytes(std::span<const std::uint8_t> buf) {
    detail::Reader rd{buf};
    CompressedSample comp;
    comp.d = static_cast<int>(rd.u32());
    comp.r = static_cast<int>(rd.u32());
    comp.k = static_cast<int>(rd.u32());
    std::uint32_t n_qp = rd.u32();
    std::uint32_t n_table = rd.u32();
    if (comp.d < 1 || comp.k < 1 || comp.r < 1 || comp.d > 1'000'000 || comp.k > 1'000'000 ||
        n_qp > 100'000'000 || n_table > 100'000'000)
        throw Error("from_bytes: implausible header");
    comp.side_info.k = comp.k;

    auto read_sample = [&]() {
        LabeledSample s;
        s.x.resize(static_cast<std::size_t>(comp.d));
        for (double& v : s.x) v = rd.f64();
        double y = rd.f64();
        if (y != 1.0 && y != -1.0) throw Error("from_bytes: label must be +-1");
        s.y = static_cast<int>(y);
        return s;
    };
    for (std::uint32_t i = 0; i < n_qp; ++i) comp.qp_samples.push_back(read_sample());

    const int idx_bits = ceil_log2(comp.k);
    const std::size_t stream_bits = static_cast<std::size_t>(n_qp) * (1 + static_cast<std::size_t>(idx_bits));
    const std::size_t stream_bytes = (stream_bits + 7) / 8;
    if (rd.pos + stream_bytes > buf.size()) throw Error("compressed payload truncated (bitstream)");
    detail::BitReader bits(buf.subspan(rd.pos, stream_bytes));
    rd.pos += stream_bytes;
    for (std::uint32_t i = 0; i < n_qp; ++i) {
        SideInfoEntry e;
        e.sign_bit = bits.pop() ? +1 : -1;
        e.hyperplane_index = static_cast<int>(bits.pop_uint(idx_bits));
        if (e.hyperplane_index >= comp.k) throw Error("from_bytes: hyperplane index out of range");
        comp.side_info.entries.push_back(e);
    }

    for (std::uint32_t i = 0; i < n_table; ++i) comp.table_samples.push_back(read_sample());
    if (rd.pos != buf.size()) throw Error("from_bytes: trailing bytes");
    return comp;
}

}  // namespace hann::compression
