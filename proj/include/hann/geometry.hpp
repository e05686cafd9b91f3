#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hann/common.hpp"
#include "hann/linalg.hpp"
#include "hann/minnorm.hpp"

namespace hann::geometry {

/// Arrangement of k hyperplanes in R^d: column j of `normals` is w_j, entry j
/// of `offsets` is b_j. k = 0 is allowed and represents the trivial
/// arrangement whose single cell is the whole space.
struct Arrangement {
    Matrix normals;  // d x k
    Vec offsets;     // k

    int d() const { return static_cast<int>(normals.rows); }
    int k() const { return static_cast<int>(normals.cols); }

    double normal_at(int i, int j) const { return normals(i, j); }

    Vec normal_column(int j) const {
        Vec w(normals.rows);
        for (std::size_t i = 0; i < normals.rows; ++i) w[i] = normals(i, static_cast<std::size_t>(j));
        return w;
    }

    void validate() const {
        if (normals.rows < 1) throw std::invalid_argument("Arrangement: d must be >= 1");
        if (offsets.size() != normals.cols)
            throw std::invalid_argument("Arrangement: offsets length must equal hyperplane count");
        if (!normals.all_finite()) throw std::invalid_argument("Arrangement: non-finite normal");
        for (double b : offsets)
            if (!std::isfinite(b)) throw std::invalid_argument("Arrangement: non-finite offset");
    }
};

/// Length-k pattern over {+1, -1}; the string form uses '+' and '-'.
struct SignVector {
    std::vector<std::int8_t> bits;

    std::size_t size() const { return bits.size(); }
    int operator[](std::size_t j) const { return bits[j]; }

    auto operator<=>(const SignVector&) const = default;

    std::string str() const {
        std::string s;
        s.reserve(bits.size());
        for (auto b : bits) s.push_back(b > 0 ? '+' : '-');
        return s;
    }

    static SignVector from_string(const std::string& s) {
        SignVector sv;
        sv.bits.reserve(s.size());
        for (char c : s) {
            if (c == '+')
                sv.bits.push_back(+1);
            else if (c == '-')
                sv.bits.push_back(-1);
            else
                throw std::invalid_argument("SignVector: pattern characters must be '+' or '-'");
        }
        return sv;
    }
};

/// Pattern of x relative to every hyperplane: entry j is sgn(w_j^T x + b_j),
/// with sgn(0) = +1.
inline SignVector sign_vector(const Arrangement& arr, std::span<const double> x) {
    if (static_cast<int>(x.size()) != arr.d())
        throw std::invalid_argument("sign_vector: point dimension mismatch");
    SignVector sv;
    sv.bits.resize(static_cast<std::size_t>(arr.k()));
    for (int j = 0; j < arr.k(); ++j) {
        double t = arr.offsets[static_cast<std::size_t>(j)];
        for (int i = 0; i < arr.d(); ++i)
            t += arr.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * x[static_cast<std::size_t>(i)];
        sv.bits[static_cast<std::size_t>(j)] = static_cast<std::int8_t>(sgn(t));
    }
    return sv;
}

/// C(k, <= r) = sum_{i=0}^{r} C(k, i), exact; throws on 64-bit overflow.
inline std::uint64_t binom_le(int k, int r) {
    if (k < 0 || r < 0) throw std::invalid_argument("binom_le: negative argument");
    unsigned __int128 total = 0;
    unsigned __int128 term = 1;  // C(k, 0)
    for (int i = 0; i <= std::min(r, k); ++i) {
        total += term;
        if (total > static_cast<unsigned __int128>(UINT64_MAX))
            throw Error("binom_le: result exceeds 64-bit range");
        term = term * static_cast<unsigned __int128>(k - i) / static_cast<unsigned __int128>(i + 1);
    }
    return static_cast<std::uint64_t>(total);
}

/// Largest possible number of cells of k hyperplanes in R^d:
/// 2^k for k < d, otherwise C(k, <= d). Exact integer arithmetic; supported
/// for k <= 64, errors beyond that or on overflow.
inline std::uint64_t max_cells(int k, int d) {
    if (k < 1 || d < 1) throw std::invalid_argument("max_cells: k and d must be positive");
    if (k > 64) throw Error("max_cells: k > 64 not supported exactly");
    if (k < d) {
        if (k >= 64) throw Error("max_cells: result exceeds 64-bit range");
        return std::uint64_t{1} << k;
    }
    return binom_le(k, d);
}

/// Numeric rank: number of singular values above tol * (largest singular
/// value). The zero matrix has rank 0.
inline int numeric_rank(const Matrix& m, double tol = 1e-9) {
    if (tol <= 0) throw std::invalid_argument("numeric_rank: tol must be positive");
    if (!m.all_finite()) throw std::invalid_argument("numeric_rank: non-finite entries");
    if (m.rows == 0 || m.cols == 0) return 0;
    Svd dec = svd(m);
    double smax = dec.singular[0];
    if (smax == 0.0) return 0;
    int r = 0;
    for (double s : dec.singular)
        if (s > tol * smax) ++r;
    return r;
}

struct CellEnumOptions {
    double eps_feas = 1e-9;
    double r_box = 1e6;
    std::uint64_t seed = 0;
    std::size_t max_patterns = std::size_t{1} << 21;
};

/// All sign vectors whose cell is full-dimensional (strictly feasible).
/// Hyperplanes are inserted one at a time; each candidate child pattern is
/// accepted iff the maximum over the box |x_i| <= r_box of its minimum slack
/// exceeds eps_feas (LP subproblem in minnorm). Patterns realized only on
/// lower-dimensional faces are excluded.
inline std::vector<SignVector> enumerate_cells(const Arrangement& arr,
                                               const CellEnumOptions& opts = {}) {
    arr.validate();
    const int d = arr.d(), k = arr.k();
    if (k > 25) throw BudgetError("enumerate_cells: k exceeds the enumeration budget (25)");
    if (k == 0) return {SignVector{}};

    struct Node {
        std::vector<std::int8_t> bits;
        Vec witness;
    };
    std::vector<Node> frontier{{{}, Vec(static_cast<std::size_t>(d), 0.0)}};

    for (int j = 0; j < k; ++j) {
        const Vec wj = arr.normal_column(j);
        const double bj = arr.offsets[static_cast<std::size_t>(j)];
        std::vector<Node> next;
        next.reserve(frontier.size() * 2);

        for (const Node& node : frontier) {
            double slack = dot(wj, node.witness) + bj;
            for (int sign : {+1, -1}) {
                if (sign * slack > opts.eps_feas) {
                    Node child{node.bits, node.witness};
                    child.bits.push_back(static_cast<std::int8_t>(sign));
                    next.push_back(std::move(child));
                    continue;
                }
                // LP: max-min-slack of the full prefix with the candidate sign
                Matrix u(static_cast<std::size_t>(j) + 1, static_cast<std::size_t>(d));
                Vec c(static_cast<std::size_t>(j) + 1);
                for (int t = 0; t <= j; ++t) {
                    int st = (t < j) ? node.bits[static_cast<std::size_t>(t)] : sign;
                    for (int i = 0; i < d; ++i)
                        u(static_cast<std::size_t>(t), static_cast<std::size_t>(i)) =
                            st * arr.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(t));
                    c[static_cast<std::size_t>(t)] = st * arr.offsets[static_cast<std::size_t>(t)];
                }
                minnorm::MaxMinSlack r =
                    minnorm::max_min_slack(u, c, opts.r_box, derive_seed(opts.seed, j, sign == 1));
                if (r.value > opts.eps_feas) {
                    Node child{node.bits, r.x};
                    child.bits.push_back(static_cast<std::int8_t>(sign));
                    next.push_back(std::move(child));
                }
            }
            if (next.size() > opts.max_patterns)
                throw BudgetError("enumerate_cells: pattern budget exceeded");
        }
        frontier = std::move(next);
    }

    std::vector<SignVector> out;
    out.reserve(frontier.size());
    for (Node& node : frontier) out.push_back(SignVector{std::move(node.bits)});
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hann::geometry
