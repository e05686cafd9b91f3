#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hann/common.hpp"
#include "hann/linalg.hpp"
#include "hann/rng.hpp"

namespace hann::minnorm {

/// Intersection of halfspaces {x : a_i^T x <= b_i}. Row i of `a` is a_i^T.
struct Polyhedron {
    Matrix a;  // m x n
    Vec b;     // m

    std::size_t m() const { return a.rows; }
    std::size_t n() const { return a.cols; }

    void add(std::span<const double> ai, double bi) {
        if (a.rows == 0 && a.cols == 0) a.cols = ai.size();
        if (ai.size() != a.cols) throw std::invalid_argument("Polyhedron::add: dimension mismatch");
        a.data.insert(a.data.end(), ai.begin(), ai.end());
        ++a.rows;
        b.push_back(bi);
    }

    void validate() const {
        if (b.size() != a.rows) throw std::invalid_argument("Polyhedron: b size mismatch");
        if (!a.all_finite()) throw std::invalid_argument("Polyhedron: non-finite constraint matrix");
        for (double v : b)
            if (!std::isfinite(v)) throw std::invalid_argument("Polyhedron: non-finite offset");
    }
};

struct MinNormSolution {
    Vec point;                    // x*
    Vec duals;                    // lambda_i >= 0, one per constraint
    std::vector<int> active_set;  // indices with lambda_i > 0
    double kkt_residual = 0.0;    // max of stationarity, feasibility, complementary slackness
};

struct SolverOptions {
    double tol = 1e-8;
    std::uint64_t seed = 0;
    int max_epochs = 100000;
    // Infeasibility is certified inside the ball ||x|| <= r_box; inputs whose
    // solutions live beyond this are out of the supported scale.
    double r_box = 1e9;
    int polish_every = 8;
    // Accept at residual <= tol * max(1, ||x||, max_i lambda_i). For callers
    // whose QPs have solution norms far from 1 (margin QPs after the
    // canonical rescale), where complementary slackness has a floating-point
    // floor proportional to the dual scale.
    bool relative_tol = false;
};

namespace detail {

/// Natural scale of a KKT residual: complementary slackness carries a
/// floating-point floor proportional to the dual magnitude, and feasibility
/// to the solution norm.
inline double residual_scale(const Vec& x, const Vec& lambda) {
    double s = std::max(1.0, norm(x));
    for (double l : lambda) s = std::max(s, l);
    return s;
}

inline double kkt_residual_at(const Polyhedron& poly, const Vec& x, const Vec& lambda) {
    double res = 0.0;
    Vec station(x);  // x + sum lambda_i a_i
    for (std::size_t i = 0; i < poly.m(); ++i)
        axpy(lambda[i], {poly.a.row(i), poly.n()}, station);
    res = std::max(res, norm(station));
    for (std::size_t i = 0; i < poly.m(); ++i) {
        double slack = dot({poly.a.row(i), poly.n()}, std::span<const double>(x)) - poly.b[i];
        res = std::max(res, slack);                        // primal violation
        res = std::max(res, std::abs(lambda[i] * slack));  // complementary slackness
    }
    return res;
}

/// Farkas-style emptiness certificate: a weighting nu >= 0 of the constraints
/// with nu.b + ||sum nu_i a_i|| * r_box < 0 proves that no x with
/// ||x|| <= r_box satisfies all of them. The candidate direction comes from
/// projecting the (normalized) dual iterate onto the null space of the
/// near-active constraint columns.
inline bool infeasibility_certificate(const Polyhedron& poly, const Vec& lambda, double r_box) {
    const std::size_t m = poly.m(), n = poly.n();
    double l1 = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    if (l1 < 1e-9) return false;

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < m; ++i)
        if (lambda[i] / l1 > 1e-9) support.push_back(i);
    if (support.empty()) return false;

    Matrix cols(n, support.size());
    for (std::size_t j = 0; j < support.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) cols(i, j) = poly.a(support[j], i);
    Svd dec = svd(cols);

    double smax = dec.singular.empty() ? 0.0 : dec.singular[0];
    Vec mu(support.size());
    for (std::size_t j = 0; j < support.size(); ++j) mu[j] = lambda[support[j]] / l1;

    // nu = clip(project mu onto the null space of cols, 0)
    Vec nu(support.size(), 0.0);
    bool any_null = false;
    for (std::size_t j = 0; j < support.size(); ++j) {
        if (dec.singular[j] > 1e-12 * std::max(smax, 1e-300)) continue;
        any_null = true;
        double proj = 0;
        for (std::size_t i = 0; i < support.size(); ++i) proj += dec.v(i, j) * mu[i];
        for (std::size_t i = 0; i < support.size(); ++i) nu[i] += dec.v(i, j) * proj;
    }
    if (!any_null) return false;
    double nu_l1 = 0;
    for (double& x : nu) {
        x = std::max(x, 0.0);
        nu_l1 += x;
    }
    if (nu_l1 < 1e-12) return false;

    Vec combo(n, 0.0);
    double nub = 0;
    double bscale = 1.0;
    for (std::size_t j = 0; j < support.size(); ++j) {
        double w = nu[j] / nu_l1;
        if (w == 0.0) continue;
        axpy(w, {poly.a.row(support[j]), n}, combo);
        nub += w * poly.b[support[j]];
        bscale = std::max(bscale, std::abs(poly.b[support[j]]));
    }
    return nub + norm(combo) * r_box < -1e-10 * bscale;
}

/// Active-set finisher on the dual: minimize 1/2||A^T l||^2 + b.l over
/// l >= 0. Nonsingular passive sets take Lawson-Hanson steps (equality solve
/// plus line search); when the entering constraint makes the passive columns
/// dependent, the iterate moves along a null-space direction of those columns
/// (oriented so the entering dual grows), which strictly decreases the
/// objective and retires a blocking constraint. Returns a solution only when
/// the full KKT certificate meets tol.
inline std::optional<MinNormSolution> polish_active_set(const Polyhedron& poly, double tol,
                                                        bool relative_tol = false) {
    const std::size_t m = poly.m(), n = poly.n();
    Vec lambda(m, 0.0);
    Vec v(n, 0.0);  // A^T lambda
    std::vector<int> passive;

    double bscale = 1.0;
    for (double bi : poly.b) bscale = std::max(bscale, std::abs(bi));
    double row_max2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) row_max2 = std::max(row_max2, norm2({poly.a.row(i), n}));

    auto rebuild_v = [&]() {
        std::fill(v.begin(), v.end(), 0.0);
        for (int p : passive)
            axpy(lambda[static_cast<std::size_t>(p)],
                 {poly.a.row(static_cast<std::size_t>(p)), n}, v);
    };
    auto prune_zeros = [&]() {
        for (std::size_t p = passive.size(); p-- > 0;)
            if (lambda[static_cast<std::size_t>(passive[p])] <= 1e-14) {
                lambda[static_cast<std::size_t>(passive[p])] = 0.0;
                passive.erase(passive.begin() + static_cast<std::ptrdiff_t>(p));
            }
    };

    int budget = static_cast<int>(8 * n + m / 2 + 64);
    const int max_outer = static_cast<int>(4 * n + 40);
    for (int outer = 0; outer < max_outer && budget > 0; ++outer) {
        // the entering threshold must clear the floating-point noise floor of
        // the gradients, which grows with the dual magnitude
        double lam_sum = 0;
        for (double l : lambda) lam_sum += l;
        double grad_eps = 1e-12 * bscale + 1e-13 * lam_sum * row_max2;

        int enter = -1;
        double best = -grad_eps;
        for (std::size_t i = 0; i < m; ++i) {
            if (lambda[i] > 0.0) continue;
            double g = dot({poly.a.row(i), n}, std::span<const double>(v)) + poly.b[i];
            if (g < best) {
                best = g;
                enter = static_cast<int>(i);
            }
        }
        if (enter < 0) break;  // KKT holds up to grad_eps
        passive.push_back(enter);

        for (int inner = 0; inner < static_cast<int>(2 * n + 24) && budget > 0; ++inner, --budget) {
            const std::size_t p_count = passive.size();
            if (p_count == 0) break;
            Matrix cols(n, p_count);
            for (std::size_t p = 0; p < p_count; ++p)
                for (std::size_t r = 0; r < n; ++r)
                    cols(r, p) = poly.a(static_cast<std::size_t>(passive[p]), r);
            Svd dec = svd(cols);
            double smax = dec.singular[0];
            bool singular = p_count > n || smax == 0.0 ||
                            dec.singular[p_count - 1] <= 1e-11 * smax;

            if (!singular) {
                // solve (A_P A_P^T) mu = -b_P via the SVD: mu = V S^-2 V^T rhs,
                // with iterative refinement to push the equality residual (and
                // with it complementary slackness) to machine precision
                Vec rhs(p_count);
                for (std::size_t p = 0; p < p_count; ++p)
                    rhs[p] = -poly.b[static_cast<std::size_t>(passive[p])];
                auto gram_solve = [&](const Vec& r) {
                    Vec out(p_count, 0.0);
                    for (std::size_t s = 0; s < p_count; ++s) {
                        double proj = 0;
                        for (std::size_t p = 0; p < p_count; ++p) proj += dec.v(p, s) * r[p];
                        proj /= dec.singular[s] * dec.singular[s];
                        for (std::size_t p = 0; p < p_count; ++p) out[p] += dec.v(p, s) * proj;
                    }
                    return out;
                };
                Vec mu = gram_solve(rhs);
                for (int refine = 0; refine < 2; ++refine) {
                    Vec w(n, 0.0);
                    for (std::size_t p = 0; p < p_count; ++p)
                        for (std::size_t r = 0; r < n; ++r) w[r] += cols(r, p) * mu[p];
                    Vec resid(p_count);
                    for (std::size_t p = 0; p < p_count; ++p) {
                        double acc = 0;
                        for (std::size_t r = 0; r < n; ++r) acc += cols(r, p) * w[r];
                        resid[p] = rhs[p] - acc;
                    }
                    Vec dmu = gram_solve(resid);
                    for (std::size_t p = 0; p < p_count; ++p) mu[p] += dmu[p];
                }

                bool all_pos = true;
                for (double x : mu)
                    if (x <= 0.0) all_pos = false;
                if (all_pos) {
                    for (std::size_t p = 0; p < p_count; ++p)
                        lambda[static_cast<std::size_t>(passive[p])] = mu[p];
                    break;
                }
                double alpha = 1.0;
                for (std::size_t p = 0; p < p_count; ++p) {
                    double cur = lambda[static_cast<std::size_t>(passive[p])];
                    if (mu[p] < 0.0 && cur > mu[p]) alpha = std::min(alpha, cur / (cur - mu[p]));
                }
                for (std::size_t p = 0; p < p_count; ++p) {
                    double cur = lambda[static_cast<std::size_t>(passive[p])];
                    lambda[static_cast<std::size_t>(passive[p])] = cur + alpha * (mu[p] - cur);
                }
                prune_zeros();
                continue;
            }

            // dependent columns: move along a null direction of the passive
            // normals; the quadratic term is flat there and b.delta < 0 once
            // oriented by the entering coordinate, so the objective strictly
            // decreases until a blocking dual hits zero
            Vec delta(p_count);
            for (std::size_t p = 0; p < p_count; ++p) delta[p] = dec.v(p, p_count - 1);
            std::size_t enter_pos = p_count - 1;  // entering index sits at the back
            double bdot = 0;
            for (std::size_t p = 0; p < p_count; ++p)
                bdot += delta[p] * poly.b[static_cast<std::size_t>(passive[p])];
            if (std::abs(delta[enter_pos]) > 1e-12) {
                if (delta[enter_pos] < 0)
                    for (double& x : delta) x = -x;
            } else if (bdot > 0) {
                for (double& x : delta) x = -x;
            }

            double t = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < p_count; ++p)
                if (delta[p] < -1e-14)
                    t = std::min(t, lambda[static_cast<std::size_t>(passive[p])] / -delta[p]);
            if (!std::isfinite(t)) return std::nullopt;  // conic ray: leave it to the outer engine
            for (std::size_t p = 0; p < p_count; ++p)
                lambda[static_cast<std::size_t>(passive[p])] =
                    std::max(0.0, lambda[static_cast<std::size_t>(passive[p])] + t * delta[p]);
            prune_zeros();
        }

        rebuild_v();
    }

    MinNormSolution sol;
    sol.point.resize(n);
    for (std::size_t j = 0; j < n; ++j) sol.point[j] = -v[j];
    sol.duals = lambda;
    for (std::size_t i = 0; i < m; ++i)
        if (lambda[i] > 0) sol.active_set.push_back(static_cast<int>(i));
    sol.kkt_residual = kkt_residual_at(poly, sol.point, sol.duals);
    double accept = tol * (relative_tol ? residual_scale(sol.point, sol.duals) : 1.0);
    if (sol.kkt_residual <= accept) return sol;
    return std::nullopt;
}

}  // namespace detail

/// Unique minimizer of 1/2 ||x||^2 over the polyhedron, with a KKT
/// certificate. The iteration engine is cyclic exact dual coordinate ascent
/// (per-constraint closed-form updates, randomly permuted each epoch);
/// an equality-constrained active-set polish finishes to high accuracy.
/// Throws InfeasibleError when the dual diverges or an emptiness certificate
/// is found, NotConvergedError at the iteration cap.
inline MinNormSolution min_norm_point(const Polyhedron& poly, double tol = 1e-8,
                                      const SolverOptions& opts_in = {}) {
    if (tol <= 0) throw std::invalid_argument("min_norm_point: tol must be positive");
    poly.validate();
    SolverOptions opts = opts_in;
    opts.tol = tol;

    const std::size_t m = poly.m(), n = poly.n();
    MinNormSolution sol;
    sol.point.assign(n, 0.0);
    sol.duals.assign(m, 0.0);
    if (m == 0) return sol;

    Vec row_norm2(m);
    for (std::size_t i = 0; i < m; ++i) {
        row_norm2[i] = norm2({poly.a.row(i), n});
        if (row_norm2[i] == 0.0 && poly.b[i] < 0.0)
            throw InfeasibleError("min_norm_point: zero row with negative offset");
    }

    Vec lambda(m, 0.0), v(n, 0.0);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng(opts.seed, RngStream::kSolver);

    double last_residual = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            if (row_norm2[i] == 0.0) continue;
            double grad = dot({poly.a.row(i), n}, std::span<const double>(v)) + poly.b[i];
            double nl = std::max(0.0, lambda[i] - grad / row_norm2[i]);
            if (nl != lambda[i]) {
                axpy(nl - lambda[i], {poly.a.row(i), n}, v);
                lambda[i] = nl;
            }
        }

        Vec x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = -v[j];
        last_residual = detail::kkt_residual_at(poly, x, lambda);
        double accept = tol * (opts.relative_tol ? detail::residual_scale(x, lambda) : 1.0);
        if (last_residual <= accept) {
            sol.point = x;
            sol.duals = lambda;
            for (std::size_t i = 0; i < m; ++i)
                if (lambda[i] > 0) sol.active_set.push_back(static_cast<int>(i));
            sol.kkt_residual = last_residual;
            return sol;
        }

        if (epoch % opts.polish_every == opts.polish_every - 1) {
            if (auto polished = detail::polish_active_set(poly, tol, opts.relative_tol))
                return *polished;
        }

        double dual_obj = -(0.5 * norm2(v) + dot(lambda, poly.b));
        double l1 = std::accumulate(lambda.begin(), lambda.end(), 0.0);
        if (dual_obj > 1.0 / tol || l1 > 1.0 / tol)
            throw InfeasibleError("min_norm_point: dual diverged (infeasible constraints)");
        if (epoch >= 2 && detail::infeasibility_certificate(poly, lambda, opts.r_box))
            throw InfeasibleError("min_norm_point: emptiness certificate found");
    }
    throw NotConvergedError("min_norm_point: iteration cap reached", last_residual);
}

struct CaratheodorySupport {
    std::vector<int> indices;  // J, |J| <= n
    Vec weights;               // conic weights on J reproducing -x*
};

/// Reduce the active support of a certified solution to at most n constraints
/// whose conic hull still contains -x* (and whose min-norm point re-solve
/// reproduces x*). Weights are shifted along null-space combinations of the
/// active normals until enough of them hit zero.
inline CaratheodorySupport caratheodory_support(const MinNormSolution& sol,
                                                const Polyhedron& poly, double tol = 1e-8) {
    if (sol.kkt_residual > tol)
        throw std::invalid_argument("caratheodory_support: solution not certified to tol");
    const std::size_t n = poly.n();

    std::vector<int> j_idx;
    Vec w;
    for (std::size_t i = 0; i < poly.m(); ++i)
        if (sol.duals[i] > tol) {
            j_idx.push_back(static_cast<int>(i));
            w.push_back(sol.duals[i]);
        }

    int guard = static_cast<int>(poly.m()) + 4;
    while (j_idx.size() > n && guard-- > 0) {
        Matrix cols(n, j_idx.size());
        for (std::size_t c = 0; c < j_idx.size(); ++c)
            for (std::size_t r = 0; r < n; ++r) cols(r, c) = poly.a(j_idx[c], r);
        Svd dec = svd(cols);
        double smax = dec.singular[0];
        // last right-singular vector: null combination (exists since cols > n)
        std::size_t last = j_idx.size() - 1;
        if (dec.singular[last] > 1e-9 * std::max(smax, 1e-300))
            throw Error("caratheodory_support: no null direction found (reduction failure)");
        Vec mu(j_idx.size());
        for (std::size_t c = 0; c < j_idx.size(); ++c) mu[c] = dec.v(c, last);

        double pos = 0;
        for (double x : mu) pos = std::max(pos, x);
        if (pos <= 0)
            for (double& x : mu) x = -x;

        double t = std::numeric_limits<double>::infinity();
        std::size_t drop = j_idx.size();
        for (std::size_t c = 0; c < j_idx.size(); ++c)
            if (mu[c] > 1e-14) {
                double ratio = w[c] / mu[c];
                if (ratio < t) {
                    t = ratio;
                    drop = c;
                }
            }
        if (drop == j_idx.size())
            throw Error("caratheodory_support: degenerate null direction (reduction failure)");

        for (std::size_t c = 0; c < j_idx.size(); ++c) w[c] = std::max(0.0, w[c] - t * mu[c]);
        w[drop] = 0.0;
        for (std::size_t c = j_idx.size(); c-- > 0;)
            if (w[c] == 0.0) {
                w.erase(w.begin() + static_cast<std::ptrdiff_t>(c));
                j_idx.erase(j_idx.begin() + static_cast<std::ptrdiff_t>(c));
            }
    }

    // certify: -x* must be reproduced by the reduced conic combination
    Vec combo(n, 0.0);
    for (std::size_t c = 0; c < j_idx.size(); ++c)
        axpy(w[c], {poly.a.row(j_idx[c]), n}, combo);
    Vec target(sol.point);
    for (double& x : target) x = -x;
    double err = 0;
    for (std::size_t r = 0; r < n; ++r) err = std::max(err, std::abs(combo[r] - target[r]));
    double scale = std::max(1.0, norm(sol.point));
    if (err > 10 * tol * scale)
        throw Error("caratheodory_support: conic reconstruction residual " + std::to_string(err));

    return {j_idx, w};
}

struct MarginSolution {
    Vec w;       // d
    double b;    // offset
    Vec duals;   // one per input point
    double kkt_residual = 0.0;
};

/// Minimum-norm (w, b) with s_i (w^T x_i + b) >= 1 for every point: the
/// margin QP, posed as min_norm_point in R^{d+1} with a_i = -s_i (x_i, 1),
/// b_i = -1.
inline MarginSolution margin_qp(const std::vector<Vec>& points, const std::vector<int>& signs,
                                double tol = 1e-8, const SolverOptions& opts = {}) {
    if (points.size() != signs.size())
        throw std::invalid_argument("margin_qp: points/signs size mismatch");
    if (points.empty()) throw std::invalid_argument("margin_qp: no constraints");
    const std::size_t d = points[0].size();

    Polyhedron poly;
    poly.a = Matrix(points.size(), d + 1);
    poly.b.assign(points.size(), -1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != d) throw std::invalid_argument("margin_qp: ragged points");
        if (signs[i] != 1 && signs[i] != -1)
            throw std::invalid_argument("margin_qp: signs must be +-1");
        for (std::size_t j = 0; j < d; ++j) poly.a(i, j) = -signs[i] * points[i][j];
        poly.a(i, d) = -signs[i];
    }

    MinNormSolution base = min_norm_point(poly, tol, opts);
    MarginSolution out;
    out.w.assign(base.point.begin(), base.point.begin() + static_cast<std::ptrdiff_t>(d));
    out.b = base.point[d];
    out.duals = base.duals;
    out.kkt_residual = base.kkt_residual;
    double margin_slack =
        10 * tol * (opts.relative_tol ? detail::residual_scale(base.point, base.duals) : 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double margin = signs[i] * (dot(out.w, points[i]) + out.b);
        if (margin < 1.0 - margin_slack)
            throw NotConvergedError("margin_qp: margin below 1 - tol", 1.0 - margin);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Max-min-slack LP (strict feasibility test for arrangement cells)
// ---------------------------------------------------------------------------

struct MaxMinSlack {
    double value;  // max over |x_i| <= r_box of min_j (u_j^T x + c_j)
    Vec x;         // witness
};

namespace detail {

struct LpCons {
    Vec g;
    double h;
};

struct LpResult {
    bool feasible;
    Vec y;
};

/// Seidel-style randomized LP: maximize obj.y subject to g.y <= h and
/// lo <= y <= hi. Exact for the small dimensions used here (recursion by
/// variable elimination).
inline LpResult seidel_lp(std::vector<LpCons> cons, Vec obj, Vec lo, Vec hi, CounterRng& rng) {
    const std::size_t d = obj.size();
    const double eps = 1e-11;

    if (d == 1) {
        double l = lo[0], u = hi[0];
        for (const auto& c : cons) {
            double g = c.g[0];
            if (g > eps)
                u = std::min(u, c.h / g);
            else if (g < -eps)
                l = std::max(l, c.h / g);
            else if (c.h < -eps * (1.0 + std::abs(c.h)))
                return {false, {}};
        }
        if (l > u + eps * (1.0 + std::abs(l) + std::abs(u))) return {false, {}};
        double y = obj[0] > 0 ? u : (obj[0] < 0 ? l : std::clamp(0.0, l, u));
        return {true, {y}};
    }

    rng.shuffle(cons);
    Vec y(d);
    for (std::size_t i = 0; i < d; ++i)
        y[i] = obj[i] > 0 ? hi[i] : (obj[i] < 0 ? lo[i] : 0.5 * (lo[i] + hi[i]));

    std::vector<LpCons> seen;
    for (std::size_t ci = 0; ci < cons.size(); ++ci) {
        const LpCons& c = cons[ci];
        double val = dot(c.g, y);
        double slack_tol = eps * (1.0 + std::abs(c.h) + std::abs(val));
        if (val <= c.h + slack_tol) {
            seen.push_back(c);
            continue;
        }

        // optimum lies on c.g . y = c.h; eliminate the largest-coefficient var
        std::size_t e = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(c.g[i]) > std::abs(c.g[e])) e = i;
        if (std::abs(c.g[e]) <= eps) return {false, {}};  // 0 > h: empty
        double ge = c.g[e];

        auto reduce_vec = [&](const Vec& full, double coeff_e) {
            Vec r(d - 1);
            std::size_t k = 0;
            for (std::size_t i = 0; i < d; ++i) {
                if (i == e) continue;
                r[k++] = full[i] - coeff_e * c.g[i] / ge;
            }
            return r;
        };

        std::vector<LpCons> sub;
        sub.reserve(seen.size() + 2);
        for (const auto& p : seen)
            sub.push_back({reduce_vec(p.g, p.g[e]), p.h - p.g[e] * c.h / ge});
        {  // bounds of the eliminated variable become constraints
            Vec gpos(d, 0.0);
            gpos[e] = 1.0;
            sub.push_back({reduce_vec(gpos, 1.0), hi[e] - c.h / ge});
            Vec gneg(d, 0.0);
            gneg[e] = -1.0;
            sub.push_back({reduce_vec(gneg, -1.0), lo[e] * -1.0 + c.h / ge});
        }
        Vec sub_obj = reduce_vec(obj, obj[e]);
        Vec sub_lo, sub_hi;
        for (std::size_t i = 0; i < d; ++i) {
            if (i == e) continue;
            sub_lo.push_back(lo[i]);
            sub_hi.push_back(hi[i]);
        }
        LpResult r = seidel_lp(std::move(sub), std::move(sub_obj), std::move(sub_lo),
                               std::move(sub_hi), rng);
        if (!r.feasible) return {false, {}};

        std::size_t k = 0;
        double acc = c.h;
        for (std::size_t i = 0; i < d; ++i) {
            if (i == e) continue;
            y[i] = r.y[k];
            acc -= c.g[i] * r.y[k];
            ++k;
        }
        y[e] = acc / ge;
        seen.push_back(c);
    }
    return {true, y};
}

}  // namespace detail

/// max over x in the box |x_i| <= r_box of min_j (u_j^T x + c_j). Solved as
/// an LP in (x, t) by the Seidel solver for small dimension; larger
/// dimensions fall back to the dual-coordinate feasibility engine.
/// Rows of `u` are the slope vectors u_j.
inline MaxMinSlack max_min_slack(const Matrix& u, const Vec& c, double r_box,
                                 std::uint64_t seed = 0) {
    const std::size_t m = u.rows, d = u.cols;
    if (c.size() != m) throw std::invalid_argument("max_min_slack: size mismatch");
    if (m == 0) throw std::invalid_argument("max_min_slack: no slack rows");

    if (d + 1 <= 8) {
        double t_cap = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            double l1 = 0;
            for (std::size_t i = 0; i < d; ++i) l1 += std::abs(u(j, i));
            t_cap = std::max(t_cap, std::abs(c[j]) + l1 * r_box + 1.0);
        }
        std::vector<detail::LpCons> cons;
        cons.reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            Vec g(d + 1, 0.0);
            for (std::size_t i = 0; i < d; ++i) g[i] = -u(j, i);
            g[d] = 1.0;  // t - u_j.x <= c_j
            cons.push_back({std::move(g), c[j]});
        }
        Vec obj(d + 1, 0.0);
        obj[d] = 1.0;
        Vec lo(d + 1, -r_box), hi(d + 1, r_box);
        lo[d] = -t_cap;
        hi[d] = t_cap;
        CounterRng rng(seed, RngStream::kSolver);
        detail::LpResult r = detail::seidel_lp(std::move(cons), std::move(obj), std::move(lo),
                                               std::move(hi), rng);
        if (!r.feasible) throw Error("max_min_slack: box LP infeasible (cannot happen)");
        MaxMinSlack out;
        out.value = r.y[d];
        out.x.assign(r.y.begin(), r.y.begin() + static_cast<std::ptrdiff_t>(d));
        return out;
    }

    // Fallback for high dimension: bisection-free feasibility probe via the
    // min-norm solver on the eps-shifted system, using the box certificate.
    const double eps_probe = 1e-7;
    Polyhedron poly;
    poly.a = Matrix(m, d);
    poly.b.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < d; ++i) poly.a(j, i) = -u(j, i);
        poly.b[j] = c[j] - eps_probe;
    }
    SolverOptions opts;
    opts.r_box = r_box;
    try {
        MinNormSolution sol = min_norm_point(poly, 1e-9, opts);
        double minslack = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j)
            minslack = std::min(minslack, dot({u.row(j), d}, std::span<const double>(sol.point)) + c[j]);
        double xmax = 0;
        for (double xi : sol.point) xmax = std::max(xmax, std::abs(xi));
        if (xmax > r_box) return {0.0, sol.point};
        return {minslack, sol.point};
    } catch (const InfeasibleError&) {
        return {0.0, Vec(d, 0.0)};
    }
}

}  // namespace hann::minnorm
