#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <vector>

#include "hann/common.hpp"
#include "hann/geometry.hpp"

namespace hann::hac {

using geometry::Arrangement;
using geometry::SignVector;

/// Partially defined Boolean function over sign vectors. Patterns not in the
/// map fall back to default_label (+1 by convention, mirroring sgn(0) = +1).
struct LookupTable {
    std::map<SignVector, int> entries;
    int default_label = +1;

    int lookup(const SignVector& sv) const {
        auto it = entries.find(sv);
        return it == entries.end() ? default_label : it->second;
    }
};

struct HacClassifier {
    Arrangement arrangement;
    LookupTable table;
    int rank_budget = 1;  // r with rank(normals) <= r <= min(d, k) (k >= 1)
};

struct LabeledSample {
    Vec x;
    int y;  // +-1 in binary contexts
};

inline void check_binary_labels(const std::vector<LabeledSample>& samples) {
    for (const auto& s : samples)
        if (s.y != 1 && s.y != -1)
            throw std::invalid_argument("labels must be +-1 in binary context");
}

inline int predict(const HacClassifier& clf, std::span<const double> x) {
    return clf.table.lookup(geometry::sign_vector(clf.arrangement, x));
}

/// Empirical risk minimizer over lookup tables for a fixed arrangement:
/// per realized pattern, the majority label (ties -> +1).
inline LookupTable fit_table_erm(const Arrangement& arr,
                                 const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("fit_table_erm: samples must be nonempty");
    check_binary_labels(samples);
    std::map<SignVector, long> vote;
    for (const auto& s : samples) vote[geometry::sign_vector(arr, s.x)] += s.y;
    LookupTable table;
    for (const auto& [pattern, sum] : vote) table.entries[pattern] = sum >= 0 ? +1 : -1;
    return table;
}

inline double empirical_risk(const HacClassifier& clf, const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("empirical_risk: samples must be nonempty");
    std::size_t wrong = 0;
    for (const auto& s : samples)
        if (predict(clf, s.x) != s.y) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

/// Grid-arrangement classifier on [0,1]^d: the d(k_tilde - 1) axis-aligned
/// hyperplanes x_j = l/k_tilde carve the unit cube into k_tilde^d boxes, and
/// the table holds the per-box empirical majority. k_tilde = 1 yields the
/// 0-hyperplane arrangement whose single cell carries the global majority.
inline HacClassifier histogram_hac(int d, int k_tilde, const std::vector<LabeledSample>& samples) {
    if (d < 1) throw std::invalid_argument("histogram_hac: d must be >= 1");
    if (k_tilde < 1) throw std::invalid_argument("histogram_hac: k_tilde must be >= 1");
    check_binary_labels(samples);
    for (const auto& s : samples) {
        if (static_cast<int>(s.x.size()) != d)
            throw std::invalid_argument("histogram_hac: sample dimension mismatch");
        for (double v : s.x)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("histogram_hac: samples must lie in [0,1]^d");
    }

    const int k = d * (k_tilde - 1);
    Arrangement arr;
    arr.normals = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(k));
    arr.offsets.assign(static_cast<std::size_t>(k), 0.0);
    int col = 0;
    for (int j = 0; j < d; ++j)
        for (int l = 1; l <= k_tilde - 1; ++l, ++col) {
            arr.normals(static_cast<std::size_t>(j), static_cast<std::size_t>(col)) = 1.0;
            arr.offsets[static_cast<std::size_t>(col)] =
                -static_cast<double>(l) / static_cast<double>(k_tilde);
        }

    HacClassifier clf;
    clf.arrangement = arr;
    clf.rank_budget = d;
    clf.table = samples.empty() ? LookupTable{} : fit_table_erm(arr, samples);
    return clf;
}

/// Exhaustive ERM over a canonical finite candidate family of arrangements
/// for toy instances (n <= 30, k <= 2, d <= 2): hyperplanes through every
/// d-subset of sample points with offsets perturbed by +-eps, plus
/// axis-aligned separators between consecutive sorted coordinates. Candidate
/// order is deterministic and the first minimizer wins.
inline HacClassifier brute_force_erm(const std::vector<LabeledSample>& samples, int k) {
    if (samples.empty()) throw std::invalid_argument("brute_force_erm: samples must be nonempty");
    check_binary_labels(samples);
    const std::size_t n = samples.size();
    const int d = static_cast<int>(samples[0].x.size());
    if (n > 30 || k < 1 || k > 2 || d > 2)
        throw BudgetError("brute_force_erm: instance outside the n<=30, k<=2, d<=2 budget");

    double diameter = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dist2 = 0;
            for (int t = 0; t < d; ++t) {
                double delta = samples[i].x[static_cast<std::size_t>(t)] -
                               samples[j].x[static_cast<std::size_t>(t)];
                dist2 += delta * delta;
            }
            diameter = std::max(diameter, std::sqrt(dist2));
        }
    const double eps = 1e-6 * (diameter > 0 ? diameter : 1.0);

    struct Candidate {
        Vec w;
        double b;
    };
    std::vector<Candidate> cands;

    if (d == 1) {
        for (const auto& s : samples)
            for (double pm : {+eps, -eps}) cands.push_back({{1.0}, -s.x[0] + pm});
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double dx = samples[j].x[0] - samples[i].x[0];
                double dy = samples[j].x[1] - samples[i].x[1];
                double len = std::sqrt(dx * dx + dy * dy);
                if (len < 1e-12) continue;
                Vec w{-dy / len, dx / len};
                double b = -(w[0] * samples[i].x[0] + w[1] * samples[i].x[1]);
                for (double pm : {+eps, -eps}) cands.push_back({w, b + pm});
            }
        // axis hyperplanes through each point keep the family nonempty for
        // degenerate tiny inputs
        for (int axis = 0; axis < d; ++axis)
            for (const auto& s : samples)
                for (double pm : {+eps, -eps}) {
                    Vec w(static_cast<std::size_t>(d), 0.0);
                    w[static_cast<std::size_t>(axis)] = 1.0;
                    cands.push_back({w, -s.x[static_cast<std::size_t>(axis)] + pm});
                }
    }
    for (int axis = 0; axis < d; ++axis) {
        Vec coords;
        for (const auto& s : samples) coords.push_back(s.x[static_cast<std::size_t>(axis)]);
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        for (std::size_t i = 0; i + 1 < coords.size(); ++i) {
            Vec w(static_cast<std::size_t>(d), 0.0);
            w[static_cast<std::size_t>(axis)] = 1.0;
            cands.push_back({w, -0.5 * (coords[i] + coords[i + 1])});
        }
    }

    // precompute candidate sign of every sample
    std::vector<std::vector<std::int8_t>> signs(cands.size(), std::vector<std::int8_t>(n));
    for (std::size_t c = 0; c < cands.size(); ++c)
        for (std::size_t i = 0; i < n; ++i)
            signs[c][i] = static_cast<std::int8_t>(sgn(dot(cands[c].w, samples[i].x) + cands[c].b));

    auto risk_of = [&](std::span<const std::size_t> chosen) {
        std::map<std::vector<std::int8_t>, long> vote;
        std::vector<std::int8_t> key(chosen.size());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < chosen.size(); ++t) key[t] = signs[chosen[t]][i];
            vote[key] += samples[i].y;
        }
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < chosen.size(); ++t) key[t] = signs[chosen[t]][i];
            int label = vote[key] >= 0 ? +1 : -1;
            if (label != samples[i].y) ++wrong;
        }
        return wrong;
    };

    std::vector<std::size_t> best;
    std::size_t best_wrong = n + 1;
    auto consider = [&](std::span<const std::size_t> chosen) {
        std::size_t wrong = risk_of(chosen);
        if (wrong < best_wrong) {
            best_wrong = wrong;
            best.assign(chosen.begin(), chosen.end());
        }
    };
    if (k == 1) {
        for (std::size_t c = 0; c < cands.size() && best_wrong > 0; ++c) {
            std::size_t chosen[1] = {c};
            consider(chosen);
        }
    } else {
        for (std::size_t c1 = 0; c1 < cands.size() && best_wrong > 0; ++c1)
            for (std::size_t c2 = c1; c2 < cands.size() && best_wrong > 0; ++c2) {
                std::size_t chosen[2] = {c1, c2};
                consider(chosen);
            }
    }

    HacClassifier clf;
    clf.arrangement.normals = Matrix(static_cast<std::size_t>(d), best.size());
    clf.arrangement.offsets.assign(best.size(), 0.0);
    for (std::size_t t = 0; t < best.size(); ++t) {
        for (int i = 0; i < d; ++i)
            clf.arrangement.normals(static_cast<std::size_t>(i), t) =
                cands[best[t]].w[static_cast<std::size_t>(i)];
        clf.arrangement.offsets[t] = cands[best[t]].b;
    }
    clf.rank_budget = std::min(d, k);
    clf.table = fit_table_erm(clf.arrangement, samples);
    return clf;
}

}  // namespace hann::hac
