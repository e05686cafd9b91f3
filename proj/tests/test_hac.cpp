#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <string>

#include "doctest.h"
#include "hann/hac.hpp"
#include "hann/rng.hpp"

using namespace hann;
using geometry::Arrangement;
using geometry::SignVector;
using hac::HacClassifier;
using hac::LabeledSample;

namespace {

Arrangement make_arrangement(int d, std::vector<Vec> columns, Vec offsets) {
    Arrangement arr;
    arr.normals = Matrix(static_cast<std::size_t>(d), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (int i = 0; i < d; ++i)
            arr.normals(static_cast<std::size_t>(i), j) = columns[j][static_cast<std::size_t>(i)];
    arr.offsets = std::move(offsets);
    return arr;
}

// Raw re-implementation of h(sgn(W^T x + b)) on top of string keys.
int oracle_predict(const Arrangement& arr, const std::map<std::string, int>& table,
                   int default_label, const Vec& x) {
    std::string key;
    for (int j = 0; j < arr.k(); ++j) {
        double t = arr.offsets[static_cast<std::size_t>(j)];
        for (int i = 0; i < arr.d(); ++i)
            t += arr.normals(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) *
                 x[static_cast<std::size_t>(i)];
        key.push_back(t >= 0 ? '+' : '-');
    }
    auto it = table.find(key);
    return it == table.end() ? default_label : it->second;
}

}  // namespace

TEST_CASE("predict: lookup of the cell pattern") {
    // three pairwise-crossing lines; the cell of (1.3, 0.5) gets label +1
    Arrangement arr = make_arrangement(2, {{1, 2}, {1, -1}, {4, 1}}, {0, 1, -2});
    Vec probe{1.3, 0.5};
    SignVector pattern = geometry::sign_vector(arr, probe);

    HacClassifier clf;
    clf.arrangement = arr;
    clf.rank_budget = 2;
    clf.table.entries[pattern] = +1;
    clf.table.default_label = -1;

    CHECK(hac::predict(clf, probe) == +1);
    CHECK(hac::predict(clf, Vec{-10.0, -10.0}) == -1);  // different cell, default
}

TEST_CASE("predict: empty table falls back to the default label everywhere") {
    HacClassifier clf;
    clf.arrangement = make_arrangement(2, {{1, 0}}, {0});
    clf.rank_budget = 1;
    clf.table.default_label = -1;
    CounterRng rng(3, RngStream::kData);
    for (int i = 0; i < 20; ++i) CHECK(hac::predict(clf, Vec{rng.normal(), rng.normal()}) == -1);
}

TEST_CASE("predict: agrees with an independent scalar oracle on random classifiers") {
    CounterRng rng(17, RngStream::kData);
    for (int rep = 0; rep < 5; ++rep) {
        int d = 1 + static_cast<int>(rng.below(3));
        int k = 1 + static_cast<int>(rng.below(4));
        std::vector<Vec> cols;
        Vec offs;
        for (int j = 0; j < k; ++j) {
            Vec w(static_cast<std::size_t>(d));
            for (auto& v : w) v = rng.normal();
            cols.push_back(w);
            offs.push_back(rng.normal());
        }
        Arrangement arr = make_arrangement(d, cols, offs);

        HacClassifier clf;
        clf.arrangement = arr;
        clf.rank_budget = std::min(d, k);
        std::map<std::string, int> shadow;
        for (int t = 0; t < 40; ++t) {
            Vec x(static_cast<std::size_t>(d));
            for (auto& v : x) v = rng.normal();
            SignVector sv = geometry::sign_vector(arr, x);
            if (!clf.table.entries.count(sv)) {
                int label = rng.below(2) ? +1 : -1;
                clf.table.entries[sv] = label;
                shadow[sv.str()] = label;
            }
        }
        for (int t = 0; t < 1000; ++t) {
            Vec x(static_cast<std::size_t>(d));
            for (auto& v : x) v = rng.normal();
            CHECK(hac::predict(clf, x) == oracle_predict(arr, shadow, +1, x));
        }
    }
}

TEST_CASE("predict is constant on cells") {
    CounterRng rng(21, RngStream::kData);
    Arrangement arr = make_arrangement(2, {{1, 0.3}, {-0.2, 1}, {1, -1}}, {0.1, -0.4, 0.2});
    HacClassifier clf;
    clf.arrangement = arr;
    clf.rank_budget = 2;
    clf.table = hac::fit_table_erm(arr, {{{0.5, 0.5}, +1}, {{-1, -1}, -1}});
    std::map<std::string, int> by_pattern;
    for (int t = 0; t < 2000; ++t) {
        Vec x{4 * rng.normal(), 4 * rng.normal()};
        std::string key = geometry::sign_vector(arr, x).str();
        int pred = hac::predict(clf, x);
        auto [it, fresh] = by_pattern.emplace(key, pred);
        if (!fresh) CHECK(it->second == pred);
    }
}

TEST_CASE("fit_table_erm: majority and tie-break") {
    Arrangement arr = make_arrangement(1, {{1}}, {0});
    // all three samples in the same cell (x >= 0)
    std::vector<LabeledSample> maj{{{1.0}, +1}, {{2.0}, +1}, {{3.0}, -1}};
    CHECK(hac::fit_table_erm(arr, maj).lookup(geometry::sign_vector(arr, Vec{1.0})) == +1);

    std::vector<LabeledSample> tie{{{1.0}, +1}, {{2.0}, -1}};
    CHECK(hac::fit_table_erm(arr, tie).lookup(geometry::sign_vector(arr, Vec{1.0})) == +1);
}

TEST_CASE("fit_table_erm: beats every table in exhaustive enumeration") {
    CounterRng rng(29, RngStream::kData);
    for (int rep = 0; rep < 6; ++rep) {
        int k = 1 + static_cast<int>(rng.below(3));
        std::vector<Vec> cols;
        Vec offs;
        for (int j = 0; j < k; ++j) {
            cols.push_back({rng.normal(), rng.normal()});
            offs.push_back(rng.normal());
        }
        Arrangement arr = make_arrangement(2, cols, offs);
        std::vector<LabeledSample> samples;
        for (int i = 0; i < 25; ++i)
            samples.push_back({{2 * rng.normal(), 2 * rng.normal()}, rng.below(2) ? +1 : -1});

        HacClassifier fitted;
        fitted.arrangement = arr;
        fitted.rank_budget = std::min(2, k);
        fitted.table = hac::fit_table_erm(arr, samples);
        double fitted_risk = hac::empirical_risk(fitted, samples);

        // enumerate all labelings of the realized patterns
        std::vector<SignVector> patterns;
        for (const auto& s : samples) {
            SignVector sv = geometry::sign_vector(arr, s.x);
            if (std::find(patterns.begin(), patterns.end(), sv) == patterns.end())
                patterns.push_back(sv);
        }
        REQUIRE(patterns.size() <= 10);
        for (std::uint32_t mask = 0; mask < (1u << patterns.size()); ++mask) {
            HacClassifier other = fitted;
            other.table.entries.clear();
            for (std::size_t p = 0; p < patterns.size(); ++p)
                other.table.entries[patterns[p]] = (mask >> p) & 1 ? +1 : -1;
            CHECK(fitted_risk <= hac::empirical_risk(other, samples) + 1e-12);
        }
    }
}

TEST_CASE("histogram_hac: d=2, k_tilde=3 grid has 4 hyperplanes and 9 cells") {
    CounterRng rng(41, RngStream::kData);
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 50; ++i)
        samples.push_back({{rng.uniform(), rng.uniform()}, rng.below(2) ? +1 : -1});
    HacClassifier clf = hac::histogram_hac(2, 3, samples);
    CHECK(clf.arrangement.k() == 4);
    CHECK(clf.rank_budget == 2);
    CHECK(geometry::enumerate_cells(clf.arrangement).size() == 9);
    CHECK(geometry::numeric_rank(clf.arrangement.normals) <= 2);
}

TEST_CASE("histogram_hac: k_tilde=1 is the global majority vote") {
    std::vector<LabeledSample> samples{{{0.1}, +1}, {{0.5}, +1}, {{0.9}, -1}};
    HacClassifier clf = hac::histogram_hac(1, 1, samples);
    CHECK(clf.arrangement.k() == 0);
    CHECK(hac::predict(clf, Vec{0.3}) == +1);
    CHECK(hac::predict(clf, Vec{0.99}) == +1);
}

TEST_CASE("histogram_hac: threshold posterior at 1/2 labels cubes by lower corner") {
    CounterRng rng(6, RngStream::kData);
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 10000; ++i) {
        Vec x{rng.uniform(), rng.uniform()};
        samples.push_back({x, x[0] > 0.5 ? +1 : -1});
    }
    HacClassifier clf = hac::histogram_hac(2, 4, samples);

    // direct cube-by-cube majority count
    for (int cx = 0; cx < 4; ++cx)
        for (int cy = 0; cy < 4; ++cy) {
            Vec probe{(cx + 0.5) / 4.0, (cy + 0.5) / 4.0};
            int expected = (cx * 0.25 >= 0.5) ? +1 : -1;
            CHECK(hac::predict(clf, probe) == expected);
        }
}

TEST_CASE("histogram_hac: rejects samples outside the unit cube") {
    std::vector<LabeledSample> bad{{{1.2, 0.0}, +1}};
    CHECK_THROWS_AS((void)hac::histogram_hac(2, 3, bad), std::invalid_argument);
}

TEST_CASE("brute_force_erm: linearly separable data reaches zero risk with one line") {
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 5; ++i) samples.push_back({{static_cast<double>(i), 0.0}, -1});
    for (int i = 0; i < 5; ++i) samples.push_back({{static_cast<double>(i), 3.0}, +1});
    HacClassifier clf = hac::brute_force_erm(samples, 1);
    CHECK(hac::empirical_risk(clf, samples) == 0.0);
}

TEST_CASE("brute_force_erm: XOR needs two hyperplanes") {
    std::vector<LabeledSample> xordata{
        {{0.0, 0.0}, +1}, {{1.0, 1.0}, +1}, {{0.0, 1.0}, -1}, {{1.0, 0.0}, -1}};
    HacClassifier one = hac::brute_force_erm(xordata, 1);
    CHECK(hac::empirical_risk(one, xordata) == doctest::Approx(0.25));
    HacClassifier two = hac::brute_force_erm(xordata, 2);
    CHECK(hac::empirical_risk(two, xordata) == 0.0);
}

TEST_CASE("brute_force_erm: constant labels give zero risk; risk is monotone in k") {
    std::vector<LabeledSample> constant{{{0.0, 0.0}, +1}, {{1.0, 2.0}, +1}, {{3.0, 1.0}, +1}};
    CHECK(hac::empirical_risk(hac::brute_force_erm(constant, 1), constant) == 0.0);

    CounterRng rng(73, RngStream::kData);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<LabeledSample> samples;
        for (int i = 0; i < 12; ++i)
            samples.push_back({{rng.normal(), rng.normal()}, rng.below(2) ? +1 : -1});
        double r1 = hac::empirical_risk(hac::brute_force_erm(samples, 1), samples);
        double r2 = hac::empirical_risk(hac::brute_force_erm(samples, 2), samples);
        CHECK(r2 <= r1 + 1e-12);
    }
}

TEST_CASE("brute_force_erm: budget guard") {
    std::vector<LabeledSample> samples(31, LabeledSample{{0.0, 0.0}, +1});
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].x[0] = static_cast<double>(i);
    CHECK_THROWS_AS((void)hac::brute_force_erm(samples, 1), BudgetError);
}

TEST_CASE("empirical_risk: trivial values and counting oracle") {
    Arrangement arr = make_arrangement(1, {{1}}, {0});
    HacClassifier sign_clf;
    sign_clf.arrangement = arr;
    sign_clf.rank_budget = 1;
    sign_clf.table.entries[geometry::SignVector::from_string("+")] = +1;
    sign_clf.table.entries[geometry::SignVector::from_string("-")] = -1;

    std::vector<LabeledSample> perfect{{{1.0}, +1}, {{-2.0}, -1}};
    CHECK(hac::empirical_risk(sign_clf, perfect) == 0.0);

    HacClassifier constant = sign_clf;
    constant.table.entries.clear();
    constant.table.default_label = +1;
    std::vector<LabeledSample> balanced{{{1.0}, +1}, {{-2.0}, -1}, {{2.0}, +1}, {{-1.0}, -1}};
    CHECK(hac::empirical_risk(constant, balanced) == doctest::Approx(0.5));

    CounterRng rng(91, RngStream::kData);
    std::vector<LabeledSample> random_set;
    for (int i = 0; i < 57; ++i) random_set.push_back({{rng.normal()}, rng.below(2) ? +1 : -1});
    std::size_t wrong = 0;
    for (const auto& s : random_set)
        if ((s.x[0] >= 0 ? +1 : -1) != s.y) ++wrong;
    CHECK(hac::empirical_risk(sign_clf, random_set) ==
          doctest::Approx(static_cast<double>(wrong) / 57.0));
}
