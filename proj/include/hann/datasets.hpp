#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hann/common.hpp"
#include "hann/hac.hpp"
#include "hann/linalg.hpp"
#include "hann/rng.hpp"

namespace hann::data {

struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // class indices 0..class_count-1
    int class_count = 2;
    std::string source;

    // posterior bundle for synthetic generators
    bool has_eta = false;
    std::function<double(const Vec&)> eta;  // P(Y = +1 | x)
    double lipschitz = 0.0;
    double bayes_risk = std::numeric_limits<double>::quiet_NaN();

    std::size_t n() const { return features.rows; }
    int d() const { return static_cast<int>(features.cols); }

    Vec point(std::size_t i) const {
        return Vec(features.row(i), features.row(i) + features.cols);
    }

    /// Binary view: class 1 -> +1, class 0 -> -1.
    std::vector<hac::LabeledSample> binary_samples() const {
        if (class_count != 2) throw std::invalid_argument("binary_samples: dataset is not binary");
        std::vector<hac::LabeledSample> out;
        out.reserve(n());
        for (std::size_t i = 0; i < n(); ++i) out.push_back({point(i), labels[i] == 1 ? +1 : -1});
        return out;
    }
};

struct SplitSpec {
    std::vector<int> train, valid, test;

    void validate(std::size_t n) const {
        std::set<int> seen;
        auto check = [&](const std::vector<int>& part, const char* name) {
            for (int idx : part) {
                if (idx < 0 || static_cast<std::size_t>(idx) >= n)
                    throw std::invalid_argument(std::string("SplitSpec: ") + name +
                                                " index out of range");
                if (!seen.insert(idx).second)
                    throw std::invalid_argument("SplitSpec: split parts overlap");
            }
        };
        check(train, "train");
        check(valid, "valid");
        check(test, "test");
    }
};

/// Two interleaved half-circle classes: class 0 at (cos t, sin t) and class 1
/// at (1 - cos t, 1/2 - sin t), t uniform on [0, pi], plus isotropic Gaussian
/// noise. Class 0 receives ceil(n/2) points.
inline Dataset make_moons(int n, double noise_sigma, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_moons: n must be >= 2");
    if (noise_sigma < 0) throw std::invalid_argument("make_moons: noise must be nonnegative");
    CounterRng rng(seed, RngStream::kData);

    Dataset ds;
    ds.class_count = 2;
    ds.source = "moons";
    ds.features = Matrix(static_cast<std::size_t>(n), 2);
    ds.labels.resize(static_cast<std::size_t>(n));
    int n0 = (n + 1) / 2;
    for (int i = 0; i < n; ++i) {
        double t = std::numbers::pi * rng.uniform();
        double x, y;
        if (i < n0) {
            x = std::cos(t);
            y = std::sin(t);
            ds.labels[static_cast<std::size_t>(i)] = 0;
        } else {
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
            ds.labels[static_cast<std::size_t>(i)] = 1;
        }
        ds.features(static_cast<std::size_t>(i), 0) = x + noise_sigma * rng.normal();
        ds.features(static_cast<std::size_t>(i), 1) = y + noise_sigma * rng.normal();
    }
    return ds;
}

namespace detail {

/// Irwin-Hall density (sum of d independent uniforms on [0,1]).
inline double irwin_hall_pdf(double s, int d) {
    if (s < 0 || s > d) return 0.0;
    if (d == 1) return 1.0;  // the alternating-sum form would drop the s = 1 endpoint
    double fact = 1.0;
    for (int i = 2; i < d; ++i) fact *= i;  // (d-1)!
    double acc = 0.0;
    double binom = 1.0;  // C(d, j)
    for (int j = 0; j <= static_cast<int>(s); ++j) {
        acc += (j % 2 == 0 ? 1.0 : -1.0) * binom * std::pow(s - j, d - 1);
        binom = binom * (d - j) / (j + 1);
    }
    return acc / fact;
}

/// Composite Simpson over [lo, hi].
template <typename F>
double simpson(F&& f, double lo, double hi, int intervals) {
    if (intervals % 2 == 1) ++intervals;
    double h = (hi - lo) / intervals;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace detail

/// Binary dataset with Lipschitz posterior on [0,1]^d:
/// eta(x) = 1/2 + A sin(omega * sum_j x_j), A = 0.4, omega = L / (A sqrt(d)),
/// so ||grad eta|| = A omega sqrt(d) = L everywhere. The Bayes risk
/// E[1/2 - A |sin(omega S)|], S ~ IrwinHall(d), is computed by 1-D quadrature
/// split at the |sin| kinks.
inline Dataset make_lipschitz(int n, int d, double lipschitz_l, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("make_lipschitz: n, d must be positive");
    if (!(lipschitz_l > 0)) throw std::invalid_argument("make_lipschitz: L must be positive");
    const double amp = 0.4;
    const double omega = lipschitz_l / (amp * std::sqrt(static_cast<double>(d)));

    CounterRng rng(seed, RngStream::kData);
    Dataset ds;
    ds.class_count = 2;
    ds.source = "lipschitz";
    ds.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    ds.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < d; ++j) {
            double x = rng.uniform();
            ds.features(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = x;
            s += x;
        }
        double eta = 0.5 + amp * std::sin(omega * s);
        ds.labels[static_cast<std::size_t>(i)] = rng.uniform() < eta ? 1 : 0;
    }

    ds.has_eta = true;
    ds.lipschitz = lipschitz_l;
    ds.eta = [amp, omega, d](const Vec& x) {
        if (static_cast<int>(x.size()) != d)
            throw std::invalid_argument("eta: dimension mismatch");
        double s = 0;
        for (double v : x) s += v;
        return 0.5 + amp * std::sin(omega * s);
    };

    // Bayes risk: integrate (1/2 - A|sin(omega s)|) f_IH(s) piecewise between
    // the kinks of |sin| at s = m pi / omega
    auto integrand = [amp, omega, d](double s) {
        return (0.5 - amp * std::abs(std::sin(omega * s))) * detail::irwin_hall_pdf(s, d);
    };
    double risk = 0.0;
    const double kink_step = std::numbers::pi / omega;
    double lo = 0.0;
    while (lo < d) {
        double hi = std::min(static_cast<double>(d),
                             (std::floor(lo / kink_step + 1e-12) + 1.0) * kink_step);
        if (hi <= lo) hi = std::min(static_cast<double>(d), lo + kink_step);
        risk += detail::simpson(integrand, lo, hi, 64);
        lo = hi;
    }
    ds.bayes_risk = risk;
    return ds;
}

/// Per-column centering and unit (population) standard deviation, fit on one
/// matrix and applied to others. Zero-variance columns pass through centered.
struct StandardScaler {
    Vec mean, scale;

    static StandardScaler fit(const Matrix& x) {
        if (x.rows == 0) throw std::invalid_argument("StandardScaler: empty fit set");
        StandardScaler s;
        s.mean.assign(x.cols, 0.0);
        s.scale.assign(x.cols, 1.0);
        for (std::size_t j = 0; j < x.cols; ++j) {
            double m = 0;
            for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
            m /= static_cast<double>(x.rows);
            double var = 0;
            for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, j) - m) * (x(i, j) - m);
            var /= static_cast<double>(x.rows);
            s.mean[j] = m;
            s.scale[j] = var > 0 ? std::sqrt(var) : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        if (x.cols != mean.size()) throw std::invalid_argument("StandardScaler: width mismatch");
        Matrix out = x;
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
        return out;
    }
};

/// Projection onto the leading eigenvectors of the sample covariance
/// (denominator n-1) of the fit set. Eigenvalues descend; each component's
/// largest-magnitude entry is made positive so the basis is deterministic.
struct PcaTransform {
    Vec mean;
    Matrix components;  // d x target
    Vec eigenvalues;    // all d, descending

    static PcaTransform fit(const Matrix& x, int target = 50) {
        if (x.rows < 2) throw std::invalid_argument("PcaTransform: need at least 2 rows");
        if (target < 1 || static_cast<std::size_t>(target) > x.cols)
            throw std::invalid_argument("PcaTransform: bad target dimension");
        PcaTransform t;
        t.mean.assign(x.cols, 0.0);
        for (std::size_t j = 0; j < x.cols; ++j) {
            for (std::size_t i = 0; i < x.rows; ++i) t.mean[j] += x(i, j);
            t.mean[j] /= static_cast<double>(x.rows);
        }
        Matrix centered = x;
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= t.mean[j];
        Matrix cov = matmul_at_b(centered, centered);
        for (double& v : cov.data) v /= static_cast<double>(x.rows - 1);

        SymEig eig = sym_eig(cov);
        t.eigenvalues = eig.values;
        t.components = Matrix(x.cols, static_cast<std::size_t>(target));
        for (int c = 0; c < target; ++c) {
            std::size_t arg = 0;
            for (std::size_t r = 1; r < x.cols; ++r)
                if (std::abs(eig.vectors(r, static_cast<std::size_t>(c))) >
                    std::abs(eig.vectors(arg, static_cast<std::size_t>(c))))
                    arg = r;
            double flip = eig.vectors(arg, static_cast<std::size_t>(c)) < 0 ? -1.0 : 1.0;
            for (std::size_t r = 0; r < x.cols; ++r)
                t.components(r, static_cast<std::size_t>(c)) =
                    flip * eig.vectors(r, static_cast<std::size_t>(c));
        }
        return t;
    }

    Matrix apply(const Matrix& x) const {
        if (x.cols != mean.size()) throw std::invalid_argument("PcaTransform: width mismatch");
        Matrix centered = x;
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= mean[j];
        return matmul(centered, components);
    }
};

inline Matrix take_rows(const Matrix& x, const std::vector<int>& idx) {
    Matrix out(idx.size(), x.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < x.cols; ++j)
            out(i, j) = x(static_cast<std::size_t>(idx[i]), j);
    return out;
}

inline std::vector<int> take_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[static_cast<std::size_t>(idx[i])];
    return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("vstack: width mismatch");
    Matrix out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

/// Seeded stratified split: per class, indices are shuffled and allocated to
/// train/valid/test in the given proportions (counts within +-1 of exact).
inline SplitSpec stratified_split(const std::vector<int>& labels, double train_frac,
                                  double valid_frac, std::uint64_t seed) {
    if (train_frac < 0 || valid_frac < 0 || train_frac + valid_frac > 1.0)
        throw std::invalid_argument("stratified_split: bad fractions");
    int classes = 0;
    for (int c : labels) classes = std::max(classes, c + 1);
    SplitSpec split;
    for (int c = 0; c < classes; ++c) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(static_cast<int>(i));
        CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(c)), RngStream::kShuffle);
        rng.shuffle(idx);
        std::size_t n_tr = static_cast<std::size_t>(std::lround(train_frac * static_cast<double>(idx.size())));
        std::size_t n_va = static_cast<std::size_t>(std::lround(valid_frac * static_cast<double>(idx.size())));
        n_tr = std::min(n_tr, idx.size());
        n_va = std::min(n_va, idx.size() - n_tr);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i < n_tr)
                split.train.push_back(idx[i]);
            else if (i < n_tr + n_va)
                split.valid.push_back(idx[i]);
            else
                split.test.push_back(idx[i]);
        }
    }
    return split;
}

struct CsvOptions {
    char delimiter = ',';
    double train_fraction = 0.6;
    double valid_fraction = 0.2;
    std::uint64_t seed = 0;
    // explicit split index files (one integer row index per line) override the
    // seeded stratified split when all three are set
    std::string train_index_file, valid_index_file, test_index_file;
};

struct LoadedCsv {
    Dataset dataset;
    SplitSpec split;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;  // label encoding in first-appearance order
    std::size_t rejected_rows = 0;         // rows dropped for missing values
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<int> read_index_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split index file: " + path);
    std::vector<int> idx;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        idx.push_back(std::stoi(line));
    }
    return idx;
}

}  // namespace detail

/// CSV ingestion: header row, numeric features, labels mapped to class
/// indices in first-appearance order. Rows with missing fields ("" or "?")
/// are rejected and counted; malformed rows raise an error naming the line.
inline LoadedCsv load_csv(const std::string& path, const std::string& label_column,
                          const CsvOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error("CSV file is empty: " + path);
    std::vector<std::string> header = detail::split_line(line, opts.delimiter);
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = i;
    if (label_idx == header.size())
        throw Error("label column '" + label_column + "' not found in " + path);

    LoadedCsv out;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != label_idx) out.feature_names.push_back(header[i]);

    std::vector<Vec> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = detail::split_line(line, opts.delimiter);
        if (fields.size() != header.size())
            throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
        bool missing = false;
        for (const auto& f : fields)
            if (f.empty() || f == "?") missing = true;
        if (missing) {
            ++out.rejected_rows;
            continue;
        }

        Vec x;
        x.reserve(header.size() - 1);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == label_idx) continue;
            try {
                std::size_t used = 0;
                double v = std::stod(fields[i], &used);
                if (used != fields[i].size()) throw std::invalid_argument("trailing");
                x.push_back(v);
            } catch (const std::exception&) {
                throw Error(path + ":" + std::to_string(line_no) + ": non-numeric feature '" +
                            fields[i] + "' in column " + header[i]);
            }
        }
        const std::string& label = fields[label_idx];
        int cls = -1;
        for (std::size_t c = 0; c < out.class_names.size(); ++c)
            if (out.class_names[c] == label) cls = static_cast<int>(c);
        if (cls < 0) {
            cls = static_cast<int>(out.class_names.size());
            out.class_names.push_back(label);
        }
        rows.push_back(std::move(x));
        out.dataset.labels.push_back(cls);
    }
    if (rows.empty()) throw Error("no usable rows in " + path);

    out.dataset.class_count = static_cast<int>(out.class_names.size());
    out.dataset.source = path;
    out.dataset.features = Matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw Error("ragged CSV rows in " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j) out.dataset.features(i, j) = rows[i][j];
    }

    bool explicit_split = !opts.train_index_file.empty() && !opts.valid_index_file.empty() &&
                          !opts.test_index_file.empty();
    if (explicit_split) {
        out.split.train = detail::read_index_file(opts.train_index_file);
        out.split.valid = detail::read_index_file(opts.valid_index_file);
        out.split.test = detail::read_index_file(opts.test_index_file);
    } else {
        out.split = stratified_split(out.dataset.labels, opts.train_fraction,
                                     opts.valid_fraction, opts.seed);
    }
    out.split.validate(out.dataset.n());
    return out;
}

}  // namespace hann::data
