#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hann/common.hpp"
#include "hann/geometry.hpp"
#include "hann/linalg.hpp"
#include "hann/rng.hpp"

namespace hann::qnet {

// ---------------------------------------------------------------------------
// Quantizers
// ---------------------------------------------------------------------------

/// Threshold activations forward as exact sign (sgn(0) = +1); backward uses a
/// coarse-gradient surrogate.
struct QuantizerKind {
    enum class Kind { SteSign, SwishSign };
    Kind kind = Kind::SteSign;
    double clip = 1.0;  // SteSign pass-through window
    double beta = 5.0;  // SwishSign sharpness

    static QuantizerKind ste_sign(double clip = 1.0) {
        if (!(clip > 0)) throw std::invalid_argument("SteSign: clip must be positive");
        return {Kind::SteSign, clip, 5.0};
    }
    static QuantizerKind swish_sign(double beta = 5.0) {
        if (!(beta > 0)) throw std::invalid_argument("SwishSign: beta must be positive");
        return {Kind::SwishSign, 1.0, beta};
    }

    /// Surrogate derivative at preactivation t.
    double surrogate_grad(double t) const {
        if (kind == Kind::SteSign) return std::abs(t) <= clip ? 1.0 : 0.0;
        double bt = beta * t;
        return beta * (2.0 - bt * std::tanh(0.5 * bt)) / (1.0 + std::cosh(bt));
    }

    std::string name() const { return kind == Kind::SteSign ? "ste_sign" : "swish_sign"; }
};

// ---------------------------------------------------------------------------
// Layers (building blocks; the network composes them explicitly)
// ---------------------------------------------------------------------------

struct DenseLayer {
    Matrix w;  // in x out
    Vec b;     // out

    std::size_t fan_in() const { return w.rows; }
    std::size_t fan_out() const { return w.cols; }

    Matrix forward(const Matrix& x) const {
        Matrix y = matmul(x, w);
        for (std::size_t i = 0; i < y.rows; ++i)
            for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += b[j];
        return y;
    }
};

struct DenseGrad {
    Matrix w;
    Vec b;
};

/// Reverse step through a dense layer: fills the parameter gradient and
/// returns the gradient with respect to the input.
inline Matrix dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& gout,
                             DenseGrad& grad) {
    grad.w = matmul_at_b(x, gout);
    grad.b.assign(layer.b.size(), 0.0);
    for (std::size_t i = 0; i < gout.rows; ++i)
        for (std::size_t j = 0; j < gout.cols; ++j) grad.b[j] += gout(i, j);
    return matmul_a_bt(gout, layer.w);
}

inline Matrix relu(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.data) v = std::max(v, 0.0);
    return y;
}

inline Matrix relu_backward(const Matrix& pre, const Matrix& gout) {
    Matrix g = gout;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        if (pre.data[i] <= 0.0) g.data[i] = 0.0;
    return g;
}

inline Matrix threshold_forward(const Matrix& pre) {
    Matrix y = pre;
    for (double& v : y.data) v = v >= 0.0 ? 1.0 : -1.0;
    return y;
}

inline Matrix threshold_backward(const QuantizerKind& q, const Matrix& pre, const Matrix& gout) {
    Matrix g = gout;
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= q.surrogate_grad(pre.data[i]);
    return g;
}

// ---------------------------------------------------------------------------
// The HANN topology: [latent dense]? -> dense -> threshold -> [dropout] ->
// Boolean head (1-hidden ReLU MLP of width 2^k, or width-1000 residual head
// with a linear skip from the code).
// ---------------------------------------------------------------------------

enum class HeadKind { Mlp2k, Resnet1000 };
enum class Mode { Train, Eval };

struct HannNetwork {
    int input_dim = 1;
    int latent_dim = 1;  // r
    int k = 1;
    int num_classes = 2;
    int out_dim = 1;  // 1 for binary, num_classes otherwise
    bool has_latent = false;
    HeadKind head_kind = HeadKind::Mlp2k;
    QuantizerKind quantizer;

    DenseLayer latent;  // d -> r (only when has_latent)
    DenseLayer hyper;   // (r or d) -> k
    DenseLayer head1;   // k -> hidden
    DenseLayer head2;   // hidden -> out
    DenseLayer skip;    // k -> out (Resnet1000 only)

    std::size_t hidden_width() const { return head1.fan_out(); }

    std::size_t parameter_count() const {
        std::size_t n = hyper.w.data.size() + hyper.b.size() + head1.w.data.size() +
                        head1.b.size() + head2.w.data.size() + head2.b.size();
        if (has_latent) n += latent.w.data.size() + latent.b.size();
        if (head_kind == HeadKind::Resnet1000) n += skip.w.data.size() + skip.b.size();
        return n;
    }

    template <typename F>
    void for_each_dense(F&& f) {
        if (has_latent) f(latent);
        f(hyper);
        f(head1);
        f(head2);
        if (head_kind == HeadKind::Resnet1000) f(skip);
    }
    template <typename F>
    void for_each_dense(F&& f) const {
        if (has_latent) f(latent);
        f(hyper);
        f(head1);
        f(head2);
        if (head_kind == HeadKind::Resnet1000) f(skip);
    }
};

/// Fresh network per the fixed initialization scheme: dense weights uniform
/// on +-sqrt(6/(fan_in+fan_out)), biases zero, except hyperplane-layer biases
/// uniform on +-0.5 so the initial cuts cross standardized data.
inline HannNetwork build_hann(int d, int r, int k, HeadKind head, int num_classes,
                              std::uint64_t seed) {
    if (d < 1 || k < 1 || r < 1 || r > std::min(d, k))
        throw std::invalid_argument("build_hann: need 1 <= r <= min(d, k)");
    if (num_classes < 2) throw std::invalid_argument("build_hann: need >= 2 classes");
    if (head == HeadKind::Mlp2k && k > 20)
        throw std::invalid_argument("build_hann: 2^k head is impractical beyond k = 20");

    HannNetwork net;
    net.input_dim = d;
    net.latent_dim = r;
    net.k = k;
    net.num_classes = num_classes;
    net.out_dim = num_classes == 2 ? 1 : num_classes;
    net.has_latent = r < d;
    net.head_kind = head;

    CounterRng rng(seed, RngStream::kInit);
    auto glorot = [&rng](DenseLayer& layer, std::size_t in, std::size_t out) {
        layer.w = Matrix(in, out);
        double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& v : layer.w.data) v = rng.uniform(-bound, bound);
        layer.b.assign(out, 0.0);
    };

    if (net.has_latent) glorot(net.latent, static_cast<std::size_t>(d), static_cast<std::size_t>(r));
    std::size_t hyper_in = static_cast<std::size_t>(net.has_latent ? r : d);
    glorot(net.hyper, hyper_in, static_cast<std::size_t>(k));
    for (double& b : net.hyper.b) b = rng.uniform(-0.5, 0.5);

    std::size_t hidden = head == HeadKind::Mlp2k ? (std::size_t{1} << k) : std::size_t{1000};
    glorot(net.head1, static_cast<std::size_t>(k), hidden);
    glorot(net.head2, hidden, static_cast<std::size_t>(net.out_dim));
    if (head == HeadKind::Resnet1000)
        glorot(net.skip, static_cast<std::size_t>(k), static_cast<std::size_t>(net.out_dim));
    return net;
}

struct ForwardPass {
    Mode mode = Mode::Eval;
    double dropout_rate = 0.0;
    Matrix input;
    Matrix latent_out;    // empty when no latent layer
    Matrix pre;           // hyperplane preactivations
    Matrix code;          // exact signs
    Matrix code_dropped;  // after inverted dropout (train) or == code (eval)
    Matrix drop_mask;     // 0/1 mask, train mode only
    Matrix hidden_pre;
    Matrix hidden;
    Matrix out;
};

/// Batched forward. Threshold outputs are exact signs; dropout masks are a
/// pure function of (seed), drawn on the Boolean code with inverted scaling.
inline ForwardPass forward(const HannNetwork& net, const Matrix& batch, Mode mode,
                           double dropout_rate = 0.0, std::uint64_t dropout_seed = 0) {
    if (static_cast<int>(batch.cols) != net.input_dim)
        throw std::invalid_argument("forward: batch width mismatch");
    if (dropout_rate < 0 || dropout_rate >= 1)
        throw std::invalid_argument("forward: dropout rate must be in [0, 1)");

    ForwardPass fp;
    fp.mode = mode;
    fp.dropout_rate = dropout_rate;
    fp.input = batch;
    const Matrix& into_hyper = net.has_latent ? (fp.latent_out = net.latent.forward(batch))
                                              : batch;
    fp.pre = net.hyper.forward(into_hyper);
    fp.code = threshold_forward(fp.pre);

    if (mode == Mode::Train && dropout_rate > 0.0) {
        CounterRng rng(dropout_seed, RngStream::kDropout);
        fp.drop_mask = Matrix(fp.code.rows, fp.code.cols);
        fp.code_dropped = fp.code;
        double keep = 1.0 - dropout_rate;
        for (std::size_t i = 0; i < fp.code.data.size(); ++i) {
            double m = rng.uniform() < dropout_rate ? 0.0 : 1.0;
            fp.drop_mask.data[i] = m;
            fp.code_dropped.data[i] = fp.code.data[i] * m / keep;
        }
    } else {
        fp.code_dropped = fp.code;
    }

    fp.hidden_pre = net.head1.forward(fp.code_dropped);
    fp.hidden = relu(fp.hidden_pre);
    fp.out = net.head2.forward(fp.hidden);
    if (net.head_kind == HeadKind::Resnet1000) {
        Matrix skip_out = net.skip.forward(fp.code_dropped);
        for (std::size_t i = 0; i < fp.out.data.size(); ++i) fp.out.data[i] += skip_out.data[i];
    }
    return fp;
}

struct Gradients {
    DenseGrad latent, hyper, head1, head2, skip;
};

/// Exact reverse mode for the full-precision layers; the threshold layer
/// passes gradients through the quantizer's surrogate derivative.
inline Gradients backward(const HannNetwork& net, const ForwardPass& fp, const Matrix& gout) {
    Gradients g;
    Matrix g_hidden = dense_backward(net.head2, fp.hidden, gout, g.head2);
    Matrix g_hidden_pre = relu_backward(fp.hidden_pre, g_hidden);
    Matrix g_code_dropped = dense_backward(net.head1, fp.code_dropped, g_hidden_pre, g.head1);
    if (net.head_kind == HeadKind::Resnet1000) {
        Matrix g_skip_in = dense_backward(net.skip, fp.code_dropped, gout, g.skip);
        for (std::size_t i = 0; i < g_code_dropped.data.size(); ++i)
            g_code_dropped.data[i] += g_skip_in.data[i];
    }

    Matrix g_code = g_code_dropped;
    if (fp.mode == Mode::Train && fp.dropout_rate > 0.0) {
        double keep = 1.0 - fp.dropout_rate;
        for (std::size_t i = 0; i < g_code.data.size(); ++i)
            g_code.data[i] *= fp.drop_mask.data[i] / keep;
    }

    Matrix g_pre = threshold_backward(net.quantizer, fp.pre, g_code);
    const Matrix& hyper_in = net.has_latent ? fp.latent_out : fp.input;
    Matrix g_hyper_in = dense_backward(net.hyper, hyper_in, g_pre, g.hyper);
    if (net.has_latent) dense_backward(net.latent, fp.input, g_hyper_in, g.latent);
    return g;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { Hinge, WWHinge, CrossEntropy };

/// Mean loss and gradient with respect to the score matrix. Binary hinge
/// expects one score column and labels +-1; the multiclass losses expect
/// class indices. Hinge subgradients take the zero branch at the kink.
inline std::pair<double, Matrix> loss_and_grad(LossKind kind, const Matrix& scores,
                                               const std::vector<int>& labels) {
    if (scores.rows != labels.size())
        throw std::invalid_argument("loss_and_grad: label count mismatch");
    const double inv_n = 1.0 / static_cast<double>(scores.rows);
    Matrix grad(scores.rows, scores.cols, 0.0);
    double loss = 0.0;

    switch (kind) {
        case LossKind::Hinge: {
            if (scores.cols != 1) throw std::invalid_argument("Hinge: expected a single score");
            for (std::size_t i = 0; i < scores.rows; ++i) {
                int y = labels[i];
                if (y != 1 && y != -1) throw std::invalid_argument("Hinge: labels must be +-1");
                double margin = 1.0 - y * scores(i, 0);
                if (margin > 0.0) {
                    loss += margin;
                    grad(i, 0) = -static_cast<double>(y) * inv_n;
                }
            }
            break;
        }
        case LossKind::WWHinge: {
            for (std::size_t i = 0; i < scores.rows; ++i) {
                int y = labels[i];
                if (y < 0 || static_cast<std::size_t>(y) >= scores.cols)
                    throw std::invalid_argument("WWHinge: label out of range");
                for (std::size_t c = 0; c < scores.cols; ++c) {
                    if (static_cast<int>(c) == y) continue;
                    double margin = 1.0 - (scores(i, static_cast<std::size_t>(y)) - scores(i, c));
                    if (margin > 0.0) {
                        loss += margin;
                        grad(i, c) += inv_n;
                        grad(i, static_cast<std::size_t>(y)) -= inv_n;
                    }
                }
            }
            break;
        }
        case LossKind::CrossEntropy: {
            for (std::size_t i = 0; i < scores.rows; ++i) {
                int y = labels[i];
                if (y < 0 || static_cast<std::size_t>(y) >= scores.cols)
                    throw std::invalid_argument("CrossEntropy: label out of range");
                double mx = scores(i, 0);
                for (std::size_t c = 1; c < scores.cols; ++c) mx = std::max(mx, scores(i, c));
                double z = 0;
                for (std::size_t c = 0; c < scores.cols; ++c) z += std::exp(scores(i, c) - mx);
                loss += -(scores(i, static_cast<std::size_t>(y)) - mx - std::log(z));
                for (std::size_t c = 0; c < scores.cols; ++c) {
                    double p = std::exp(scores(i, c) - mx) / z;
                    grad(i, c) = (p - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_n;
                }
            }
            break;
        }
    }
    return {loss * inv_n, grad};
}

// ---------------------------------------------------------------------------
// Prediction & accuracy
// ---------------------------------------------------------------------------

inline Matrix scores(const HannNetwork& net, const Matrix& x) {
    return forward(net, x, Mode::Eval).out;
}

/// Class prediction: single-score networks threshold at zero (score 0 maps to
/// class 1, the +1 side); multi-score networks take the argmax, lowest index
/// on ties.
inline std::vector<int> predict_classes(const HannNetwork& net, const Matrix& x) {
    Matrix s = scores(net, x);
    std::vector<int> out(s.rows);
    for (std::size_t i = 0; i < s.rows; ++i) {
        if (s.cols == 1) {
            out[i] = s(i, 0) >= 0 ? 1 : 0;
        } else {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < s.cols; ++c)
                if (s(i, c) > s(i, arg)) arg = c;
            out[i] = static_cast<int>(arg);
        }
    }
    return out;
}

inline double accuracy(const HannNetwork& net, const Matrix& x, const std::vector<int>& labels) {
    std::vector<int> pred = predict_classes(net, x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 128;
    int epochs = 100;
    double dropout_rate = 0.0;
    LossKind loss = LossKind::Hinge;
    std::uint64_t seed = 0;
    double sm_param = 0.1;
    int eval_every = 10;
};

struct HistoryRow {
    int epoch;               // window end (1-based)
    double train_acc;        // at the window boundary
    double val_acc_window;   // mean validation accuracy over the window
    double val_acc_smoothed;
};

struct TrainResult {
    HannNetwork best_net;
    double best_smoothed = -1.0;
    int best_epoch = 0;
    std::vector<HistoryRow> history;
    double final_train_acc = 0.0;
};

namespace detail {

inline std::vector<int> hinge_labels(const std::vector<int>& classes) {
    std::vector<int> out(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] != 0 && classes[i] != 1)
            throw std::invalid_argument("hinge training needs binary class indices");
        out[i] = classes[i] == 1 ? +1 : -1;
    }
    return out;
}

}  // namespace detail

/// Plain SGD with shuffled minibatches and fixed learning rate. Validation
/// accuracy is computed every epoch; every eval_every epochs its window mean
/// feeds the smoothed-accuracy recursion
///   sm <- (1 - sm_param) * sm + sm_param * window_mean
/// and the parameter snapshot with the highest smoothed value is returned.
/// Deterministic given cfg.seed.
inline TrainResult train(HannNetwork net, const Matrix& x_train, const std::vector<int>& y_train,
                         const Matrix& x_val, const std::vector<int>& y_val,
                         const TrainConfig& cfg) {
    if (x_train.rows == 0) throw std::invalid_argument("train: empty training set");
    if (x_train.rows != y_train.size() || x_val.rows != y_val.size())
        throw std::invalid_argument("train: label count mismatch");
    if (cfg.learning_rate <= 0 || cfg.batch_size < 1 || cfg.eval_every < 1)
        throw std::invalid_argument("train: bad config");
    if (!(cfg.dropout_rate >= 0 && cfg.dropout_rate < 1))
        throw std::invalid_argument("train: dropout rate must be in [0, 1)");

    const bool hinge = cfg.loss == LossKind::Hinge;
    std::vector<int> train_targets = hinge ? detail::hinge_labels(y_train) : y_train;

    TrainResult result;
    result.best_net = net;

    std::vector<std::size_t> order(x_train.rows);
    std::iota(order.begin(), order.end(), 0);

    double smoothed = 0.0;
    double window_sum = 0.0;
    int window_count = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        CounterRng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)),
                               RngStream::kShuffle);
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0, batch_idx = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_idx) {
            std::size_t count = std::min(static_cast<std::size_t>(cfg.batch_size),
                                         order.size() - start);
            Matrix xb(count, x_train.cols);
            std::vector<int> yb(count);
            for (std::size_t i = 0; i < count; ++i) {
                std::size_t src = order[start + i];
                for (std::size_t j = 0; j < x_train.cols; ++j) xb(i, j) = x_train(src, j);
                yb[i] = train_targets[src];
            }

            std::uint64_t dropout_seed =
                derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x0D0 + batch_idx);
            ForwardPass fp = forward(net, xb, Mode::Train, cfg.dropout_rate, dropout_seed);
            auto [loss, gout] = loss_and_grad(cfg.loss, fp.out, yb);
            if (!std::isfinite(loss))
                throw Error("train: loss diverged at epoch " + std::to_string(epoch));
            Gradients g = backward(net, fp, gout);

            auto apply = [&](DenseLayer& layer, const DenseGrad& dg) {
                for (std::size_t i = 0; i < layer.w.data.size(); ++i)
                    layer.w.data[i] -= cfg.learning_rate * dg.w.data[i];
                for (std::size_t i = 0; i < layer.b.size(); ++i)
                    layer.b[i] -= cfg.learning_rate * dg.b[i];
            };
            if (net.has_latent) apply(net.latent, g.latent);
            apply(net.hyper, g.hyper);
            apply(net.head1, g.head1);
            apply(net.head2, g.head2);
            if (net.head_kind == HeadKind::Resnet1000) apply(net.skip, g.skip);
        }

        window_sum += x_val.rows ? accuracy(net, x_val, y_val) : 0.0;
        ++window_count;

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            double window_mean = window_sum / window_count;
            smoothed = (1.0 - cfg.sm_param) * smoothed + cfg.sm_param * window_mean;
            window_sum = 0.0;
            window_count = 0;

            HistoryRow row;
            row.epoch = epoch;
            row.train_acc = accuracy(net, x_train, y_train);
            row.val_acc_window = window_mean;
            row.val_acc_smoothed = smoothed;
            result.history.push_back(row);

            if (smoothed > result.best_smoothed) {
                result.best_smoothed = smoothed;
                result.best_epoch = epoch;
                result.best_net = net;
            }
        }
    }
    result.final_train_acc = accuracy(net, x_train, y_train);
    return result;
}

/// Effective (W, b) acting on the input space: the latent and hyperplane
/// dense layers compose into a single affine map whose rank is at most r.
inline geometry::Arrangement extract_arrangement(const HannNetwork& net) {
    geometry::Arrangement arr;
    if (net.has_latent) {
        arr.normals = matmul(net.latent.w, net.hyper.w);  // d x k
        arr.offsets = matvec_t(net.hyper.w, net.latent.b);
        for (std::size_t j = 0; j < arr.offsets.size(); ++j) arr.offsets[j] += net.hyper.b[j];
    } else {
        arr.normals = net.hyper.w;
        arr.offsets = net.hyper.b;
    }
    return arr;
}

}  // namespace hann::qnet
