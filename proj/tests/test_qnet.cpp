#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hann/compression.hpp"
#include "hann/json_io.hpp"
#include "hann/qnet.hpp"
#include "hann/rng.hpp"

using namespace hann;
using qnet::HannNetwork;
using qnet::HeadKind;
using qnet::LossKind;
using qnet::Mode;
using qnet::QuantizerKind;

namespace {

// Smooth swish-sign curve; the library's surrogate must equal its derivative.
double swish_sign_value(double beta, double x) {
    double s = 1.0 / (1.0 + std::exp(-beta * x));
    return 2.0 * s * (1.0 + beta * x * (1.0 - s)) - 1.0;
}

Matrix random_matrix(std::size_t r, std::size_t c, CounterRng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.data) v = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("quantizer surrogates: pinned values") {
    QuantizerKind ste = QuantizerKind::ste_sign();
    CHECK(ste.surrogate_grad(0.5) == 1.0);
    CHECK(ste.surrogate_grad(2.0) == 0.0);
    CHECK(ste.surrogate_grad(-0.99) == 1.0);
    CHECK(ste.surrogate_grad(1.0) == 1.0);   // clip boundary included
    CHECK(ste.surrogate_grad(-1.01) == 0.0);

    QuantizerKind swish = QuantizerKind::swish_sign(5.0);
    CHECK(swish.surrogate_grad(0.0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("swish surrogate equals the derivative of the smooth curve") {
    QuantizerKind swish = QuantizerKind::swish_sign(5.0);
    const double h = 1e-6;
    for (double x : {-2.0, -0.7, -0.11, 0.0, 0.05, 0.3, 0.9, 1.7}) {
        double fd = (swish_sign_value(5.0, x + h) - swish_sign_value(5.0, x - h)) / (2 * h);
        CHECK(swish.surrogate_grad(x) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("surrogate locality") {
    QuantizerKind ste = QuantizerKind::ste_sign();
    CounterRng rng(1, RngStream::kData);
    for (int i = 0; i < 100; ++i) {
        double t = 1.0 + 10.0 * rng.uniform();
        CHECK(ste.surrogate_grad(t) == 0.0);
        CHECK(ste.surrogate_grad(-t) == 0.0);
    }
    QuantizerKind swish = QuantizerKind::swish_sign(5.0);
    CHECK(std::abs(swish.surrogate_grad(20.0 / 5.0)) < 1e-6);
    CHECK(std::abs(swish.surrogate_grad(-20.0 / 5.0)) < 1e-6);
}

TEST_CASE("forward: threshold emits exact signs with sgn(0)=+1") {
    HannNetwork net = qnet::build_hann(2, 2, 2, HeadKind::Mlp2k, 2, 3);
    net.hyper.w = Matrix::identity(2);
    net.hyper.b = {0.0, 0.0};

    Matrix batch(2, 2);
    batch(0, 0) = 2;
    batch(0, 1) = -3;
    batch(1, 0) = 0;
    batch(1, 1) = 0;
    auto fp = qnet::forward(net, batch, Mode::Eval);
    CHECK(fp.code(0, 0) == 1.0);
    CHECK(fp.code(0, 1) == -1.0);
    CHECK(fp.code(1, 0) == 1.0);
    CHECK(fp.code(1, 1) == 1.0);
    for (double v : fp.code.data) CHECK((v == 1.0 || v == -1.0));
}

TEST_CASE("forward: eval mode is deterministic bit for bit") {
    HannNetwork net = qnet::build_hann(3, 2, 5, HeadKind::Resnet1000, 3, 9);
    CounterRng rng(4, RngStream::kData);
    Matrix batch = random_matrix(17, 3, rng);
    auto a = qnet::forward(net, batch, Mode::Eval);
    auto b = qnet::forward(net, batch, Mode::Eval);
    CHECK(a.out.data == b.out.data);
}

TEST_CASE("full HANN prediction equals table lookup over the extracted arrangement") {
    for (int k : {2, 3, 4}) {
        HannNetwork net = qnet::build_hann(2, 2, k, HeadKind::Mlp2k, 2, 100 + k);
        geometry::Arrangement arr = qnet::extract_arrangement(net);

        // head as a lookup table over all 2^k codes
        hac::HacClassifier table_clf;
        table_clf.arrangement = arr;
        table_clf.rank_budget = 2;
        Matrix codes(std::size_t{1} << k, static_cast<std::size_t>(k));
        for (std::size_t mask = 0; mask < codes.rows; ++mask)
            for (int j = 0; j < k; ++j)
                codes(mask, static_cast<std::size_t>(j)) = (mask >> j) & 1 ? 1.0 : -1.0;
        Matrix head_in = net.head1.forward(codes);
        Matrix head_scores = net.head2.forward(qnet::relu(head_in));
        for (std::size_t mask = 0; mask < codes.rows; ++mask) {
            geometry::SignVector sv;
            for (int j = 0; j < k; ++j)
                sv.bits.push_back(static_cast<std::int8_t>((mask >> j) & 1 ? 1 : -1));
            table_clf.table.entries[sv] = head_scores(mask, 0) >= 0 ? +1 : -1;
        }

        CounterRng rng(31, RngStream::kData);
        Matrix batch = random_matrix(1000, 2, rng, 2.0);
        std::vector<int> net_pred = qnet::predict_classes(net, batch);
        for (std::size_t i = 0; i < batch.rows; ++i) {
            int table_pred = hac::predict(table_clf, batch.row_span(i)) == 1 ? 1 : 0;
            CHECK(net_pred[i] == table_pred);
        }
    }
}

TEST_CASE("gradient check: dense+relu chain matches central finite differences") {
    CounterRng rng(17, RngStream::kData);
    qnet::DenseLayer l1, l2;
    l1.w = random_matrix(5, 8, rng, 0.5);
    l1.b.assign(8, 0.0);
    for (auto& b : l1.b) b = 0.3 * rng.normal();
    l2.w = random_matrix(8, 3, rng, 0.5);
    l2.b.assign(3, 0.0);

    Matrix x = random_matrix(7, 5, rng);
    std::vector<int> labels{0, 2, 1, 1, 0, 2, 0};

    auto loss_of = [&]() {
        Matrix h = qnet::relu(l1.forward(x));
        auto [loss, g] = qnet::loss_and_grad(LossKind::CrossEntropy, l2.forward(h), labels);
        return loss;
    };

    Matrix h_pre = l1.forward(x);
    Matrix h = qnet::relu(h_pre);
    Matrix out = l2.forward(h);
    auto [loss, gout] = qnet::loss_and_grad(LossKind::CrossEntropy, out, labels);
    qnet::DenseGrad g2, g1;
    Matrix gh = qnet::dense_backward(l2, h, gout, g2);
    Matrix gh_pre = qnet::relu_backward(h_pre, gh);
    qnet::dense_backward(l1, x, gh_pre, g1);

    const double step = 1e-5;
    auto check_param = [&](double& p, double analytic) {
        double keep = p;
        p = keep + step;
        double up = loss_of();
        p = keep - step;
        double down = loss_of();
        p = keep;
        double fd = (up - down) / (2 * step);
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        CHECK(std::abs(fd - analytic) / denom <= 1e-4);
    };
    for (std::size_t i = 0; i < l1.w.data.size(); ++i) check_param(l1.w.data[i], g1.w.data[i]);
    for (std::size_t i = 0; i < l1.b.size(); ++i) check_param(l1.b[i], g1.b[i]);
    for (std::size_t i = 0; i < l2.w.data.size(); ++i) check_param(l2.w.data[i], g2.w.data[i]);
    for (std::size_t i = 0; i < l2.b.size(); ++i) check_param(l2.b[i], g2.b[i]);
}

TEST_CASE("gradient check: head parameters of the full network (differentiable path)") {
    HannNetwork net = qnet::build_hann(3, 2, 4, HeadKind::Resnet1000, 3, 5);
    CounterRng rng(23, RngStream::kData);
    Matrix x = random_matrix(6, 3, rng);
    std::vector<int> labels{0, 1, 2, 1, 0, 2};

    auto loss_of = [&]() {
        auto fp = qnet::forward(net, x, Mode::Eval);
        return qnet::loss_and_grad(LossKind::CrossEntropy, fp.out, labels).first;
    };
    auto fp = qnet::forward(net, x, Mode::Eval);
    auto [loss, gout] = qnet::loss_and_grad(LossKind::CrossEntropy, fp.out, labels);
    qnet::Gradients g = qnet::backward(net, fp, gout);

    const double step = 1e-6;
    auto check_param = [&](double& p, double analytic) {
        double keep = p;
        p = keep + step;
        double up = loss_of();
        p = keep - step;
        double down = loss_of();
        p = keep;
        double fd = (up - down) / (2 * step);
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-7});
        CHECK(std::abs(fd - analytic) / denom <= 1e-3);
    };
    CounterRng pick(3, RngStream::kData);
    for (int rep = 0; rep < 60; ++rep) {
        std::size_t i = pick.below(net.head1.w.data.size());
        check_param(net.head1.w.data[i], g.head1.w.data[i]);
        std::size_t j = pick.below(net.head2.w.data.size());
        check_param(net.head2.w.data[j], g.head2.w.data[j]);
        std::size_t s = pick.below(net.skip.w.data.size());
        check_param(net.skip.w.data[s], g.skip.w.data[s]);
    }
}

TEST_CASE("losses: hinge pinned values and kink rule") {
    Matrix s1(1, 1);
    s1(0, 0) = 0.2;
    auto [l1, g1] = qnet::loss_and_grad(LossKind::Hinge, s1, {+1});
    CHECK(l1 == doctest::Approx(0.8));
    CHECK(g1(0, 0) == doctest::Approx(-1.0));

    s1(0, 0) = 1.5;
    auto [l2, g2] = qnet::loss_and_grad(LossKind::Hinge, s1, {+1});
    CHECK(l2 == 0.0);
    CHECK(g2(0, 0) == 0.0);

    s1(0, 0) = 1.0;  // margin exactly 1: zero branch
    auto [l3, g3] = qnet::loss_and_grad(LossKind::Hinge, s1, {+1});
    CHECK(l3 == 0.0);
    CHECK(g3(0, 0) == 0.0);
}

TEST_CASE("losses: WW hinge matches a scalar loop oracle") {
    CounterRng rng(41, RngStream::kData);
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t n = 1 + rng.below(6), c = 2 + rng.below(4);
        Matrix s = random_matrix(n, c, rng);
        std::vector<int> y(n);
        for (auto& v : y) v = static_cast<int>(rng.below(c));

        auto [loss, grad] = qnet::loss_and_grad(LossKind::WWHinge, s, y);

        double expect = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t cc = 0; cc < c; ++cc) {
                if (static_cast<int>(cc) == y[i]) continue;
                double m = 1.0 - (s(i, static_cast<std::size_t>(y[i])) - s(i, cc));
                if (m > 0) expect += m;
            }
        expect /= static_cast<double>(n);
        CHECK(loss == doctest::Approx(expect).epsilon(1e-12));

        // symmetric two-class scores reduce to the binary hinge at doubled margin
        if (c == 2) {
            Matrix sym(n, 2);
            for (std::size_t i = 0; i < n; ++i) {
                sym(i, 0) = s(i, 0);
                sym(i, 1) = -s(i, 0);
            }
            auto [ww, gw] = qnet::loss_and_grad(LossKind::WWHinge, sym, y);
            double manual = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double sc = sym(i, static_cast<std::size_t>(y[i])) -
                            sym(i, static_cast<std::size_t>(1 - y[i]));
                manual += std::max(0.0, 1.0 - sc);
            }
            CHECK(ww == doctest::Approx(manual / static_cast<double>(n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("losses: cross entropy gradient is softmax minus one-hot") {
    CounterRng rng(43, RngStream::kData);
    Matrix s = random_matrix(5, 3, rng);
    std::vector<int> y{0, 2, 1, 1, 0};
    auto [loss, grad] = qnet::loss_and_grad(LossKind::CrossEntropy, s, y);
    for (std::size_t i = 0; i < 5; ++i) {
        double z = 0;
        for (std::size_t c = 0; c < 3; ++c) z += std::exp(s(i, c));
        for (std::size_t c = 0; c < 3; ++c) {
            double p = std::exp(s(i, c)) / z;
            double expect = (p - (static_cast<int>(c) == y[i] ? 1 : 0)) / 5.0;
            CHECK(grad(i, c) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("dropout preserves the code in expectation") {
    HannNetwork net = qnet::build_hann(4, 4, 6, HeadKind::Mlp2k, 2, 77);
    CounterRng rng(5, RngStream::kData);
    Matrix x = random_matrix(1, 4, rng);
    auto eval_fp = qnet::forward(net, x, Mode::Eval);

    const double rate = 0.3;
    const int draws = 10000;
    Vec mean(6, 0.0);
    for (int t = 0; t < draws; ++t) {
        auto fp = qnet::forward(net, x, Mode::Train, rate, derive_seed(9, t));
        for (std::size_t j = 0; j < 6; ++j) mean[j] += fp.code_dropped(0, j);
    }
    double se = std::sqrt(rate / (1.0 - rate) / draws);
    for (std::size_t j = 0; j < 6; ++j) {
        mean[j] /= draws;
        CHECK(std::abs(mean[j] - eval_fp.code(0, j)) <= 3 * se + 1e-12);
    }
}

TEST_CASE("training on separable blobs reaches 100% train accuracy (majority of seeds)") {
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CounterRng rng(derive_seed(1234, seed), RngStream::kData);
        const int n = 60;
        Matrix x(n, 2);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            int cls = i % 2;
            x(static_cast<std::size_t>(i), 0) = (cls ? 2.0 : -2.0) + 0.5 * rng.normal();
            x(static_cast<std::size_t>(i), 1) = 0.5 * rng.normal();
            y[static_cast<std::size_t>(i)] = cls;
        }
        HannNetwork net = qnet::build_hann(2, 2, 4, HeadKind::Mlp2k, 2, derive_seed(55, seed));
        net.quantizer = QuantizerKind::swish_sign();
        qnet::TrainConfig cfg;
        cfg.epochs = 200;
        cfg.learning_rate = 0.05;
        cfg.batch_size = 128;
        cfg.loss = LossKind::Hinge;
        cfg.seed = derive_seed(99, seed);
        auto result = qnet::train(net, x, y, x, y, cfg);
        if (result.final_train_acc == 1.0 || result.best_smoothed >= 0.999) ++successes;
    }
    CHECK(successes >= 6);
}

TEST_CASE("train: identical seeds give identical histories and parameters") {
    CounterRng rng(8, RngStream::kData);
    Matrix x = random_matrix(50, 3, rng);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = x(i, 0) + 0.3 * x(i, 1) > 0 ? 1 : 0;

    qnet::TrainConfig cfg;
    cfg.epochs = 30;
    cfg.dropout_rate = 0.25;
    cfg.loss = LossKind::Hinge;
    cfg.seed = 4242;
    cfg.eval_every = 5;

    HannNetwork base = qnet::build_hann(3, 3, 5, HeadKind::Resnet1000, 2, 7);
    auto r1 = qnet::train(base, x, y, x, y, cfg);
    auto r2 = qnet::train(base, x, y, x, y, cfg);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].val_acc_window == r2.history[i].val_acc_window);
        CHECK(r1.history[i].val_acc_smoothed == r2.history[i].val_acc_smoothed);
        CHECK(r1.history[i].train_acc == r2.history[i].train_acc);
    }
    CHECK(r1.best_net.hyper.w.data == r2.best_net.hyper.w.data);
    CHECK(r1.best_net.head2.w.data == r2.best_net.head2.w.data);

    cfg.seed = 4243;
    auto r3 = qnet::train(base, x, y, x, y, cfg);
    CHECK(r1.best_net.hyper.w.data != r3.best_net.hyper.w.data);
}

TEST_CASE("train: sm_param = 1 makes the smoothed value the window mean") {
    CounterRng rng(9, RngStream::kData);
    Matrix x = random_matrix(24, 2, rng);
    std::vector<int> y(24);
    for (std::size_t i = 0; i < 24; ++i) y[i] = x(i, 0) > 0 ? 1 : 0;
    qnet::TrainConfig cfg;
    cfg.epochs = 20;
    cfg.eval_every = 5;
    cfg.sm_param = 1.0;
    cfg.loss = LossKind::Hinge;
    HannNetwork net = qnet::build_hann(2, 2, 3, HeadKind::Mlp2k, 2, 11);
    auto r = qnet::train(net, x, y, x, y, cfg);
    for (const auto& row : r.history) CHECK(row.val_acc_smoothed == row.val_acc_window);
}

TEST_CASE("build_hann: widths, latent gating, and the overparametrization witness") {
    HannNetwork big = qnet::build_hann(2, 2, 10, HeadKind::Mlp2k, 2, 1);
    CHECK(big.hidden_width() == 1024);
    CHECK(!big.has_latent);  // r = d
    CHECK(big.parameter_count() >= 10u * 1024u);
    CHECK(big.parameter_count() > compression::vc_upper_bound(2, 2, 10) / 8);

    HannNetwork lat = qnet::build_hann(6, 2, 4, HeadKind::Resnet1000, 3, 2);
    CHECK(lat.has_latent);
    CHECK(lat.latent.fan_in() == 6);
    CHECK(lat.latent.fan_out() == 2);
    CHECK(lat.hidden_width() == 1000);

    CHECK_THROWS_AS((void)qnet::build_hann(2, 3, 4, HeadKind::Mlp2k, 2, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)qnet::build_hann(2, 2, 1, HeadKind::Mlp2k, 1, 0),
                    std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves predictions exactly") {
    for (auto head : {HeadKind::Mlp2k, HeadKind::Resnet1000}) {
        HannNetwork net = qnet::build_hann(7, 3, 5, head, 3, 21);  // latent layer active
        net.quantizer = QuantizerKind::swish_sign(4.0);
        std::string prefix =
            (std::filesystem::temp_directory_path() / "hann_ckpt_test").string();
        io::save_checkpoint(net, prefix);
        HannNetwork back = io::load_checkpoint(prefix);

        CHECK(back.has_latent == net.has_latent);
        CHECK(back.k == net.k);
        CHECK(back.quantizer.name() == net.quantizer.name());
        CHECK(back.quantizer.beta == net.quantizer.beta);
        CounterRng rng(77, RngStream::kData);
        Matrix x = random_matrix(64, 7, rng);
        auto a = qnet::forward(net, x, Mode::Eval);
        auto b = qnet::forward(back, x, Mode::Eval);
        CHECK(a.out.data == b.out.data);
    }
}

TEST_CASE("extract_arrangement: rank bound and verbatim pass-through") {
    HannNetwork plain = qnet::build_hann(3, 3, 4, HeadKind::Mlp2k, 2, 3);
    geometry::Arrangement arr = qnet::extract_arrangement(plain);
    CHECK(arr.normals.data == plain.hyper.w.data);
    CHECK(arr.offsets == plain.hyper.b);

    HannNetwork factored = qnet::build_hann(6, 2, 5, HeadKind::Resnet1000, 2, 4);
    geometry::Arrangement arr2 = qnet::extract_arrangement(factored);
    CHECK(arr2.d() == 6);
    CHECK(arr2.k() == 5);
    CHECK(geometry::numeric_rank(arr2.normals) <= 2);

    // effective map agrees with the network's own hyperplane code
    CounterRng rng(6, RngStream::kData);
    Matrix x = random_matrix(50, 6, rng);
    auto fp = qnet::forward(factored, x, Mode::Eval);
    for (std::size_t i = 0; i < x.rows; ++i) {
        geometry::SignVector sv = geometry::sign_vector(arr2, x.row_span(i));
        for (int j = 0; j < 5; ++j)
            CHECK(static_cast<double>(sv[static_cast<std::size_t>(j)]) ==
                  fp.code(i, static_cast<std::size_t>(j)));
    }
}
