#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "pedcc/errors.hpp"
#include "pedcc/frame.hpp"
#include "pedcc/loss.hpp"
#include "pedcc/rng.hpp"

using namespace pedcc;

namespace {

std::vector<double> random_unit_rows(rng& gen, std::size_t n, int d) {
    std::vector<double> rows(n * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (int k = 0; k < d; ++k) {
            double v = gen.normal();
            rows[i * d + k] = v;
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (int k = 0; k < d; ++k) rows[i * d + k] /= norm;
    }
    return rows;
}

} // namespace

TEST_CASE("uniform cosines with zero margin give log C") {
    loss_params p;
    p.scale_s = 10.0;
    p.margin_m = 0.0;
    std::vector<double> cos = {0.3, 0.3, 0.3, 0.3};
    am_softmax_result r = am_softmax_loss(cos, 4, {2}, p);
    CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("margin loss matches the direct formula on a worked sample") {
    loss_params p;
    p.scale_s = 10.0;
    p.margin_m = 0.35;
    std::vector<double> cos = {0.9, 0.1, 0.1};
    am_softmax_result r = am_softmax_loss(cos, 3, {0}, p);
    double direct = -std::log(std::exp(5.5) / (std::exp(5.5) + 2.0 * std::exp(1.0)));
    CHECK(r.loss == doctest::Approx(direct).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(0.02198).epsilon(1e-3));
}

TEST_CASE("a larger margin strictly increases the loss") {
    std::vector<double> cos = {0.8, 0.2, -0.1};
    double prev = -1.0;
    for (double m : {0.0, 0.2, 0.4, 0.6}) {
        loss_params p;
        p.margin_m = m;
        am_softmax_result r = am_softmax_loss(cos, 3, {0}, p);
        CHECK(r.loss > prev);
        prev = r.loss;
    }
}

TEST_CASE("margin-loss gradient matches finite differences") {
    rng gen(5);
    loss_params p;
    std::vector<double> cos(3 * 4);
    for (double& v : cos) v = gen.uniform(-1.0, 1.0);
    std::vector<int> labels = {1, 3, 0};
    am_softmax_result r = am_softmax_loss(cos, 4, labels, p);
    std::vector<double> fd = oracle::fd_gradient(
        [&](const std::vector<double>& x) { return am_softmax_loss(x, 4, labels, p).loss; }, cos, 1e-6);
    for (std::size_t i = 0; i < cos.size(); ++i) {
        double denom = std::max({std::abs(r.grad_cos[i]), std::abs(fd[i]), 1e-6});
        CHECK(std::abs(r.grad_cos[i] - fd[i]) / denom < 1e-4);
    }
}

TEST_CASE("the margin loss stays finite at extreme scale and boundary cosines") {
    loss_params p;
    p.scale_s = 64.0;
    p.margin_m = 0.35;
    std::vector<double> cos = {1.0, -1.0, 1.0, -1.0};
    am_softmax_result r = am_softmax_loss(cos, 4, {0}, p);
    CHECK(std::isfinite(r.loss));
    for (double g : r.grad_cos) CHECK(std::isfinite(g));
}

TEST_CASE("mean squared distance to the labeled centroid") {
    centroid_frame f = generate_frame(3, 4, 21);

    std::vector<double> exact(f.centroid(1), f.centroid(1) + 4);
    mse_result zero = mse_loss(exact, {1}, f);
    CHECK(zero.loss == doctest::Approx(0.0).epsilon(1e-15));

    std::vector<double> anti(4);
    for (int k = 0; k < 4; ++k) anti[k] = -f.centroid(2)[k];
    mse_result four = mse_loss(anti, {2}, f);
    CHECK(four.loss == doctest::Approx(4.0).epsilon(1e-12));

    std::vector<double> both(exact);
    both.insert(both.end(), anti.begin(), anti.end());
    std::vector<double> fixed(both);
    for (int k = 0; k < 4; ++k) fixed[k] = f.centroid(0)[k];
    mse_result pair = mse_loss(fixed, {0, 2}, f);
    CHECK(pair.loss == doctest::Approx(2.0).epsilon(1e-12));

    for (std::size_t i = 0; i < pair.grad_f.size(); ++i) {
        int row = static_cast<int>(i) / 4, k = static_cast<int>(i) % 4;
        double expect = 2.0 * (fixed[i] - f.centroid(row == 0 ? 0 : 2)[k]) / 2.0;
        CHECK(pair.grad_f[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("combined loss assembles its terms and is exact when perfectly fitted") {
    centroid_frame f = generate_frame(5, 8, 33);
    rng gen(3);
    std::vector<double> feats = random_unit_rows(gen, 6, 8);
    std::vector<int> labels = {0, 1, 2, 3, 4, 0};

    loss_params p;
    p.mse_weight_n = 2.0;
    loss_value v = pedcc_loss(feats, labels, f, p);
    CHECK(v.total == doctest::Approx(v.am_term + 2.0 * std::sqrt(v.mse_term)).epsilon(1e-12));
    CHECK(v.mse_term >= 0.0);

    am_softmax_result am_only = [&] {
        std::vector<double> cos(6 * 5);
        for (int i = 0; i < 6; ++i)
            for (int c = 0; c < 5; ++c) {
                double s = 0.0;
                for (int k = 0; k < 8; ++k) s += feats[i * 8 + k] * f.centroid(c)[k];
                cos[i * 5 + c] = s;
            }
        return am_softmax_loss(cos, 5, labels, p);
    }();
    CHECK(v.am_term == doctest::Approx(am_only.loss).epsilon(1e-12));
    CHECK(v.mse_term == doctest::Approx(mse_loss(feats, labels, f).loss).epsilon(1e-12));

    std::vector<double> placed;
    for (int i = 0; i < 5; ++i) placed.insert(placed.end(), f.centroid(i), f.centroid(i) + 8);
    loss_params zero_m;
    zero_m.margin_m = 0.0;
    loss_value fit = pedcc_loss(placed, {0, 1, 2, 3, 4}, f, zero_m);
    CHECK(fit.mse_term == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(fit.total == fit.am_term);
}

TEST_CASE("combined-loss gradient matches finite differences") {
    rng gen(17);
    for (int trial = 0; trial < 4; ++trial) {
        int c = trial % 2 == 0 ? 3 : 5;
        int d = trial < 2 ? 8 : 16;
        centroid_frame f = generate_frame(c, d, 100 + trial);
        std::size_t n = 2 + gen.index(4);
        std::vector<double> feats = random_unit_rows(gen, n, d);
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(gen.index(c));

        loss_params p;
        loss_value v = pedcc_loss(feats, labels, f, p);
        std::vector<double> fd = oracle::fd_gradient(
            [&](const std::vector<double>& x) { return pedcc_loss(x, labels, f, p).total; }, feats,
            1e-5);
        for (std::size_t i = 0; i < feats.size(); ++i) {
            double denom = std::max({std::abs(v.grad_f[i]), std::abs(fd[i]), 1e-6});
            CHECK(std::abs(v.grad_f[i] - fd[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("loss inputs are validated") {
    centroid_frame f = generate_frame(3, 4, 2);
    std::vector<double> feats(4, 0.5);

    CHECK_THROWS_AS(pedcc_loss(feats, {3}, f, loss_params{}), validation_error);
    CHECK_THROWS_AS(pedcc_loss(feats, {-1}, f, loss_params{}), validation_error);

    std::vector<double> bad(feats);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(pedcc_loss(bad, {0}, f, loss_params{}), validation_error);

    loss_params neg_s;
    neg_s.scale_s = -1.0;
    CHECK_THROWS_AS(neg_s.validate(), validation_error);
    loss_params small_n;
    small_n.mse_weight_n = 0.5;
    CHECK_THROWS_AS(small_n.validate(), validation_error);
    loss_params neg_m;
    neg_m.margin_m = -0.1;
    CHECK_THROWS_AS(neg_m.validate(), validation_error);

    std::vector<double> cos = {0.5, std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(am_softmax_loss(cos, 3, {0}, loss_params{}), validation_error);
}
