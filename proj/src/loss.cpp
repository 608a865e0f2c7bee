#include "pedcc/loss.hpp"

#include <cmath>
#include <string>

#include "pedcc/errors.hpp"
#include "pedcc/parallel.hpp"

namespace pedcc {

void loss_params::validate() const {
    if (!(scale_s > 0.0) || !std::isfinite(scale_s))
        throw validation_error("loss params: scale s must be positive and finite");
    if (!(margin_m >= 0.0) || !std::isfinite(margin_m))
        throw validation_error("loss params: margin m must be nonnegative and finite");
    if (!(mse_weight_n >= 1.0) || !std::isfinite(mse_weight_n))
        throw validation_error("loss params: weight n must be >= 1");
}

namespace {

void check_labels(const std::vector<int>& labels, int C) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || labels[i] >= C)
            throw validation_error("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                   " outside [0, " + std::to_string(C) + ")");
}

// One sample of the AM-Softmax loss: -log softmax with margin m subtracted
// from the true-class cosine, all scaled by s. Fills p with the softmax
// probabilities of the shifted logits; returns the sample loss.
double am_sample(const double* cos_row, int C, int y, double s, double m, double* p) {
    double zmax = -1e300;
    for (int j = 0; j < C; ++j) {
        double z = s * cos_row[j] - (j == y ? s * m : 0.0);
        p[j] = z;
        if (z > zmax) zmax = z;
    }
    double denom = 0.0;
    for (int j = 0; j < C; ++j) {
        p[j] = std::exp(p[j] - zmax);
        denom += p[j];
    }
    double zy = s * cos_row[y] - s * m;
    double loss = -(zy - zmax) + std::log(denom);
    for (int j = 0; j < C; ++j) p[j] /= denom;
    return loss;
}

double sqdist(const double* f, const double* a, int D) {
    double s = 0.0;
    for (int d = 0; d < D; ++d) {
        double t = f[d] - a[d];
        s += t * t;
    }
    return s;
}

} // namespace

am_softmax_result am_softmax_loss(const std::vector<double>& cos_theta, int num_classes,
                                  const std::vector<int>& labels, const loss_params& params) {
    params.validate();
    const int C = num_classes;
    const std::size_t N = labels.size();
    if (N == 0) throw validation_error("am_softmax_loss: empty batch");
    if (cos_theta.size() != N * static_cast<std::size_t>(C))
        throw validation_error("am_softmax_loss: cos_theta size does not match N x C");
    check_labels(labels, C);
    for (double v : cos_theta)
        if (!std::isfinite(v)) throw validation_error("am_softmax_loss: non-finite cosine");

    am_softmax_result out;
    out.grad_cos.assign(N * static_cast<std::size_t>(C), 0.0);
    std::vector<double> p(C);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double* row = cos_theta.data() + i * C;
        acc += am_sample(row, C, labels[i], params.scale_s, params.margin_m, p.data());
        double* g = out.grad_cos.data() + i * C;
        for (int j = 0; j < C; ++j)
            g[j] = params.scale_s * (p[j] - (j == labels[i] ? 1.0 : 0.0)) / double(N);
    }
    out.loss = acc / double(N);
    return out;
}

mse_result mse_loss(const std::vector<double>& features, const std::vector<int>& labels,
                    const centroid_frame& frame) {
    const int D = frame.dim;
    const std::size_t N = labels.size();
    if (N == 0) throw validation_error("mse_loss: empty batch");
    if (features.size() != N * static_cast<std::size_t>(D))
        throw validation_error("mse_loss: feature size does not match N x D");
    check_labels(labels, frame.num_classes);

    mse_result out;
    out.grad_f.assign(N * static_cast<std::size_t>(D), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double* f = features.data() + i * D;
        const double* a = frame.centroid(labels[i]);
        acc += sqdist(f, a, D);
        double* g = out.grad_f.data() + i * D;
        for (int d = 0; d < D; ++d) g[d] = 2.0 * (f[d] - a[d]) / double(N);
    }
    out.loss = acc / double(N);
    return out;
}

namespace {

// Per-sample phase shared by the parallel kernel and its serial reference:
// sample loss terms plus the AM gradient and the residual f - a_y, written
// into caller-provided slots.
void loss_sample_phase(const double* f, int y, const centroid_frame& frame, const loss_params& params,
                       std::size_t i, double* am_slot, double* sq_slot, double* gam_row, double* resid_row) {
    const int C = frame.num_classes, D = frame.dim;
    for (int d = 0; d < D; ++d)
        if (!std::isfinite(f[d]))
            throw validation_error("pedcc_loss: non-finite feature at row " + std::to_string(i));

    std::vector<double> cosv(C), p(C);
    for (int j = 0; j < C; ++j) {
        double s = 0.0;
        const double* a = frame.centroid(j);
        for (int d = 0; d < D; ++d) s += f[d] * a[d];
        cosv[j] = s;
    }
    *am_slot = am_sample(cosv.data(), C, y, params.scale_s, params.margin_m, p.data());

    for (int d = 0; d < D; ++d) gam_row[d] = 0.0;
    for (int j = 0; j < C; ++j) {
        double c = params.scale_s * (p[j] - (j == y ? 1.0 : 0.0));
        const double* a = frame.centroid(j);
        for (int d = 0; d < D; ++d) gam_row[d] += c * a[d];
    }

    const double* ay = frame.centroid(y);
    double s = 0.0;
    for (int d = 0; d < D; ++d) {
        resid_row[d] = f[d] - ay[d];
        s += resid_row[d] * resid_row[d];
    }
    *sq_slot = s;
}

template <class ForEach>
loss_value pedcc_loss_impl(const std::vector<double>& features, const std::vector<int>& labels,
                           const centroid_frame& frame, const loss_params& params, ForEach&& for_each) {
    params.validate();
    const int D = frame.dim;
    const std::size_t N = labels.size();
    if (N == 0) throw validation_error("pedcc_loss: empty batch");
    if (features.size() != N * static_cast<std::size_t>(D))
        throw validation_error("pedcc_loss: feature size does not match N x D");
    check_labels(labels, frame.num_classes);

    std::vector<double> am(N), sq(N), gam(N * static_cast<std::size_t>(D)), resid(N * static_cast<std::size_t>(D));
    for_each(N, [&](std::size_t i) {
        loss_sample_phase(features.data() + i * D, labels[i], frame, params, i, &am[i], &sq[i],
                          gam.data() + i * D, resid.data() + i * D);
    });

    loss_value out;
    double am_acc = 0.0, sq_acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        am_acc += am[i];
        sq_acc += sq[i];
    }
    out.am_term = am_acc / double(N);
    out.mse_term = sq_acc / double(N);
    out.total = out.am_term + params.mse_weight_n * std::sqrt(out.mse_term);

    const double mse_coef = params.mse_weight_n / (double(N) * std::sqrt(out.mse_term + 1e-12));
    out.grad_f.resize(N * static_cast<std::size_t>(D));
    for_each(N, [&](std::size_t i) {
        double* g = out.grad_f.data() + i * D;
        const double* gr = gam.data() + i * D;
        const double* rr = resid.data() + i * D;
        for (int d = 0; d < D; ++d) g[d] = gr[d] / double(N) + mse_coef * rr[d];
    });
    return out;
}

} // namespace

loss_value pedcc_loss(const std::vector<double>& features, const std::vector<int>& labels,
                      const centroid_frame& frame, const loss_params& params) {
    return pedcc_loss_impl(features, labels, frame, params,
                           [](std::size_t n, auto&& body) { parallel_for(n, body); });
}

loss_value pedcc_loss_serial(const std::vector<double>& features, const std::vector<int>& labels,
                             const centroid_frame& frame, const loss_params& params) {
    return pedcc_loss_impl(features, labels, frame, params, [](std::size_t n, auto&& body) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    });
}

} // namespace pedcc
