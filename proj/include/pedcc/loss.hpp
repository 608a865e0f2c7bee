#pragma once

#include <vector>

#include "pedcc/frame.hpp"

namespace pedcc {

// Parameters of the combined loss: scale s and additive margin m of the
// AM-Softmax term, and the weight n (n >= 1) on the square root of the MSE
// term. The conventional roles are s ~ 7.5, m ~ 0.35, but both orderings of
// the published pair are assignable through config.
struct loss_params {
    double scale_s = 7.5;
    double margin_m = 0.35;
    double mse_weight_n = 1.0;

    void validate() const;
};

struct am_softmax_result {
    double loss = 0.0;
    std::vector<double> grad_cos; // N x C, gradient of the batch-mean loss
};

struct mse_result {
    double loss = 0.0;
    std::vector<double> grad_f; // N x D
};

// Combined loss value: total = am_term + n * sqrt(mse_term), with the
// gradient of the total w.r.t. each feature vector.
struct loss_value {
    double am_term = 0.0;
    double mse_term = 0.0;
    double total = 0.0;
    std::vector<double> grad_f; // N x D
};

// Batch-mean additive-margin softmax loss over rows of cos_theta (N x C),
// log-sum-exp stabilized. Rejects out-of-range labels and non-finite inputs.
am_softmax_result am_softmax_loss(const std::vector<double>& cos_theta, int num_classes,
                                  const std::vector<int>& labels, const loss_params& params);

// Batch-mean squared distance between each feature and its labeled centroid;
// gradient 2(f_i - a_y)/N.
mse_result mse_loss(const std::vector<double>& features, const std::vector<int>& labels,
                    const centroid_frame& frame);

// Combined loss on unit-normalized features: cos_theta_i = f . a_i, total =
// am + n*sqrt(mse). The sqrt gradient uses sqrt(mse + 1e-12) so a perfectly
// fitted batch keeps a finite gradient. OpenMP-parallel over samples with
// ordered reductions, so results do not depend on thread count.
loss_value pedcc_loss(const std::vector<double>& features, const std::vector<int>& labels,
                      const centroid_frame& frame, const loss_params& params);

// Plain loop reference for the parallel kernel; bitwise-identical results.
loss_value pedcc_loss_serial(const std::vector<double>& features, const std::vector<int>& labels,
                             const centroid_frame& frame, const loss_params& params);

} // namespace pedcc
