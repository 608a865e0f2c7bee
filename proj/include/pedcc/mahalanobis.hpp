#pragma once

#include <vector>

#include "pedcc/types.hpp"

namespace pedcc {

// Per-class means plus the inverse of the tied within-class covariance
// (ridge-regularized), for the confidence score
// max_i -(f - mu_i)^T Sigma^-1 (f - mu_i).
struct mahalanobis_model {
    int dim = 0;
    int num_classes = 0;
    std::vector<double> means;     // C x D row-major
    std::vector<double> precision; // D x D row-major, symmetric PSD

    const double* mean(int i) const { return means.data() + static_cast<std::size_t>(i) * dim; }
};

// Fits on the labeled rows (label >= 0) of a training set: class count is
// max label + 1, every class must be present, and at least D+1 labeled
// rows are required. Covariance is tied across classes and regularized
// with ridge 1e-6 * trace/D on the diagonal, so it is always invertible.
mahalanobis_model mahalanobis_fit(const embedding_set& train);

double mahalanobis_score(const mahalanobis_model& model, const double* f, int dim);

// One score per row, order preserved. OpenMP-parallel.
std::vector<double> mahalanobis_score_batch(const mahalanobis_model& model, const embedding_set& embeddings);

// Plain loop reference for the parallel kernel; bitwise-identical results.
std::vector<double> mahalanobis_score_batch_serial(const mahalanobis_model& model,
                                                   const embedding_set& embeddings);

} // namespace pedcc
