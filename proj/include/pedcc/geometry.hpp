#pragma once

#include <vector>

#include "pedcc/frame.hpp"
#include "pedcc/types.hpp"

namespace pedcc {

// Geometric decomposition of the cosine confidence of one embedding f:
// cos_theta_i between f and centroid a_i, split into cos_alpha (f against
// its projection onto the centroid span) and cos_beta_i (projection against
// a_i), so that cos_theta_i = cos_alpha * cos_beta_i.
struct score_record {
    double cos_alpha = 0.0;
    std::vector<double> cos_beta;
    std::vector<double> cos_theta;
    double s_alpha = 0.0;  // = cos_alpha
    double s_beta = 0.0;   // = max_i cos_beta_i
    double s_pedcc = 0.0;  // = max_i cos_theta_i
    double s_d_pedcc = 0.0; // = s_alpha + omega * s_beta
};

// Rejects zero-norm f, dimension mismatch, and negative or non-finite omega.
// When the projection of f onto the span is numerically zero (below
// 1e-12 * ||f||), all cos_beta_i are reported as 0.
score_record decompose(const double* f, int dim, const centroid_frame& frame, double omega);
score_record decompose(const std::vector<double>& f, const centroid_frame& frame, double omega);

// Element k equals decompose(embeddings row k); order preserved. Per-sample
// failures are reported with the offending row index. OpenMP-parallel.
std::vector<score_record> score_batch(const embedding_set& embeddings, const centroid_frame& frame, double omega);

// Plain loop reference for the parallel kernel; bitwise-identical results.
std::vector<score_record> score_batch_serial(const embedding_set& embeddings, const centroid_frame& frame,
                                             double omega);

} // namespace pedcc
