#include "pedcc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pedcc/errors.hpp"
#include "pedcc/parallel.hpp"

namespace pedcc {

namespace {

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double clamp_cos(double v) { return std::min(1.0, std::max(-1.0, v)); }

} // namespace

score_record decompose(const double* f, int dim, const centroid_frame& frame, double omega) {
    if (dim != frame.dim)
        throw validation_error("decompose: embedding dim " + std::to_string(dim) + " does not match frame dim " +
                               std::to_string(frame.dim));
    if (!(omega >= 0.0)) throw validation_error("decompose: omega must be a nonnegative finite scalar");

    const int C = frame.num_classes, D = frame.dim, r = frame.rank();
    const double norm_f = std::sqrt(dot(f, f, D));
    if (!(norm_f > 0.0) || !std::isfinite(norm_f))
        throw validation_error("decompose: embedding must have positive finite norm");

    score_record rec;
    rec.cos_theta.resize(C);
    rec.cos_beta.resize(C);
    for (int i = 0; i < C; ++i) rec.cos_theta[i] = clamp_cos(dot(f, frame.centroid(i), D) / norm_f);

    // Projection onto the span basis: coefficients first, then ||f_p||.
    std::vector<double> coef(r);
    double p2 = 0.0;
    for (int b = 0; b < r; ++b) {
        coef[b] = dot(f, frame.basis_vec(b), D);
        p2 += coef[b] * coef[b];
    }
    const double norm_p = std::sqrt(p2);
    rec.cos_alpha = std::min(1.0, std::max(0.0, norm_p / norm_f));

    if (norm_p >= 1e-12 * norm_f) {
        std::vector<double> fp(D, 0.0);
        for (int b = 0; b < r; ++b) {
            const double* bb = frame.basis_vec(b);
            for (int d = 0; d < D; ++d) fp[d] += coef[b] * bb[d];
        }
        for (int i = 0; i < C; ++i) rec.cos_beta[i] = clamp_cos(dot(fp.data(), frame.centroid(i), D) / norm_p);
    } else {
        // Degenerate projection: report cos_beta = 0 so the scores stay
        // defined and continuous with nearby inputs.
        std::fill(rec.cos_beta.begin(), rec.cos_beta.end(), 0.0);
    }

    rec.s_alpha = rec.cos_alpha;
    rec.s_beta = *std::max_element(rec.cos_beta.begin(), rec.cos_beta.end());
    rec.s_pedcc = *std::max_element(rec.cos_theta.begin(), rec.cos_theta.end());
    rec.s_d_pedcc = rec.s_alpha + omega * rec.s_beta;
    return rec;
}

score_record decompose(const std::vector<double>& f, const centroid_frame& frame, double omega) {
    return decompose(f.data(), static_cast<int>(f.size()), frame, omega);
}

namespace {

score_record decompose_row(const embedding_set& set, std::size_t k, const centroid_frame& frame, double omega) {
    try {
        return decompose(set.row(k), set.dim, frame, omega);
    } catch (const validation_error& e) {
        throw validation_error("sample " + std::to_string(k) + ": " + e.what());
    }
}

} // namespace

std::vector<score_record> score_batch(const embedding_set& embeddings, const centroid_frame& frame, double omega) {
    embeddings.check_consistent();
    std::vector<score_record> out(embeddings.size());
    parallel_for(embeddings.size(), [&](std::size_t k) { out[k] = decompose_row(embeddings, k, frame, omega); });
    return out;
}

std::vector<score_record> score_batch_serial(const embedding_set& embeddings, const centroid_frame& frame,
                                             double omega) {
    embeddings.check_consistent();
    std::vector<score_record> out(embeddings.size());
    for (std::size_t k = 0; k < embeddings.size(); ++k) out[k] = decompose_row(embeddings, k, frame, omega);
    return out;
}

} // namespace pedcc
