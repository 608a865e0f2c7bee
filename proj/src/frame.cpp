#include "pedcc/frame.hpp"

#include <cmath>
#include <cstdio>

#include "pedcc/errors.hpp"
#include "pedcc/rng.hpp"

namespace pedcc {

namespace {

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// C vertices of a regular (C-1)-simplex on the unit sphere, centered at the
// origin: columns of the Helmert basis scaled to unit norm. Row i holds the
// C-1 coordinates of vertex i; pairwise dot products are exactly -1/(C-1)
// up to rounding.
std::vector<double> simplex_vertices(int C) {
    std::vector<double> x(static_cast<std::size_t>(C) * (C - 1), 0.0);
    const double scale = std::sqrt(double(C) / double(C - 1));
    for (int k = 1; k < C; ++k) {
        const double d = 1.0 / std::sqrt(double(k) * (k + 1));
        for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i) * (C - 1) + (k - 1)] = scale * d;
        x[static_cast<std::size_t>(k) * (C - 1) + (k - 1)] = -scale * double(k) * d;
    }
    return x;
}

// Orthonormalizes the leading r columns of the D x r matrix held column-major
// in q, by modified Gram-Schmidt with one reorthogonalization pass. Returns
// false if a column turns out (numerically) dependent.
bool mgs_columns(std::vector<double>& q, int D, int r) {
    for (int k = 0; k < r; ++k) {
        double* vk = q.data() + static_cast<std::size_t>(k) * D;
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < k; ++j) {
                const double* vj = q.data() + static_cast<std::size_t>(j) * D;
                double c = dot(vk, vj, D);
                for (int i = 0; i < D; ++i) vk[i] -= c * vj[i];
            }
        }
        double nrm = std::sqrt(dot(vk, vk, D));
        if (nrm < 1e-12) return false;
        for (int i = 0; i < D; ++i) vk[i] /= nrm;
    }
    return true;
}

} // namespace

centroid_frame generate_frame(int num_classes, int dim, std::uint64_t seed) {
    const int C = num_classes, D = dim;
    if (C < 2) throw validation_error("generate_frame: need at least 2 classes");
    if (D < 1) throw validation_error("generate_frame: dim must be positive");
    if (C > D + 1)
        throw validation_error("generate_frame: C > D+1; equal pairwise angles are impossible beyond the simplex bound");

    const int r = C - 1;
    std::vector<double> x = simplex_vertices(C);

    // Seed-determined orthogonal map of R^D, applied to the zero-padded
    // simplex. Only its action on the first C-1 coordinates matters, so we
    // orthonormalize a Gaussian D x (C-1) block instead of a full D x D one.
    rng gen(mix_seed(seed, 0x66726d65));
    std::vector<double> q(static_cast<std::size_t>(D) * r);
    for (;;) {
        for (double& v : q) v = gen.normal();
        if (mgs_columns(q, D, r)) break;
    }

    centroid_frame f;
    f.dim = D;
    f.num_classes = C;
    f.centroids.assign(static_cast<std::size_t>(C) * D, 0.0);
    for (int i = 0; i < C; ++i) {
        double* ci = f.centroids.data() + static_cast<std::size_t>(i) * D;
        for (int k = 0; k < r; ++k) {
            const double xk = x[static_cast<std::size_t>(i) * r + k];
            const double* qk = q.data() + static_cast<std::size_t>(k) * D;
            for (int d = 0; d < D; ++d) ci[d] += xk * qk[d];
        }
    }

    f.span_basis = span_basis_of(f.centroids, C, D);
    return f;
}

std::vector<double> span_basis_of(const std::vector<double>& centroids, int num_classes, int dim) {
    const int C = num_classes, D = dim;
    if (C < 1 || D < 1 || centroids.size() != static_cast<std::size_t>(C) * D)
        throw validation_error("span_basis_of: centroid storage does not match C x D");
    // Modified Gram-Schmidt over the centroids with a 1e-10 drop tolerance
    // on residual norms; rank is C-1 for a valid frame (centroids sum to
    // zero).
    std::vector<double> basis;
    std::vector<double> work(D);
    for (int i = 0; i < C; ++i) {
        for (int d = 0; d < D; ++d) work[d] = centroids[static_cast<std::size_t>(i) * D + d];
        const int nb = static_cast<int>(basis.size()) / D;
        for (int pass = 0; pass < 2; ++pass) {
            for (int b = 0; b < nb; ++b) {
                const double* bb = basis.data() + static_cast<std::size_t>(b) * D;
                double c = dot(work.data(), bb, D);
                for (int d = 0; d < D; ++d) work[d] -= c * bb[d];
            }
        }
        double nrm = std::sqrt(dot(work.data(), work.data(), D));
        if (nrm <= 1e-10) continue;
        for (int d = 0; d < D; ++d) work[d] /= nrm;
        basis.insert(basis.end(), work.begin(), work.end());
    }
    return basis;
}

std::vector<std::string> validate_frame(const centroid_frame& f) {
    std::vector<std::string> out;
    auto add = [&out](const char* what, double residual) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s (residual %.3e)", what, residual);
        out.emplace_back(buf);
    };

    const int C = f.num_classes, D = f.dim;
    if (C < 2 || D < 1) {
        out.emplace_back("frame dimensions invalid (need C >= 2, D >= 1)");
        return out;
    }
    if (C > D + 1) out.emplace_back("C exceeds D+1 (simplex bound)");
    if (f.centroids.size() != static_cast<std::size_t>(C) * D) {
        out.emplace_back("centroid storage does not match C x D");
        return out;
    }
    if (f.span_basis.size() % D != 0) {
        out.emplace_back("span basis storage is not a multiple of D");
        return out;
    }

    double worst = 0.0;
    for (int i = 0; i < C; ++i)
        worst = std::max(worst, std::fabs(std::sqrt(dot(f.centroid(i), f.centroid(i), D)) - 1.0));
    if (worst > 1e-9) add("centroid norm differs from 1", worst);

    const double target = -1.0 / double(C - 1);
    worst = 0.0;
    for (int i = 0; i < C; ++i)
        for (int j = i + 1; j < C; ++j)
            worst = std::max(worst, std::fabs(dot(f.centroid(i), f.centroid(j), D) - target));
    if (worst > 1e-9) add("pairwise cosine differs from -1/(C-1)", worst);

    std::vector<double> sum(D, 0.0);
    for (int i = 0; i < C; ++i)
        for (int d = 0; d < D; ++d) sum[d] += f.centroid(i)[d];
    double sum_norm = std::sqrt(dot(sum.data(), sum.data(), D));
    if (sum_norm > 1e-9) add("centroid sum is not zero", sum_norm);

    const int r = f.rank();
    worst = 0.0;
    for (int a = 0; a < r; ++a)
        for (int b = a; b < r; ++b) {
            double expect = (a == b) ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(dot(f.basis_vec(a), f.basis_vec(b), D) - expect));
        }
    if (worst > 1e-9) add("span basis is not orthonormal", worst);

    worst = 0.0;
    std::vector<double> res(D);
    for (int i = 0; i < C; ++i) {
        for (int d = 0; d < D; ++d) res[d] = f.centroid(i)[d];
        for (int b = 0; b < r; ++b) {
            double c = dot(f.centroid(i), f.basis_vec(b), D);
            for (int d = 0; d < D; ++d) res[d] -= c * f.basis_vec(b)[d];
        }
        worst = std::max(worst, std::sqrt(dot(res.data(), res.data(), D)));
    }
    if (worst > 1e-9) add("centroid not reconstructed by span basis", worst);

    return out;
}

} // namespace pedcc
