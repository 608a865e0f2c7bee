#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pedcc {

// C unit vectors in R^D with all pairwise cosines -1/(C-1) (a regular
// simplex frame), plus an orthonormal basis of their span (rank C-1).
struct centroid_frame {
    int dim = 0;
    int num_classes = 0;
    std::vector<double> centroids;  // C x D row-major
    std::vector<double> span_basis; // r x D row-major

    int rank() const { return dim > 0 ? static_cast<int>(span_basis.size()) / dim : 0; }
    const double* centroid(int i) const { return centroids.data() + static_cast<std::size_t>(i) * dim; }
    const double* basis_vec(int r) const { return span_basis.data() + static_cast<std::size_t>(r) * dim; }
};

// Closed-form regular simplex in the first C-1 coordinates, zero-padded to
// D dims, then rotated by a seed-determined orthogonal map of R^D.
// Requires 2 <= C <= D+1.
centroid_frame generate_frame(int num_classes, int dim, std::uint64_t seed);

// Orthonormal basis of the row span of a C x D centroid set: modified
// Gram-Schmidt with a 1e-10 drop tolerance on residual norms.
std::vector<double> span_basis_of(const std::vector<double>& centroids, int num_classes, int dim);

// One entry per violated frame invariant, with the measured residual.
// Empty list means the frame is well formed. Never throws.
std::vector<std::string> validate_frame(const centroid_frame& frame);

} // namespace pedcc
