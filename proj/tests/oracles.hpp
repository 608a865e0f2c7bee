#pragma once

#include <functional>
#include <vector>

// Slow reference implementations used to cross-check the library. They share
// no code with the library paths they validate.
namespace oracle {

// O(n*m) pairwise probability that an ID score beats an OOD score, ties
// counted half.
double brute_auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

struct brute_tnr_result {
    double tnr = 0.0;
    double threshold = 0.0;
};

// Tries every ID value as the threshold and keeps the largest one whose
// TPR still reaches the target.
brute_tnr_result brute_tnr(const std::vector<double>& id_scores, const std::vector<double>& ood_scores,
                           double tpr_target);

// Least-squares projection of f onto the span of the centroids, computed
// through the normal equations of the first C-1 centroids (the last one is
// linearly dependent because the frame sums to zero).
std::vector<double> project_span(const std::vector<double>& f, const std::vector<double>& centroids,
                                 int num_classes, int dim);

// Componentwise central finite difference of a scalar function at x.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                std::vector<double> x, double step);

} // namespace oracle
