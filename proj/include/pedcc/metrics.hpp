#pragma once

#include <string>
#include <vector>

#include "pedcc/geometry.hpp"

namespace pedcc {

// Probability that an ID score exceeds an OOD score, ties counted half;
// computed with midranks, exactly equal to the brute-force pairwise count.
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

struct tnr_result {
    double tnr = 0.0;
    double threshold = 0.0;
};

// Threshold t = the largest ID score value keeping at least tpr_target of
// the ID set at or above t; tnr = fraction of OOD scores strictly below t.
tnr_result tnr_at_tpr(const std::vector<double>& id_scores, const std::vector<double>& ood_scores,
                      double tpr_target = 0.95);

// {0} followed by 25 log-spaced points in [1e-3, 1e3], endpoints exact.
std::vector<double> default_omega_grid();

struct tune_result {
    double omega = 0.0;
    double tnr = 0.0;
    double threshold = 0.0;
};

// Grid omega maximizing TNR@TPR95 of s_alpha + omega*s_beta on the
// validation pair; ties broken toward smaller omega. The grid must contain
// 0 and at least one value >= 1e3 so both pure scores are realized.
tune_result tune_omega(const std::vector<score_record>& id_val, const std::vector<score_record>& ood_val,
                       const std::vector<double>& grid);

// Per-row max of softmax(v / temperature) over rows of a flat N x C batch.
std::vector<double> baseline_max_softmax(const std::vector<double>& vecs, int num_classes,
                                         double temperature = 1.0);

struct variance_pair {
    double var_s_alpha = 0.0;
    double var_s_beta = 0.0;
};

// Unbiased sample variances of the two score streams; needs >= 2 records.
variance_pair variance_report(const std::vector<score_record>& records);

struct report_row {
    std::string method;
    double auroc = 0.0;
    double tnr_at_tpr95 = 0.0;
    double threshold = 0.0;
    bool has_omega = false;
    double omega = 0.0;
    long long n_id = 0;
    long long n_ood = 0;
};

// Rows for s_alpha, s_beta, s_alpha*s_beta, s_alpha+s_beta, s_pedcc, and
// s_d_pedcc at the given omega, each with AUROC and TNR@TPR95.
std::vector<report_row> ablation_grid(const std::vector<score_record>& id, const std::vector<score_record>& ood,
                                      double omega);

} // namespace pedcc
