#include "pedcc/mahalanobis.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pedcc/errors.hpp"
#include "pedcc/parallel.hpp"

namespace pedcc {

mahalanobis_model mahalanobis_fit(const embedding_set& train) {
    train.check_consistent();
    const int D = train.dim;

    int C = 0;
    std::size_t labeled = 0;
    for (int lab : train.labels) {
        if (lab < 0) continue;
        ++labeled;
        C = std::max(C, lab + 1);
    }
    if (C < 1) throw validation_error("mahalanobis_fit: no labeled rows");
    if (labeled < static_cast<std::size_t>(D) + 1)
        throw validation_error("mahalanobis_fit: need at least D+1 labeled rows, got " + std::to_string(labeled));

    std::vector<std::size_t> counts(C, 0);
    mahalanobis_model model;
    model.dim = D;
    model.num_classes = C;
    model.means.assign(static_cast<std::size_t>(C) * D, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int lab = train.labels[i];
        if (lab < 0) continue;
        ++counts[lab];
        const double* x = train.row(i);
        double* mu = model.means.data() + static_cast<std::size_t>(lab) * D;
        for (int d = 0; d < D; ++d) mu[d] += x[d];
    }
    for (int c = 0; c < C; ++c) {
        if (counts[c] == 0)
            throw validation_error("mahalanobis_fit: class " + std::to_string(c) + " has no samples");
        double* mu = model.means.data() + static_cast<std::size_t>(c) * D;
        for (int d = 0; d < D; ++d) mu[d] /= double(counts[c]);
    }

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(D, D);
    Eigen::VectorXd r(D);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int lab = train.labels[i];
        if (lab < 0) continue;
        const double* x = train.row(i);
        const double* mu = model.means.data() + static_cast<std::size_t>(lab) * D;
        for (int d = 0; d < D; ++d) r(d) = x[d] - mu[d];
        sigma.noalias() += r * r.transpose();
    }
    sigma /= double(labeled);

    double ridge = 1e-6 * sigma.trace() / double(D);
    if (!(ridge > 0.0)) ridge = 1e-12;
    sigma.diagonal().array() += ridge;

    Eigen::MatrixXd prec = sigma.ldlt().solve(Eigen::MatrixXd::Identity(D, D));
    prec = 0.5 * (prec + prec.transpose()).eval();

    model.precision.resize(static_cast<std::size_t>(D) * D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) model.precision[static_cast<std::size_t>(a) * D + b] = prec(a, b);
    return model;
}

double mahalanobis_score(const mahalanobis_model& model, const double* f, int dim) {
    const int D = model.dim;
    if (dim != D)
        throw validation_error("mahalanobis_score: embedding dim " + std::to_string(dim) +
                               " does not match model dim " + std::to_string(D));
    for (int d = 0; d < D; ++d)
        if (!std::isfinite(f[d])) throw validation_error("mahalanobis_score: non-finite embedding");

    double best = -1e300;
    std::vector<double> r(D);
    for (int c = 0; c < model.num_classes; ++c) {
        const double* mu = model.mean(c);
        for (int d = 0; d < D; ++d) r[d] = f[d] - mu[d];
        double q = 0.0;
        for (int a = 0; a < D; ++a) {
            const double* row = model.precision.data() + static_cast<std::size_t>(a) * D;
            double s = 0.0;
            for (int b = 0; b < D; ++b) s += row[b] * r[b];
            q += r[a] * s;
        }
        best = std::max(best, -q);
    }
    return best;
}

namespace {

template <class ForEach>
std::vector<double> score_batch_impl(const mahalanobis_model& model, const embedding_set& embeddings,
                                     ForEach&& for_each) {
    embeddings.check_consistent();
    std::vector<double> out(embeddings.size());
    for_each(embeddings.size(), [&](std::size_t i) {
        try {
            out[i] = mahalanobis_score(model, embeddings.row(i), embeddings.dim);
        } catch (const validation_error& e) {
            throw validation_error("sample " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

} // namespace

std::vector<double> mahalanobis_score_batch(const mahalanobis_model& model, const embedding_set& embeddings) {
    return score_batch_impl(model, embeddings, [](std::size_t n, auto&& body) { parallel_for(n, body); });
}

std::vector<double> mahalanobis_score_batch_serial(const mahalanobis_model& model,
                                                   const embedding_set& embeddings) {
    return score_batch_impl(model, embeddings, [](std::size_t n, auto&& body) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    });
}

} // namespace pedcc
