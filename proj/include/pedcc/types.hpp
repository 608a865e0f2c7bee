#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pedcc/errors.hpp"

namespace pedcc {

enum class data_role { train, id_test, ood };

inline std::string role_name(data_role r) {
    switch (r) {
        case data_role::train: return "train";
        case data_role::id_test: return "id-test";
        default: return "ood";
    }
}

// Labeled or unlabeled collection of dim-vectors, stored row-major.
// label -1 marks unlabeled rows (OOD data).
struct embedding_set {
    int dim = 0;
    std::vector<double> data;
    std::vector<int> labels;
    data_role role = data_role::train;

    std::size_t size() const { return labels.size(); }

    const double* row(std::size_t i) const { return data.data() + i * static_cast<std::size_t>(dim); }
    double* row(std::size_t i) { return data.data() + i * static_cast<std::size_t>(dim); }

    void push_row(const double* v, int label) {
        data.insert(data.end(), v, v + dim);
        labels.push_back(label);
    }

    void check_consistent() const {
        if (dim <= 0) throw validation_error("embedding set: dim must be positive");
        if (data.size() != size() * static_cast<std::size_t>(dim))
            throw validation_error("embedding set: data size does not match dim * rows");
    }
};

} // namespace pedcc
