#pragma once

#include <cstdint>
#include <string>

#include "pedcc/types.hpp"

namespace pedcc {

enum class ood_kind { uniform_box, ring, shifted_blobs };

ood_kind parse_ood_kind(const std::string& name);
std::string ood_kind_name(ood_kind kind);

struct synthetic_data {
    embedding_set train;
    embedding_set id_test;
    embedding_set ood;
};

// ID data: C Gaussian blobs with unit covariance, class means along
// seed-determined directions scaled so the closest pair of means is 6 sigma
// apart. id_test is a fresh draw from the same blobs. The OOD set (C *
// per_class unlabeled samples) depends on the kind: uniform over a box
// enclosing the blob region with a 16 sigma margin, a noisy ring at 3x the
// blob-region radius, or the same blobs translated by 8 sigma. Streams for
// means / train / id_test / ood are derived independently from the seed, so
// two kinds generated from one seed share their ID data.
synthetic_data make_synthetic(int num_classes, int input_dim, long per_class, ood_kind kind,
                              std::uint64_t seed);

} // namespace pedcc
