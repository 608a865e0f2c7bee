#pragma once

#include <cstdint>
#include <vector>

#include "pedcc/frame.hpp"
#include "pedcc/loss.hpp"
#include "pedcc/types.hpp"

namespace pedcc {

enum class activation_kind { relu, tanh };

struct network_spec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int feature_dim = 0;
    activation_kind activation = activation_kind::relu;
    std::uint64_t seed = 0;

    void validate() const;
};

// Fully connected net: affine layers with the chosen activation between
// them, no activation on the last layer, output L2-normalized into the
// embedding. Weights row-major (out x in).
struct mlp {
    network_spec spec;
    struct layer {
        int out = 0, in = 0;
        std::vector<double> W;
        std::vector<double> b;
    };
    std::vector<layer> layers;
};

// Per-layer uniform init U(-1/sqrt(fan_in), +1/sqrt(fan_in)) from the spec
// seed; biases zero.
mlp init_mlp(const network_spec& spec);

struct train_config {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    loss_params loss;

    void validate() const;
};

// SGD with momentum on the combined loss against the fixed centroids.
// Shuffling is seed-determined per epoch; the last batch of an epoch is
// truncated, not padded. Returns the per-epoch mean loss history. A
// non-finite loss aborts with the offending epoch and batch.
std::vector<double> train(mlp& model, const centroid_frame& frame, const embedding_set& data,
                          const train_config& cfg);

// Runs the net over every row and L2-normalizes the outputs; labels and
// role carried through. Rows with a numerically zero feature vector are
// rejected with their indices. OpenMP-parallel.
embedding_set embed(const mlp& model, const embedding_set& data);

// Plain loop reference for the parallel kernel; bitwise-identical results.
embedding_set embed_serial(const mlp& model, const embedding_set& data);

} // namespace pedcc
