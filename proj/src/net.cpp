#include "pedcc/net.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pedcc/errors.hpp"
#include "pedcc/parallel.hpp"
#include "pedcc/rng.hpp"

namespace pedcc {

void network_spec::validate() const {
    if (input_dim < 1) throw validation_error("network spec: input_dim must be >= 1");
    if (feature_dim < 1) throw validation_error("network spec: feature_dim must be >= 1");
    for (int h : hidden_dims)
        if (h < 1) throw validation_error("network spec: hidden dims must be >= 1");
}

void train_config::validate() const {
    if (epochs < 0) throw validation_error("train config: epochs must be >= 0");
    if (batch_size < 1) throw validation_error("train config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw validation_error("train config: learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw validation_error("train config: momentum must be in [0, 1)");
    loss.validate();
}

mlp init_mlp(const network_spec& spec) {
    spec.validate();
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden_dims) dims.push_back(h);
    dims.push_back(spec.feature_dim);

    mlp m;
    m.spec = spec;
    rng gen(mix_seed(spec.seed, 0x6e6574));
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        mlp::layer L;
        L.in = dims[k];
        L.out = dims[k + 1];
        L.W.resize(static_cast<std::size_t>(L.out) * L.in);
        const double bound = 1.0 / std::sqrt(double(L.in));
        for (double& w : L.W) w = gen.uniform(-bound, bound);
        L.b.assign(L.out, 0.0);
        m.layers.push_back(std::move(L));
    }
    return m;
}

namespace {

double act_fwd(double h, activation_kind a) {
    return a == activation_kind::relu ? (h > 0.0 ? h : 0.0) : std::tanh(h);
}

// derivative expressed through the activation output
double act_bwd(double out, double pre, activation_kind a) {
    return a == activation_kind::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

// Full forward state of one sample: the input and every post-activation
// vector in acts, the pre-activation vectors in pres, the unnormalized
// feature in pres.back().
struct forward_state {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pres;
};

void forward_sample(const mlp& m, const double* x, forward_state& st) {
    const std::size_t K = m.layers.size();
    st.acts.assign(K, {});
    st.pres.assign(K, {});
    std::vector<double> cur(x, x + m.spec.input_dim);
    for (std::size_t k = 0; k < K; ++k) {
        const mlp::layer& L = m.layers[k];
        st.acts[k] = cur;
        std::vector<double> h(L.out);
        for (int o = 0; o < L.out; ++o) {
            double s = L.b[o];
            const double* w = L.W.data() + static_cast<std::size_t>(o) * L.in;
            for (int i = 0; i < L.in; ++i) s += w[i] * cur[i];
            h[o] = s;
        }
        st.pres[k] = h;
        if (k + 1 < K) {
            cur.resize(L.out);
            for (int o = 0; o < L.out; ++o) cur[o] = act_fwd(h[o], m.spec.activation);
        }
    }
}

// feature of one sample without keeping intermediate state
void feature_sample(const mlp& m, const double* x, double* u) {
    const std::size_t K = m.layers.size();
    std::vector<double> cur(x, x + m.spec.input_dim), next;
    for (std::size_t k = 0; k < K; ++k) {
        const mlp::layer& L = m.layers[k];
        next.resize(L.out);
        for (int o = 0; o < L.out; ++o) {
            double s = L.b[o];
            const double* w = L.W.data() + static_cast<std::size_t>(o) * L.in;
            for (int i = 0; i < L.in; ++i) s += w[i] * cur[i];
            next[o] = (k + 1 < K) ? act_fwd(s, m.spec.activation) : s;
        }
        cur.swap(next);
    }
    for (int d = 0; d < m.spec.feature_dim; ++d) u[d] = cur[d];
}

void check_model_data(const mlp& m, const embedding_set& data) {
    data.check_consistent();
    if (m.layers.empty()) throw validation_error("model has no layers");
    if (data.dim != m.spec.input_dim)
        throw validation_error("data dim " + std::to_string(data.dim) + " does not match network input dim " +
                               std::to_string(m.spec.input_dim));
}

template <class ForEach>
embedding_set embed_impl(const mlp& model, const embedding_set& data, ForEach&& for_each) {
    check_model_data(model, data);
    const int D = model.spec.feature_dim;
    const std::size_t n = data.size();

    embedding_set out;
    out.dim = D;
    out.role = data.role;
    out.labels = data.labels;
    out.data.assign(n * static_cast<std::size_t>(D), 0.0);
    std::vector<unsigned char> bad(n, 0);

    for_each(n, [&](std::size_t i) {
        double* u = out.data.data() + i * D;
        feature_sample(model, data.row(i), u);
        double s = 0.0;
        for (int d = 0; d < D; ++d) s += u[d] * u[d];
        double r = std::sqrt(s);
        if (!(r > 1e-12) || !std::isfinite(r)) {
            bad[i] = 1;
            return;
        }
        for (int d = 0; d < D; ++d) u[d] /= r;
    });

    std::string bad_list;
    std::size_t bad_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!bad[i]) continue;
        ++bad_count;
        if (bad_count <= 8) {
            if (!bad_list.empty()) bad_list += ", ";
            bad_list += std::to_string(i);
        }
    }
    if (bad_count > 0)
        throw numeric_error("embed: zero or non-finite feature vector at rows " + bad_list +
                            (bad_count > 8 ? ", ..." : "") + " (" + std::to_string(bad_count) + " total)");
    return out;
}

} // namespace

embedding_set embed(const mlp& model, const embedding_set& data) {
    return embed_impl(model, data, [](std::size_t n, auto&& body) { parallel_for(n, body); });
}

embedding_set embed_serial(const mlp& model, const embedding_set& data) {
    return embed_impl(model, data, [](std::size_t n, auto&& body) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    });
}

std::vector<double> train(mlp& model, const centroid_frame& frame, const embedding_set& data,
                          const train_config& cfg) {
    cfg.validate();
    check_model_data(model, data);
    if (model.spec.feature_dim != frame.dim)
        throw validation_error("network feature dim " + std::to_string(model.spec.feature_dim) +
                               " does not match frame dim " + std::to_string(frame.dim));
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] < 0 || data.labels[i] >= frame.num_classes)
            throw validation_error("train: row " + std::to_string(i) + " has label outside [0, C)");

    const std::size_t n = data.size();
    const int D = frame.dim;
    const std::size_t K = model.layers.size();

    std::vector<std::vector<double>> vel_w(K), vel_b(K);
    for (std::size_t k = 0; k < K; ++k) {
        vel_w[k].assign(model.layers[k].W.size(), 0.0);
        vel_b[k].assign(model.layers[k].b.size(), 0.0);
    }

    std::vector<double> history;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<forward_state> states;
    std::vector<std::vector<double>> grad_w(K), grad_b(K);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng shuf(mix_seed(cfg.seed, 0x73687566 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuf.index(i)]);

        double epoch_loss = 0.0;
        std::size_t epoch_count = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bn = std::min<std::size_t>(cfg.batch_size, n - start);
            const std::size_t batch_idx = start / cfg.batch_size;

            states.resize(bn);
            std::vector<double> feats(bn * static_cast<std::size_t>(D));
            std::vector<double> norms(bn);
            std::vector<int> labels(bn);
            for (std::size_t b = 0; b < bn; ++b) {
                const std::size_t src = order[start + b];
                forward_sample(model, data.row(src), states[b]);
                const std::vector<double>& u = states[b].pres.back();
                double s = 0.0;
                for (int d = 0; d < D; ++d) s += u[d] * u[d];
                norms[b] = std::sqrt(s);
                if (!(norms[b] > 1e-300) || !std::isfinite(norms[b]))
                    throw numeric_error("train: degenerate feature norm at epoch " + std::to_string(epoch) +
                                        ", batch " + std::to_string(batch_idx));
                for (int d = 0; d < D; ++d) feats[b * D + d] = u[d] / norms[b];
                labels[b] = data.labels[src];
            }

            loss_value lv = pedcc_loss(feats, labels, frame, cfg.loss);
            if (!std::isfinite(lv.total))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_idx));
            epoch_loss += lv.total * double(bn);
            epoch_count += bn;

            for (std::size_t k = 0; k < K; ++k) {
                grad_w[k].assign(model.layers[k].W.size(), 0.0);
                grad_b[k].assign(model.layers[k].b.size(), 0.0);
            }
            std::vector<double> delta, prev;
            for (std::size_t b = 0; b < bn; ++b) {
                const double* gf = lv.grad_f.data() + b * D;
                const double* f = feats.data() + b * D;
                // through f = u/||u||: g_u = (g_f - (g_f . f) f) / ||u||
                double proj = 0.0;
                for (int d = 0; d < D; ++d) proj += gf[d] * f[d];
                delta.resize(D);
                for (int d = 0; d < D; ++d) delta[d] = (gf[d] - proj * f[d]) / norms[b];

                for (std::size_t k = K; k-- > 0;) {
                    const mlp::layer& L = model.layers[k];
                    const std::vector<double>& a_in = states[b].acts[k];
                    for (int o = 0; o < L.out; ++o) {
                        double* gw = grad_w[k].data() + static_cast<std::size_t>(o) * L.in;
                        for (int i = 0; i < L.in; ++i) gw[i] += delta[o] * a_in[i];
                        grad_b[k][o] += delta[o];
                    }
                    if (k == 0) break;
                    prev.assign(L.in, 0.0);
                    for (int o = 0; o < L.out; ++o) {
                        const double* w = L.W.data() + static_cast<std::size_t>(o) * L.in;
                        for (int i = 0; i < L.in; ++i) prev[i] += w[i] * delta[o];
                    }
                    const std::vector<double>& pre = states[b].pres[k - 1];
                    const std::vector<double>& post = states[b].acts[k];
                    for (int i = 0; i < model.layers[k].in; ++i)
                        prev[i] *= act_bwd(post[i], pre[i], model.spec.activation);
                    delta.swap(prev);
                }
            }

            for (std::size_t k = 0; k < K; ++k) {
                mlp::layer& L = model.layers[k];
                for (std::size_t j = 0; j < L.W.size(); ++j) {
                    vel_w[k][j] = cfg.momentum * vel_w[k][j] - cfg.learning_rate * grad_w[k][j];
                    L.W[j] += vel_w[k][j];
                }
                for (std::size_t j = 0; j < L.b.size(); ++j) {
                    vel_b[k][j] = cfg.momentum * vel_b[k][j] - cfg.learning_rate * grad_b[k][j];
                    L.b[j] += vel_b[k][j];
                }
            }
        }
        history.push_back(epoch_count > 0 ? epoch_loss / double(epoch_count) : 0.0);
    }
    return history;
}

} // namespace pedcc
