#include "pedcc/synthetic.hpp"

#include <cmath>

#include "pedcc/errors.hpp"
#include "pedcc/rng.hpp"

namespace pedcc {

ood_kind parse_ood_kind(const std::string& name) {
    if (name == "uniform-box") return ood_kind::uniform_box;
    if (name == "ring") return ood_kind::ring;
    if (name == "shifted-blobs") return ood_kind::shifted_blobs;
    throw validation_error("unknown ood kind '" + name + "' (expected uniform-box, ring, or shifted-blobs)");
}

std::string ood_kind_name(ood_kind kind) {
    switch (kind) {
        case ood_kind::uniform_box: return "uniform-box";
        case ood_kind::ring: return "ring";
        default: return "shifted-blobs";
    }
}

namespace {

constexpr double kSeparation = 6.0;  // closest pair of class means, in sigma
constexpr double kBoxMargin = 16.0;  // box half-width beyond the outermost mean
constexpr double kBlobEdge = 3.0;    // blob radius taken as 3 sigma
constexpr double kRingFactor = 3.0;  // ring radius = 3 x blob-region radius
constexpr double kShift = 8.0;       // shifted-blobs translation, in sigma

void gaussian_vec(rng& gen, double* v, int d) {
    for (int i = 0; i < d; ++i) v[i] = gen.normal();
}

void unit_direction(rng& gen, double* v, int d) {
    for (;;) {
        gaussian_vec(gen, v, d);
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += v[i] * v[i];
        double r = std::sqrt(s);
        if (r > 1e-9) {
            for (int i = 0; i < d; ++i) v[i] /= r;
            return;
        }
    }
}

// Class means: C distinct seed-determined directions, scaled together so
// the minimum pairwise distance is exactly kSeparation. Falls back to
// equally spaced points on one line when the dimension cannot hold C
// distinct directions (e.g. C > 2 in 1-D).
std::vector<double> make_means(int C, int d, rng& gen) {
    std::vector<double> dirs(static_cast<std::size_t>(C) * d);
    bool ok = true;
    for (int i = 0; i < C && ok; ++i) {
        double* di = dirs.data() + static_cast<std::size_t>(i) * d;
        int tries = 0;
        for (;; ++tries) {
            if (tries >= 200) {
                ok = false;
                break;
            }
            unit_direction(gen, di, d);
            bool distinct = true;
            for (int j = 0; j < i && distinct; ++j) {
                const double* dj = dirs.data() + static_cast<std::size_t>(j) * d;
                double c = 0.0;
                for (int k = 0; k < d; ++k) c += di[k] * dj[k];
                if (c > 0.999) distinct = false;
            }
            if (distinct) break;
        }
    }
    if (!ok) {
        std::vector<double> axis(d);
        unit_direction(gen, axis.data(), d);
        std::vector<double> means(static_cast<std::size_t>(C) * d);
        for (int i = 0; i < C; ++i) {
            double t = (double(i) - 0.5 * (C - 1)) * kSeparation;
            for (int k = 0; k < d; ++k) means[static_cast<std::size_t>(i) * d + k] = t * axis[k];
        }
        return means;
    }

    double dmin = 1e300;
    for (int i = 0; i < C; ++i)
        for (int j = i + 1; j < C; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                double t = dirs[static_cast<std::size_t>(i) * d + k] - dirs[static_cast<std::size_t>(j) * d + k];
                s += t * t;
            }
            dmin = std::min(dmin, std::sqrt(s));
        }
    const double scale = kSeparation / dmin;
    for (double& v : dirs) v *= scale;
    return dirs;
}

embedding_set make_blobs(const std::vector<double>& means, int C, int d, long per_class, rng& gen,
                         data_role role, const double* shift) {
    embedding_set out;
    out.dim = d;
    out.role = role;
    std::vector<double> p(d);
    for (int c = 0; c < C; ++c) {
        const double* mu = means.data() + static_cast<std::size_t>(c) * d;
        for (long i = 0; i < per_class; ++i) {
            gaussian_vec(gen, p.data(), d);
            for (int k = 0; k < d; ++k) p[k] += mu[k] + (shift ? shift[k] : 0.0);
            out.push_row(p.data(), role == data_role::ood ? -1 : c);
        }
    }
    return out;
}

} // namespace

synthetic_data make_synthetic(int num_classes, int input_dim, long per_class, ood_kind kind,
                              std::uint64_t seed) {
    const int C = num_classes, d = input_dim;
    if (C < 2) throw validation_error("make_synthetic: need at least 2 classes");
    if (d < 1) throw validation_error("make_synthetic: input_dim must be >= 1");
    if (per_class < 0) throw validation_error("make_synthetic: per_class must be >= 0");

    rng mean_gen(mix_seed(seed, 0x6d65616e));
    std::vector<double> means = make_means(C, d, mean_gen);

    std::vector<double> center(d, 0.0);
    for (int c = 0; c < C; ++c)
        for (int k = 0; k < d; ++k) center[k] += means[static_cast<std::size_t>(c) * d + k] / double(C);
    double spread = 0.0;
    for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            double t = means[static_cast<std::size_t>(c) * d + k] - center[k];
            s += t * t;
        }
        spread = std::max(spread, std::sqrt(s));
    }

    synthetic_data out;
    rng train_gen(mix_seed(seed, 0x747261696e));
    out.train = make_blobs(means, C, d, per_class, train_gen, data_role::train, nullptr);
    rng test_gen(mix_seed(seed, 0x6964746573));
    out.id_test = make_blobs(means, C, d, per_class, test_gen, data_role::id_test, nullptr);

    rng ood_gen(mix_seed(seed, 0x6f6f64));
    const long n_ood = static_cast<long>(C) * per_class;
    out.ood.dim = d;
    out.ood.role = data_role::ood;
    std::vector<double> p(d), u(d);
    switch (kind) {
        case ood_kind::uniform_box: {
            const double half = spread + kBoxMargin;
            for (long i = 0; i < n_ood; ++i) {
                for (int k = 0; k < d; ++k) p[k] = center[k] + ood_gen.uniform(-half, half);
                out.ood.push_row(p.data(), -1);
            }
            break;
        }
        case ood_kind::ring: {
            const double radius = kRingFactor * (spread + kBlobEdge);
            for (long i = 0; i < n_ood; ++i) {
                unit_direction(ood_gen, u.data(), d);
                gaussian_vec(ood_gen, p.data(), d);
                for (int k = 0; k < d; ++k) p[k] += center[k] + radius * u[k];
                out.ood.push_row(p.data(), -1);
            }
            break;
        }
        case ood_kind::shifted_blobs: {
            unit_direction(ood_gen, u.data(), d);
            for (int k = 0; k < d; ++k) u[k] *= kShift;
            out.ood = make_blobs(means, C, d, per_class, ood_gen, data_role::ood, u.data());
            break;
        }
    }
    return out;
}

} // namespace pedcc
