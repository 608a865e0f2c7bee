#include "pedcc/pipeline.hpp"

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "pedcc/errors.hpp"
#include "pedcc/geometry.hpp"
#include "pedcc/io.hpp"
#include "pedcc/mahalanobis.hpp"

namespace fs = std::filesystem;

namespace pedcc {
namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        std::string item = trim_copy(value.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void key_fail(const std::string& key, const std::string& msg) {
    throw validation_error("config key '" + key + "': " + msg);
}

long long kv_int(const std::string& key, const std::string& value) {
    try {
        return parse_int(value);
    } catch (const validation_error& e) {
        key_fail(key, e.what());
    }
}

int kv_dim(const std::string& key, const std::string& value) {
    long long v = kv_int(key, value);
    if (v < 0 || v > 1 << 24) key_fail(key, "out of range");
    return static_cast<int>(v);
}

std::uint64_t kv_seed(const std::string& key, const std::string& value) {
    long long v = kv_int(key, value);
    if (v < 0) key_fail(key, "seed must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

double kv_double(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const validation_error& e) {
        key_fail(key, e.what());
    }
}

bool kv_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    key_fail(key, "expected true or false");
}

std::vector<int> kv_dims(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const std::string& item : split_list(value)) out.push_back(kv_dim(key, item));
    return out;
}

template <class F>
void stage(const char* name, F&& fn) {
    try {
        fn();
    } catch (const validation_error& e) {
        throw validation_error(std::string("stage ") + name + ": " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("stage ") + name + ": " + e.what());
    } catch (const io_error& e) {
        throw io_error(std::string("stage ") + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw io_error(std::string("stage ") + name + ": " + e.what());
    }
}

// Removes the files written so far unless the run reached the end.
struct output_tracker {
    std::vector<std::string> files;
    bool committed = false;

    ~output_tracker() {
        if (committed) return;
        for (const std::string& f : files) {
            std::error_code ec;
            fs::remove(fs::path(f), ec);
        }
    }
};

fs::path canonical_or_raw(const std::string& p) {
    std::error_code ec;
    fs::path c = fs::weakly_canonical(fs::path(p), ec);
    return ec ? fs::path(p) : c;
}

std::vector<double> extract(const std::vector<score_record>& recs, double score_record::*field) {
    std::vector<double> out(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) out[i] = recs[i].*field;
    return out;
}

std::vector<double> flat_cosines(const std::vector<score_record>& recs, int num_classes) {
    std::vector<double> out;
    out.reserve(recs.size() * static_cast<std::size_t>(num_classes));
    for (const score_record& r : recs) out.insert(out.end(), r.cos_theta.begin(), r.cos_theta.end());
    return out;
}

report_row make_row(const char* method, const std::vector<double>& id_scores,
                    const std::vector<double>& ood_scores) {
    report_row row;
    row.method = method;
    row.auroc = auroc(id_scores, ood_scores);
    tnr_result t = tnr_at_tpr(id_scores, ood_scores, 0.95);
    row.tnr_at_tpr95 = t.tnr;
    row.threshold = t.threshold;
    row.n_id = static_cast<long long>(id_scores.size());
    row.n_ood = static_cast<long long>(ood_scores.size());
    return row;
}

double nearest_centroid_accuracy(const embedding_set& emb, const centroid_frame& frame) {
    long long labeled = 0, correct = 0;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        if (emb.labels[i] < 0) continue;
        ++labeled;
        const double* f = emb.row(i);
        int best = 0;
        double best_dot = 0.0;
        for (int c = 0; c < frame.num_classes; ++c) {
            const double* a = frame.centroid(c);
            double d = 0.0;
            for (int k = 0; k < frame.dim; ++k) d += f[k] * a[k];
            if (c == 0 || d > best_dot) {
                best = c;
                best_dot = d;
            }
        }
        if (best == emb.labels[i]) ++correct;
    }
    if (labeled == 0) throw validation_error("accuracy: no labeled rows");
    return static_cast<double>(correct) / static_cast<double>(labeled);
}

void write_history_file(const std::string& path, const std::vector<double>& history,
                        std::uint64_t config_hash) {
    std::string text = "# pedcc-history v1\n# config " + hash_hex(config_hash) + "\nepoch,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        text += std::to_string(i + 1) + "," + format_double(history[i]) + "\n";
    write_file_bytes(path, text);
}

} // namespace

pipeline_config parse_pipeline_config(const std::vector<std::pair<std::string, std::string>>& kv) {
    pipeline_config cfg;
    for (const auto& [key, value] : kv) {
        if (key == "classes") cfg.classes = kv_dim(key, value);
        else if (key == "dim") cfg.dim = kv_dim(key, value);
        else if (key == "frame_seed") cfg.frame_seed = kv_seed(key, value);
        else if (key == "input_dim") cfg.input_dim = kv_dim(key, value);
        else if (key == "hidden") cfg.hidden = kv_dims(key, value);
        else if (key == "activation") {
            if (value == "relu") cfg.activation = activation_kind::relu;
            else if (value == "tanh") cfg.activation = activation_kind::tanh;
            else key_fail(key, "expected relu or tanh");
        } else if (key == "net_seed") cfg.net_seed = kv_seed(key, value);
        else if (key == "epochs") cfg.tcfg.epochs = kv_dim(key, value);
        else if (key == "batch_size") cfg.tcfg.batch_size = kv_dim(key, value);
        else if (key == "learning_rate") cfg.tcfg.learning_rate = kv_double(key, value);
        else if (key == "momentum") cfg.tcfg.momentum = kv_double(key, value);
        else if (key == "shuffle_seed") cfg.tcfg.seed = kv_seed(key, value);
        else if (key == "loss_s") cfg.tcfg.loss.scale_s = kv_double(key, value);
        else if (key == "loss_m") cfg.tcfg.loss.margin_m = kv_double(key, value);
        else if (key == "loss_n") cfg.tcfg.loss.mse_weight_n = kv_double(key, value);
        else if (key == "synthetic") cfg.synthetic = kv_bool(key, value);
        else if (key == "per_class") cfg.per_class = kv_int(key, value);
        else if (key == "data_seed") cfg.data_seed = kv_seed(key, value);
        else if (key == "ood_tune_kind") {
            try {
                cfg.tune_kind = parse_ood_kind(value);
            } catch (const validation_error& e) {
                key_fail(key, e.what());
            }
        } else if (key == "ood_eval_kind") {
            try {
                cfg.eval_kind = parse_ood_kind(value);
            } catch (const validation_error& e) {
                key_fail(key, e.what());
            }
        } else if (key == "train_path") cfg.train_path = value;
        else if (key == "id_test_path") cfg.id_test_path = value;
        else if (key == "ood_tune_path") cfg.tune_path = value;
        else if (key == "ood_eval_paths") cfg.eval_paths = split_list(value);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "allow_overlap") cfg.allow_overlap = kv_bool(key, value);
        else throw validation_error("config: unknown key '" + key + "'");
    }

    if (cfg.out_dir.empty()) throw validation_error("config: out_dir must not be empty");
    bool any_path = !cfg.train_path.empty() || !cfg.id_test_path.empty() || !cfg.tune_path.empty() ||
                    !cfg.eval_paths.empty();
    if (cfg.synthetic && any_path)
        throw validation_error("config: data paths are only used when synthetic = false");
    if (!cfg.synthetic) {
        if (cfg.train_path.empty() || cfg.id_test_path.empty() || cfg.tune_path.empty() ||
            cfg.eval_paths.empty())
            throw validation_error(
                "config: synthetic = false requires train_path, id_test_path, ood_tune_path and "
                "ood_eval_paths");
    }
    return cfg;
}

pipeline_result run_pipeline(const pipeline_config& cfg, std::uint64_t config_hash, std::ostream* log) {
    {
        std::error_code ec;
        fs::create_directories(fs::path(cfg.out_dir), ec);
        if (ec) throw io_error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    }

    output_tracker outputs;
    auto out = [&](const std::string& name) {
        std::string p = (fs::path(cfg.out_dir) / name).string();
        outputs.files.push_back(p);
        return p;
    };

    pipeline_result result;
    centroid_frame frame;
    stage("frame", [&] {
        frame = generate_frame(cfg.classes, cfg.dim, cfg.frame_seed);
        write_frame_file(out("frame.csv"), frame, cfg.frame_seed, config_hash);
        if (log)
            *log << "[frame] " << cfg.classes << " centroids in dimension " << cfg.dim << "\n";
    });

    embedding_set train_data, id_data, tune_data;
    std::vector<embedding_set> eval_data;
    std::vector<std::string> eval_names;
    auto eval_file = [&](const std::string& stem, std::size_t k) {
        if (eval_data.size() == 1) return stem + ".csv";
        return stem + "_" + std::to_string(k + 1) + ".csv";
    };

    stage("data", [&] {
        if (cfg.synthetic) {
            if (cfg.tune_kind == cfg.eval_kind && !cfg.allow_overlap)
                throw validation_error("evaluation OOD kind '" + ood_kind_name(cfg.eval_kind) +
                                       "' equals the tuning kind; set allow_overlap to accept");
            synthetic_data tune_side =
                make_synthetic(cfg.classes, cfg.input_dim, cfg.per_class, cfg.tune_kind, cfg.data_seed);
            synthetic_data eval_side =
                make_synthetic(cfg.classes, cfg.input_dim, cfg.per_class, cfg.eval_kind, cfg.data_seed);
            train_data = std::move(tune_side.train);
            id_data = std::move(tune_side.id_test);
            tune_data = std::move(tune_side.ood);
            eval_data.push_back(std::move(eval_side.ood));
            eval_names.push_back(ood_kind_name(cfg.eval_kind));
        } else {
            fs::path tune_canon = canonical_or_raw(cfg.tune_path);
            for (const std::string& p : cfg.eval_paths) {
                if (canonical_or_raw(p) == tune_canon && !cfg.allow_overlap)
                    throw validation_error("evaluation OOD path '" + p +
                                           "' equals the tuning path; set allow_overlap to accept");
            }
            train_data = read_embedding_file(cfg.train_path, data_role::train);
            id_data = read_embedding_file(cfg.id_test_path, data_role::id_test);
            tune_data = read_embedding_file(cfg.tune_path, data_role::ood);
            for (const std::string& p : cfg.eval_paths) {
                eval_data.push_back(read_embedding_file(p, data_role::ood));
                eval_names.push_back(p);
            }
        }
        if (train_data.dim != cfg.input_dim)
            throw validation_error("training data dimension " + std::to_string(train_data.dim) +
                                   " does not match input_dim " + std::to_string(cfg.input_dim));
        if (id_data.dim != cfg.input_dim || tune_data.dim != cfg.input_dim)
            throw validation_error("test data dimension does not match input_dim");
        for (const embedding_set& e : eval_data)
            if (e.dim != cfg.input_dim)
                throw validation_error("evaluation data dimension does not match input_dim");
        write_embedding_file(out("data_train.csv"), train_data, config_hash);
        write_embedding_file(out("data_id_test.csv"), id_data, config_hash);
        write_embedding_file(out("data_ood_tune.csv"), tune_data, config_hash);
        for (std::size_t k = 0; k < eval_data.size(); ++k)
            write_embedding_file(out(eval_file("data_ood_eval", k)), eval_data[k], config_hash);
        if (log)
            *log << "[data] train=" << train_data.size() << " id_test=" << id_data.size()
                 << " ood_tune=" << tune_data.size() << " ood_eval=" << eval_data[0].size() << "\n";
    });

    mlp model;
    stage("train", [&] {
        network_spec spec;
        spec.input_dim = cfg.input_dim;
        spec.hidden_dims = cfg.hidden;
        spec.feature_dim = cfg.dim;
        spec.activation = cfg.activation;
        spec.seed = cfg.net_seed;
        model = init_mlp(spec);
        std::vector<double> history = train(model, frame, train_data, cfg.tcfg);
        write_checkpoint(out("checkpoint.net"), model, config_hash);
        write_history_file(out("train_history.csv"), history, config_hash);
        if (log)
            *log << "[train] " << history.size() << " epochs, final loss "
                 << (history.empty() ? 0.0 : history.back()) << "\n";
    });

    embedding_set train_emb, id_emb, tune_emb;
    std::vector<embedding_set> eval_emb;
    stage("embed", [&] {
        train_emb = embed(model, train_data);
        id_emb = embed(model, id_data);
        tune_emb = embed(model, tune_data);
        for (const embedding_set& e : eval_data) eval_emb.push_back(embed(model, e));
        write_embedding_file(out("embed_train.csv"), train_emb, config_hash);
        write_embedding_file(out("embed_id_test.csv"), id_emb, config_hash);
        write_embedding_file(out("embed_ood_tune.csv"), tune_emb, config_hash);
        for (std::size_t k = 0; k < eval_emb.size(); ++k)
            write_embedding_file(out(eval_file("embed_ood_eval", k)), eval_emb[k], config_hash);
        result.train_accuracy = nearest_centroid_accuracy(train_emb, frame);
        if (log) *log << "[embed] training accuracy " << result.train_accuracy << "\n";
    });

    stage("tune", [&] {
        std::vector<score_record> id_rec = score_batch(id_emb, frame, 0.0);
        std::vector<score_record> tune_rec = score_batch(tune_emb, frame, 0.0);
        tune_result tuned = tune_omega(id_rec, tune_rec, default_omega_grid());
        result.omega = tuned.omega;
        if (log)
            *log << "[tune] omega " << tuned.omega << " (tnr@tpr95 " << tuned.tnr
                 << " on the tuning set)\n";
    });

    std::vector<score_record> id_rec, tune_rec;
    std::vector<std::vector<score_record>> eval_rec;
    stage("score", [&] {
        id_rec = score_batch(id_emb, frame, result.omega);
        tune_rec = score_batch(tune_emb, frame, result.omega);
        for (const embedding_set& e : eval_emb) eval_rec.push_back(score_batch(e, frame, result.omega));
        write_score_file(out("scores_id_test.csv"), id_rec, id_emb.labels, result.omega, config_hash);
        write_score_file(out("scores_ood_tune.csv"), tune_rec, tune_emb.labels, result.omega, config_hash);
        for (std::size_t k = 0; k < eval_rec.size(); ++k)
            write_score_file(out(eval_file("scores_ood_eval", k)), eval_rec[k], eval_emb[k].labels,
                             result.omega, config_hash);
        if (log) *log << "[score] " << 2 + eval_rec.size() << " score files\n";
    });

    stage("evaluate", [&] {
        result.variances = variance_report(id_rec);
        mahalanobis_model maha = mahalanobis_fit(train_emb);
        std::vector<double> id_maha = mahalanobis_score_batch(maha, id_emb);
        std::vector<double> id_base = baseline_max_softmax(flat_cosines(id_rec, frame.num_classes),
                                                           frame.num_classes);
        std::vector<double> id_pedcc = extract(id_rec, &score_record::s_pedcc);
        std::vector<double> id_alpha = extract(id_rec, &score_record::s_alpha);
        std::vector<double> id_beta = extract(id_rec, &score_record::s_beta);
        std::vector<double> id_d = extract(id_rec, &score_record::s_d_pedcc);

        for (std::size_t k = 0; k < eval_rec.size(); ++k) {
            const std::vector<score_record>& ood = eval_rec[k];
            std::vector<double> ood_maha = mahalanobis_score_batch(maha, eval_emb[k]);
            std::vector<double> ood_base =
                baseline_max_softmax(flat_cosines(ood, frame.num_classes), frame.num_classes);

            std::vector<report_row> rows;
            rows.push_back(make_row("baseline", id_base, ood_base));
            rows.push_back(make_row("mahalanobis", id_maha, ood_maha));
            rows.push_back(make_row("s_pedcc", id_pedcc, extract(ood, &score_record::s_pedcc)));
            rows.push_back(make_row("s_alpha", id_alpha, extract(ood, &score_record::s_alpha)));
            rows.push_back(make_row("s_beta", id_beta, extract(ood, &score_record::s_beta)));
            report_row d_row = make_row("s_d_pedcc", id_d, extract(ood, &score_record::s_d_pedcc));
            d_row.has_omega = true;
            d_row.omega = result.omega;
            rows.push_back(d_row);

            report_file rep;
            rep.config_hash = config_hash;
            rep.rows = rows;
            rep.variances = result.variances;
            rep.train_accuracy = result.train_accuracy;
            write_report_file(out(eval_file("report", k)), rep);

            report_file abl;
            abl.config_hash = config_hash;
            abl.rows = ablation_grid(id_rec, ood, result.omega);
            write_report_file(out(eval_file("ablation", k)), abl);

            if (k == 0) result.report = rows;
            if (log)
                *log << "[evaluate] " << eval_names[k] << ": s_d_pedcc auroc " << d_row.auroc
                     << " tnr@tpr95 " << d_row.tnr_at_tpr95 << "\n";
        }
    });

    outputs.committed = true;
    result.written = outputs.files;
    return result;
}

} // namespace pedcc
