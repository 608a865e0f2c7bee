#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pedcc/errors.hpp"
#include "pedcc/frame.hpp"
#include "pedcc/geometry.hpp"
#include "pedcc/io.hpp"
#include "pedcc/mahalanobis.hpp"
#include "pedcc/metrics.hpp"
#include "pedcc/net.hpp"
#include "pedcc/pipeline.hpp"
#include "pedcc/synthetic.hpp"

namespace {

using namespace pedcc;

std::uint64_t file_hash(const std::string& path) { return fnv1a64(read_file_bytes(path)); }

std::string join_dims(const std::vector<int>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s;
}

activation_kind parse_activation(const std::string& name) {
    if (name == "relu") return activation_kind::relu;
    if (name == "tanh") return activation_kind::tanh;
    throw validation_error("unknown activation '" + name + "' (expected relu or tanh)");
}

report_row scored_row(const char* method, const std::vector<double>& id_scores,
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

std::vector<double> pick(const std::vector<score_record>& recs, double score_record::*field) {
    std::vector<double> out(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) out[i] = recs[i].*field;
    return out;
}

std::vector<double> cosine_rows(const std::vector<score_record>& recs, int num_classes) {
    std::vector<double> out;
    out.reserve(recs.size() * static_cast<std::size_t>(num_classes));
    for (const score_record& r : recs) out.insert(out.end(), r.cos_theta.begin(), r.cos_theta.end());
    return out;
}

void add_gen_frame(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-frame", "Generate a centroid frame and write it as CSV");
    auto classes = std::make_shared<int>(3);
    auto dim = std::make_shared<int>(8);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--classes", *classes, "Number of centroids")->required();
    cmd->add_option("--dim", *dim, "Feature dimension")->required();
    cmd->add_option("--seed", *seed, "Rotation seed");
    cmd->add_option("--out", *out, "Output frame CSV")->required();
    cmd->callback([=] {
        centroid_frame frame = generate_frame(*classes, *dim, *seed);
        std::string tag = "gen-frame classes=" + std::to_string(*classes) + " dim=" +
                          std::to_string(*dim) + " seed=" + std::to_string(*seed);
        write_frame_file(*out, frame, *seed, fnv1a64(tag));
        std::cout << "wrote " << *out << "\n";
    });
}

void add_make_data(CLI::App& app) {
    auto* cmd = app.add_subcommand("make-data", "Generate synthetic ID blobs and an OOD set");
    auto classes = std::make_shared<int>(3);
    auto input_dim = std::make_shared<int>(2);
    auto per_class = std::make_shared<long long>(500);
    auto kind_name = std::make_shared<std::string>("uniform-box");
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out_train = std::make_shared<std::string>();
    auto out_id = std::make_shared<std::string>();
    auto out_ood = std::make_shared<std::string>();
    cmd->add_option("--classes", *classes, "Number of blob classes")->required();
    cmd->add_option("--input-dim", *input_dim, "Data dimension")->required();
    cmd->add_option("--per-class", *per_class, "Samples per class and split");
    cmd->add_option("--ood-kind", *kind_name, "uniform-box, ring, or shifted-blobs");
    cmd->add_option("--seed", *seed, "Data seed");
    cmd->add_option("--out-train", *out_train, "Training split CSV")->required();
    cmd->add_option("--out-id-test", *out_id, "ID test split CSV")->required();
    cmd->add_option("--out-ood", *out_ood, "OOD split CSV")->required();
    cmd->callback([=] {
        ood_kind kind = parse_ood_kind(*kind_name);
        synthetic_data data =
            make_synthetic(*classes, *input_dim, static_cast<long>(*per_class), kind, *seed);
        std::string tag = "make-data classes=" + std::to_string(*classes) + " input_dim=" +
                          std::to_string(*input_dim) + " per_class=" + std::to_string(*per_class) +
                          " ood_kind=" + ood_kind_name(kind) + " seed=" + std::to_string(*seed);
        std::uint64_t h = fnv1a64(tag);
        write_embedding_file(*out_train, data.train, h);
        write_embedding_file(*out_id, data.id_test, h);
        write_embedding_file(*out_ood, data.ood, h);
        std::cout << "wrote " << *out_train << ", " << *out_id << ", " << *out_ood << "\n";
    });
}

void add_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train the embedding network against a frame");
    auto frame_path = std::make_shared<std::string>();
    auto data_path = std::make_shared<std::string>();
    auto hidden = std::make_shared<std::vector<int>>();
    auto activation = std::make_shared<std::string>("relu");
    auto net_seed = std::make_shared<std::uint64_t>(41);
    auto out = std::make_shared<std::string>();
    auto history_path = std::make_shared<std::string>();
    auto cfg = std::make_shared<train_config>();
    cfg->seed = 7;
    cmd->add_option("--frame", *frame_path, "Frame CSV")->required();
    cmd->add_option("--data", *data_path, "Labeled training CSV")->required();
    cmd->add_option("--hidden", *hidden, "Hidden layer widths")->delimiter(',');
    cmd->add_option("--activation", *activation, "relu or tanh");
    cmd->add_option("--net-seed", *net_seed, "Weight init seed");
    cmd->add_option("--epochs", cfg->epochs, "Training epochs");
    cmd->add_option("--batch-size", cfg->batch_size, "Minibatch size");
    cmd->add_option("--learning-rate", cfg->learning_rate, "SGD step size");
    cmd->add_option("--momentum", cfg->momentum, "SGD momentum in [0,1)");
    cmd->add_option("--shuffle-seed", cfg->seed, "Epoch shuffle seed");
    cmd->add_option("--loss-s", cfg->loss.scale_s, "Cosine scale of the margin loss");
    cmd->add_option("--loss-m", cfg->loss.margin_m, "Additive cosine margin");
    cmd->add_option("--loss-n", cfg->loss.mse_weight_n, "Weight on the root-MSE term");
    cmd->add_option("--out", *out, "Checkpoint path")->required();
    cmd->add_option("--history", *history_path, "Optional per-epoch loss CSV");
    cmd->callback([=] {
        frame_file ff = read_frame_file(*frame_path);
        embedding_set data = read_embedding_file(*data_path, data_role::train);
        network_spec spec;
        spec.input_dim = data.dim;
        spec.hidden_dims = *hidden;
        spec.feature_dim = ff.frame.dim;
        spec.activation = parse_activation(*activation);
        spec.seed = *net_seed;
        mlp model = init_mlp(spec);
        std::vector<double> history = train(model, ff.frame, data, *cfg);
        std::string tag = "train frame=" + hash_hex(file_hash(*frame_path)) + " data=" +
                          hash_hex(file_hash(*data_path)) + " hidden=" + join_dims(*hidden) +
                          " activation=" + *activation + " net_seed=" + std::to_string(*net_seed) +
                          " epochs=" + std::to_string(cfg->epochs) + " batch_size=" +
                          std::to_string(cfg->batch_size) + " learning_rate=" +
                          format_double(cfg->learning_rate) + " momentum=" +
                          format_double(cfg->momentum) + " shuffle_seed=" + std::to_string(cfg->seed) +
                          " loss_s=" + format_double(cfg->loss.scale_s) + " loss_m=" +
                          format_double(cfg->loss.margin_m) + " loss_n=" +
                          format_double(cfg->loss.mse_weight_n);
        std::uint64_t h = fnv1a64(tag);
        write_checkpoint(*out, model, h);
        if (!history_path->empty()) {
            std::string text = "# pedcc-history v1\n# config " + hash_hex(h) + "\nepoch,loss\n";
            for (std::size_t i = 0; i < history.size(); ++i)
                text += std::to_string(i + 1) + "," + format_double(history[i]) + "\n";
            write_file_bytes(*history_path, text);
        }
        std::cout << "wrote " << *out << " (final loss "
                  << (history.empty() ? 0.0 : history.back()) << ")\n";
    });
}

void add_embed(CLI::App& app) {
    auto* cmd = app.add_subcommand("embed", "Run data through a checkpoint and emit embeddings");
    auto model_path = std::make_shared<std::string>();
    auto data_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model_path, "Checkpoint path")->required();
    cmd->add_option("--data", *data_path, "Input CSV")->required();
    cmd->add_option("--out", *out, "Embedding CSV")->required();
    cmd->callback([=] {
        checkpoint_file ck = read_checkpoint(*model_path);
        embedding_set data = read_embedding_file(*data_path, data_role::id_test);
        embedding_set emb = embed(ck.model, data);
        std::string tag = "embed model=" + hash_hex(file_hash(*model_path)) + " data=" +
                          hash_hex(file_hash(*data_path));
        write_embedding_file(*out, emb, fnv1a64(tag));
        std::cout << "wrote " << *out << "\n";
    });
}

void add_score(CLI::App& app) {
    auto* cmd = app.add_subcommand("score", "Decompose embeddings into the geometric scores");
    auto frame_path = std::make_shared<std::string>();
    auto emb_path = std::make_shared<std::string>();
    auto omega = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--frame", *frame_path, "Frame CSV")->required();
    cmd->add_option("--embeddings", *emb_path, "Embedding CSV")->required();
    cmd->add_option("--omega", *omega, "Weight on s_beta in the combined score");
    cmd->add_option("--out", *out, "Score CSV")->required();
    cmd->callback([=] {
        frame_file ff = read_frame_file(*frame_path);
        embedding_set emb = read_embedding_file(*emb_path, data_role::id_test);
        std::vector<score_record> recs = score_batch(emb, ff.frame, *omega);
        std::string tag = "score frame=" + hash_hex(file_hash(*frame_path)) + " embeddings=" +
                          hash_hex(file_hash(*emb_path)) + " omega=" + format_double(*omega);
        write_score_file(*out, recs, emb.labels, *omega, fnv1a64(tag));
        std::cout << "wrote " << *out << "\n";
    });
}

void add_tune_omega(CLI::App& app) {
    auto* cmd = app.add_subcommand("tune-omega", "Pick omega on an ID / OOD validation pair");
    auto frame_path = std::make_shared<std::string>();
    auto id_path = std::make_shared<std::string>();
    auto ood_path = std::make_shared<std::string>();
    cmd->add_option("--frame", *frame_path, "Frame CSV")->required();
    cmd->add_option("--id", *id_path, "ID validation embedding CSV")->required();
    cmd->add_option("--ood", *ood_path, "OOD validation embedding CSV")->required();
    cmd->callback([=] {
        frame_file ff = read_frame_file(*frame_path);
        embedding_set id_emb = read_embedding_file(*id_path, data_role::id_test);
        embedding_set ood_emb = read_embedding_file(*ood_path, data_role::ood);
        std::vector<score_record> id_rec = score_batch(id_emb, ff.frame, 0.0);
        std::vector<score_record> ood_rec = score_batch(ood_emb, ff.frame, 0.0);
        tune_result tuned = tune_omega(id_rec, ood_rec, default_omega_grid());
        std::cout << "omega=" << format_double(tuned.omega) << "\n"
                  << "tnr=" << format_double(tuned.tnr) << "\n"
                  << "threshold=" << format_double(tuned.threshold) << "\n";
    });
}

void add_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Evaluate detectors on an ID / OOD embedding pair");
    auto frame_path = std::make_shared<std::string>();
    auto id_path = std::make_shared<std::string>();
    auto ood_path = std::make_shared<std::string>();
    auto train_path = std::make_shared<std::string>();
    auto omega = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--frame", *frame_path, "Frame CSV")->required();
    cmd->add_option("--id", *id_path, "ID test embedding CSV")->required();
    cmd->add_option("--ood", *ood_path, "OOD embedding CSV")->required();
    cmd->add_option("--train", *train_path, "Training embedding CSV (adds the Mahalanobis row)");
    cmd->add_option("--omega", *omega, "Weight on s_beta in the combined score");
    cmd->add_option("--out", *out, "Report CSV")->required();
    cmd->callback([=] {
        frame_file ff = read_frame_file(*frame_path);
        embedding_set id_emb = read_embedding_file(*id_path, data_role::id_test);
        embedding_set ood_emb = read_embedding_file(*ood_path, data_role::ood);
        std::vector<score_record> id_rec = score_batch(id_emb, ff.frame, *omega);
        std::vector<score_record> ood_rec = score_batch(ood_emb, ff.frame, *omega);

        std::string tag = "eval frame=" + hash_hex(file_hash(*frame_path)) + " id=" +
                          hash_hex(file_hash(*id_path)) + " ood=" + hash_hex(file_hash(*ood_path)) +
                          " omega=" + format_double(*omega) + " train=" +
                          (train_path->empty() ? std::string("none") : hash_hex(file_hash(*train_path)));

        report_file rep;
        rep.config_hash = fnv1a64(tag);
        int c = ff.frame.num_classes;
        rep.rows.push_back(scored_row("baseline", baseline_max_softmax(cosine_rows(id_rec, c), c),
                                      baseline_max_softmax(cosine_rows(ood_rec, c), c)));
        if (!train_path->empty()) {
            embedding_set train_emb = read_embedding_file(*train_path, data_role::train);
            mahalanobis_model maha = mahalanobis_fit(train_emb);
            rep.rows.push_back(scored_row("mahalanobis", mahalanobis_score_batch(maha, id_emb),
                                          mahalanobis_score_batch(maha, ood_emb)));
        }
        rep.rows.push_back(scored_row("s_pedcc", pick(id_rec, &score_record::s_pedcc),
                                      pick(ood_rec, &score_record::s_pedcc)));
        rep.rows.push_back(scored_row("s_alpha", pick(id_rec, &score_record::s_alpha),
                                      pick(ood_rec, &score_record::s_alpha)));
        rep.rows.push_back(scored_row("s_beta", pick(id_rec, &score_record::s_beta),
                                      pick(ood_rec, &score_record::s_beta)));
        report_row d_row = scored_row("s_d_pedcc", pick(id_rec, &score_record::s_d_pedcc),
                                      pick(ood_rec, &score_record::s_d_pedcc));
        d_row.has_omega = true;
        d_row.omega = *omega;
        rep.rows.push_back(d_row);
        if (id_rec.size() >= 2) rep.variances = variance_report(id_rec);
        write_report_file(*out, rep);
        std::cout << "wrote " << *out << "\n";
    });
}

void add_ablate(CLI::App& app) {
    auto* cmd = app.add_subcommand("ablate", "Score-combination ablation on an ID / OOD pair");
    auto frame_path = std::make_shared<std::string>();
    auto id_path = std::make_shared<std::string>();
    auto ood_path = std::make_shared<std::string>();
    auto omega = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--frame", *frame_path, "Frame CSV")->required();
    cmd->add_option("--id", *id_path, "ID test embedding CSV")->required();
    cmd->add_option("--ood", *ood_path, "OOD embedding CSV")->required();
    cmd->add_option("--omega", *omega, "Weight on s_beta in the combined score");
    cmd->add_option("--out", *out, "Ablation CSV")->required();
    cmd->callback([=] {
        frame_file ff = read_frame_file(*frame_path);
        embedding_set id_emb = read_embedding_file(*id_path, data_role::id_test);
        embedding_set ood_emb = read_embedding_file(*ood_path, data_role::ood);
        std::vector<score_record> id_rec = score_batch(id_emb, ff.frame, *omega);
        std::vector<score_record> ood_rec = score_batch(ood_emb, ff.frame, *omega);
        std::string tag = "ablate frame=" + hash_hex(file_hash(*frame_path)) + " id=" +
                          hash_hex(file_hash(*id_path)) + " ood=" + hash_hex(file_hash(*ood_path)) +
                          " omega=" + format_double(*omega);
        report_file rep;
        rep.config_hash = fnv1a64(tag);
        rep.rows = ablation_grid(id_rec, ood_rec, *omega);
        write_report_file(*out, rep);
        std::cout << "wrote " << *out << "\n";
    });
}

void add_pipeline(CLI::App& app) {
    auto* cmd = app.add_subcommand("pipeline", "Run frame, data, train, embed, tune, score, evaluate");
    auto config_path = std::make_shared<std::string>();
    auto allow_overlap = std::make_shared<bool>(false);
    auto quiet = std::make_shared<bool>(false);
    cmd->add_option("--config", *config_path, "key = value run configuration")->required();
    cmd->add_flag("--allow-overlap", *allow_overlap, "Accept a tuning OOD set reused for evaluation");
    cmd->add_flag("--quiet", *quiet, "Suppress stage progress lines");
    cmd->callback([=] {
        std::string bytes = read_file_bytes(*config_path);
        pipeline_config cfg = parse_pipeline_config(parse_config_text(bytes));
        if (*allow_overlap) cfg.allow_overlap = true;
        pipeline_result res = run_pipeline(cfg, fnv1a64(bytes), *quiet ? nullptr : &std::cout);
        std::cout << "train_accuracy=" << format_double(res.train_accuracy) << "\n"
                  << "omega=" << format_double(res.omega) << "\n";
        for (const report_row& row : res.report)
            std::cout << row.method << ": auroc=" << format_double(row.auroc)
                      << " tnr@tpr95=" << format_double(row.tnr_at_tpr95) << "\n";
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Out-of-distribution detection with predefined evenly-distributed class centroids"};
    app.require_subcommand(1);
    add_gen_frame(app);
    add_make_data(app);
    add_train(app);
    add_embed(app);
    add_score(app);
    add_tune_omega(app);
    add_eval(app);
    add_ablate(app);
    add_pipeline(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
