#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pedcc/frame.hpp"
#include "pedcc/metrics.hpp"
#include "pedcc/net.hpp"
#include "pedcc/types.hpp"

namespace pedcc {

// 17-significant-digit decimal via std::to_chars; round-trips any double
// bit-exactly and is locale-independent.
std::string format_double(double v);
double parse_double(const std::string& s);
long long parse_int(const std::string& s);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

// ---- frame file: "# pedcc-frame v1 C=<C> D=<D> seed=<seed>" + C rows ----

struct frame_file {
    centroid_frame frame;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

void write_frame_file(const std::string& path, const centroid_frame& frame, std::uint64_t seed,
                      std::uint64_t config_hash);
frame_file read_frame_file(const std::string& path);

// ---- embedding file: "# pedcc-embed v1 D=<D>" + rows "label,v_0,..." ----

struct embedding_file {
    embedding_set set;
    std::uint64_t config_hash = 0;
};

void write_embedding_file(const std::string& path, const embedding_set& set, std::uint64_t config_hash);
embedding_file read_embedding_file_full(const std::string& path, data_role role);
embedding_set read_embedding_file(const std::string& path, data_role role);

// ---- score file: "index,label,cos_alpha,s_beta,s_pedcc,s_d_pedcc" ----

struct score_file_row {
    long long index = 0;
    int label = -1;
    double cos_alpha = 0.0;
    double s_beta = 0.0;
    double s_pedcc = 0.0;
    double s_d_pedcc = 0.0;
};

struct score_file {
    double omega = 0.0;
    std::uint64_t config_hash = 0;
    std::vector<score_file_row> rows;
};

void write_score_file(const std::string& path, const std::vector<score_record>& records,
                      const std::vector<int>& labels, double omega, std::uint64_t config_hash);
void write_score_file(const std::string& path, const score_file& file);
score_file read_score_file(const std::string& path);

// ---- report file: "method,auroc,tnr_at_tpr95,threshold,omega,n_id,n_ood"
//      with the variance pair appended as comment lines ----

struct report_file {
    std::uint64_t config_hash = 0;
    std::vector<report_row> rows;
    std::optional<variance_pair> variances;
    std::optional<double> train_accuracy;
};

void write_report_file(const std::string& path, const report_file& file);
report_file read_report_file(const std::string& path);

// ---- checkpoint: versioned flat text of layer shapes and weights ----

struct checkpoint_file {
    mlp model;
    std::uint64_t config_hash = 0;
};

void write_checkpoint(const std::string& path, const mlp& model, std::uint64_t config_hash);
checkpoint_file read_checkpoint(const std::string& path);

// ---- config: line-oriented "key = value", '#' comments, order kept ----

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

} // namespace pedcc
