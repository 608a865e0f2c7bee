#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pedcc/metrics.hpp"
#include "pedcc/net.hpp"
#include "pedcc/synthetic.hpp"

namespace pedcc {

// Full run configuration, parsed from a line-oriented "key = value" file.
// In synthetic mode the tuning and evaluation OOD sets are generated from
// the data seed with the two configured kinds; in external mode all four
// data paths reference embedding CSV files in network input space.
struct pipeline_config {
    pipeline_config() { tcfg.seed = 7; }

    int classes = 3;
    int dim = 8;
    std::uint64_t frame_seed = 101;

    int input_dim = 2;
    std::vector<int> hidden = {16, 16};
    activation_kind activation = activation_kind::relu;
    std::uint64_t net_seed = 41;

    train_config tcfg;

    bool synthetic = true;
    long per_class = 500;
    std::uint64_t data_seed = 5;
    ood_kind tune_kind = ood_kind::ring;
    ood_kind eval_kind = ood_kind::uniform_box;

    std::string train_path;
    std::string id_test_path;
    std::string tune_path;
    std::vector<std::string> eval_paths;

    std::string out_dir = "pedcc_out";
    bool allow_overlap = false;
};

pipeline_config parse_pipeline_config(const std::vector<std::pair<std::string, std::string>>& kv);

struct pipeline_result {
    double train_accuracy = 0.0;
    double omega = 0.0;
    variance_pair variances;
    std::vector<report_row> report;
    std::vector<std::string> written;
};

// generate frame -> make or load data -> train -> embed -> tune omega on
// the designated OOD set -> score -> evaluate. Writes frame, data and
// embedding CSVs, checkpoint, loss history, score CSVs, ablation and
// report CSVs into cfg.out_dir, every header carrying config_hash. On a
// stage failure the files written by this run are removed and the error is
// rethrown with the stage name. Log lines go to *log when non-null.
pipeline_result run_pipeline(const pipeline_config& cfg, std::uint64_t config_hash, std::ostream* log);

} // namespace pedcc
