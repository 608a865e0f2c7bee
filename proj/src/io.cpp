#include "pedcc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pedcc/errors.hpp"

namespace pedcc {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::general);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw validation_error("malformed number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw validation_error("malformed integer '" + s + "'");
    return v;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("failed to read '" + path + "'");
    return ss.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw io_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out.good()) throw io_error("failed to write '" + path + "'");
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            if (pos < text.size()) lines.push_back(text.substr(pos));
            break;
        }
        std::string line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        pos = nl + 1;
    }
    return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        std::size_t p = s.find(sep, pos);
        if (p == std::string::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, p - pos));
        pos = p + 1;
    }
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line_no, const std::string& msg) {
    throw validation_error("file '" + path + "': line " + std::to_string(line_no + 1) + ": " + msg);
}

// "key=value" token from a header line
std::string header_value(const std::string& token, const std::string& key, const std::string& path) {
    if (token.size() <= key.size() + 1 || token.compare(0, key.size(), key) != 0 || token[key.size()] != '=')
        throw validation_error("file '" + path + "': malformed header token '" + token + "', expected " + key +
                               "=<value>");
    return token.substr(key.size() + 1);
}

// Optional "# config <hex>" line; returns 0 when absent.
std::uint64_t parse_config_line(const std::vector<std::string>& lines, std::size_t& idx) {
    if (idx < lines.size() && lines[idx].rfind("# config ", 0) == 0) {
        std::string hex = lines[idx].substr(9);
        std::uint64_t h = 0;
        auto res = std::from_chars(hex.data(), hex.data() + hex.size(), h, 16);
        if (res.ec != std::errc{} || res.ptr != hex.data() + hex.size())
            throw validation_error("malformed config hash '" + hex + "'");
        ++idx;
        return h;
    }
    return 0;
}

void append_row(std::string& out, const double* v, int n) {
    for (int i = 0; i < n; ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    out += '\n';
}

} // namespace

void write_frame_file(const std::string& path, const centroid_frame& frame, std::uint64_t seed,
                      std::uint64_t config_hash) {
    std::string out = "# pedcc-frame v1 C=" + std::to_string(frame.num_classes) + " D=" +
                      std::to_string(frame.dim) + " seed=" + std::to_string(seed) + "\n# config " +
                      hash_hex(config_hash) + "\n";
    for (int i = 0; i < frame.num_classes; ++i) append_row(out, frame.centroid(i), frame.dim);
    write_file_bytes(path, out);
}

frame_file read_frame_file(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file_bytes(path));
    if (lines.empty()) throw validation_error("file '" + path + "': empty frame file");
    std::vector<std::string> tok = split(lines[0], ' ');
    if (tok.size() != 6 || tok[0] != "#" || tok[1] != "pedcc-frame" || tok[2] != "v1")
        throw validation_error("file '" + path + "': not a pedcc-frame v1 header");

    frame_file out;
    long long C = 0, D = 0;
    try {
        C = parse_int(header_value(tok[3], "C", path));
        D = parse_int(header_value(tok[4], "D", path));
        out.seed = static_cast<std::uint64_t>(parse_int(header_value(tok[5], "seed", path)));
    } catch (const validation_error& e) {
        throw validation_error("file '" + path + "': " + e.what());
    }
    if (C < 2 || D < 1 || C > D + 1)
        throw validation_error("file '" + path + "': invalid frame header dimensions C=" + std::to_string(C) +
                               " D=" + std::to_string(D));

    std::size_t idx = 1;
    try {
        out.config_hash = parse_config_line(lines, idx);
    } catch (const validation_error& e) {
        fail_at(path, idx, e.what());
    }

    out.frame.num_classes = static_cast<int>(C);
    out.frame.dim = static_cast<int>(D);
    out.frame.centroids.reserve(static_cast<std::size_t>(C) * D);
    for (long long i = 0; i < C; ++i, ++idx) {
        if (idx >= lines.size()) fail_at(path, idx, "missing centroid row");
        std::vector<std::string> vals = split(lines[idx], ',');
        if (vals.size() != static_cast<std::size_t>(D))
            fail_at(path, idx,
                    "expected " + std::to_string(D) + " values, got " + std::to_string(vals.size()));
        for (const std::string& v : vals) {
            try {
                out.frame.centroids.push_back(parse_double(v));
            } catch (const validation_error& e) {
                fail_at(path, idx, e.what());
            }
        }
    }
    if (idx != lines.size()) fail_at(path, idx, "unexpected trailing content");
    out.frame.span_basis = span_basis_of(out.frame.centroids, out.frame.num_classes, out.frame.dim);
    return out;
}

void write_embedding_file(const std::string& path, const embedding_set& set, std::uint64_t config_hash) {
    set.check_consistent();
    std::string out =
        "# pedcc-embed v1 D=" + std::to_string(set.dim) + "\n# config " + hash_hex(config_hash) + "\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += std::to_string(set.labels[i]);
        const double* v = set.row(i);
        for (int d = 0; d < set.dim; ++d) {
            out += ',';
            out += format_double(v[d]);
        }
        out += '\n';
    }
    write_file_bytes(path, out);
}

embedding_file read_embedding_file_full(const std::string& path, data_role role) {
    std::vector<std::string> lines = split_lines(read_file_bytes(path));
    if (lines.empty()) throw validation_error("file '" + path + "': empty embedding file");
    std::vector<std::string> tok = split(lines[0], ' ');
    if (tok.size() != 4 || tok[0] != "#" || tok[1] != "pedcc-embed" || tok[2] != "v1")
        throw validation_error("file '" + path + "': not a pedcc-embed v1 header");
    long long D = 0;
    try {
        D = parse_int(header_value(tok[3], "D", path));
    } catch (const validation_error& e) {
        throw validation_error("file '" + path + "': " + e.what());
    }
    if (D < 1) throw validation_error("file '" + path + "': invalid dimension D=" + std::to_string(D));

    embedding_file out;
    std::size_t idx = 1;
    try {
        out.config_hash = parse_config_line(lines, idx);
    } catch (const validation_error& e) {
        fail_at(path, idx, e.what());
    }

    embedding_set& set = out.set;
    set.dim = static_cast<int>(D);
    set.role = role;
    for (; idx < lines.size(); ++idx) {
        std::vector<std::string> vals = split(lines[idx], ',');
        if (vals.size() != static_cast<std::size_t>(D) + 1)
            fail_at(path, idx,
                    "expected label + " + std::to_string(D) + " values, got " + std::to_string(vals.size()) +
                        " fields");
        try {
            long long lab = parse_int(vals[0]);
            if (lab < -1) throw validation_error("label must be >= -1");
            set.labels.push_back(static_cast<int>(lab));
            for (long long d = 0; d < D; ++d) set.data.push_back(parse_double(vals[static_cast<std::size_t>(d) + 1]));
        } catch (const validation_error& e) {
            fail_at(path, idx, e.what());
        }
    }
    return out;
}

embedding_set read_embedding_file(const std::string& path, data_role role) {
    return read_embedding_file_full(path, role).set;
}

void write_score_file(const std::string& path, const std::vector<score_record>& records,
                      const std::vector<int>& labels, double omega, std::uint64_t config_hash) {
    if (records.size() != labels.size())
        throw validation_error("write_score_file: record and label counts differ");
    score_file f;
    f.omega = omega;
    f.config_hash = config_hash;
    f.rows.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        score_file_row r;
        r.index = static_cast<long long>(i);
        r.label = labels[i];
        r.cos_alpha = records[i].cos_alpha;
        r.s_beta = records[i].s_beta;
        r.s_pedcc = records[i].s_pedcc;
        r.s_d_pedcc = records[i].s_d_pedcc;
        f.rows.push_back(r);
    }
    write_score_file(path, f);
}

void write_score_file(const std::string& path, const score_file& file) {
    std::string out = "# pedcc-scores v1 omega=" + format_double(file.omega) + "\n# config " +
                      hash_hex(file.config_hash) + "\nindex,label,cos_alpha,s_beta,s_pedcc,s_d_pedcc\n";
    for (const score_file_row& r : file.rows) {
        out += std::to_string(r.index);
        out += ',';
        out += std::to_string(r.label);
        out += ',';
        out += format_double(r.cos_alpha);
        out += ',';
        out += format_double(r.s_beta);
        out += ',';
        out += format_double(r.s_pedcc);
        out += ',';
        out += format_double(r.s_d_pedcc);
        out += '\n';
    }
    write_file_bytes(path, out);
}

score_file read_score_file(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file_bytes(path));
    if (lines.empty()) throw validation_error("file '" + path + "': empty score file");
    std::vector<std::string> tok = split(lines[0], ' ');
    if (tok.size() != 4 || tok[0] != "#" || tok[1] != "pedcc-scores" || tok[2] != "v1")
        throw validation_error("file '" + path + "': not a pedcc-scores v1 header");
    score_file out;
    try {
        out.omega = parse_double(header_value(tok[3], "omega", path));
    } catch (const validation_error& e) {
        throw validation_error("file '" + path + "': " + e.what());
    }

    std::size_t idx = 1;
    try {
        out.config_hash = parse_config_line(lines, idx);
    } catch (const validation_error& e) {
        fail_at(path, idx, e.what());
    }
    if (idx >= lines.size() || lines[idx] != "index,label,cos_alpha,s_beta,s_pedcc,s_d_pedcc")
        fail_at(path, idx, "missing score column header");
    ++idx;

    for (; idx < lines.size(); ++idx) {
        std::vector<std::string> vals = split(lines[idx], ',');
        if (vals.size() != 6) fail_at(path, idx, "expected 6 fields, got " + std::to_string(vals.size()));
        try {
            score_file_row r;
            r.index = parse_int(vals[0]);
            r.label = static_cast<int>(parse_int(vals[1]));
            r.cos_alpha = parse_double(vals[2]);
            r.s_beta = parse_double(vals[3]);
            r.s_pedcc = parse_double(vals[4]);
            r.s_d_pedcc = parse_double(vals[5]);
            out.rows.push_back(r);
        } catch (const validation_error& e) {
            fail_at(path, idx, e.what());
        }
    }
    return out;
}

void write_report_file(const std::string& path, const report_file& file) {
    std::string out = "# pedcc-report v1\n# config " + hash_hex(file.config_hash) +
                      "\nmethod,auroc,tnr_at_tpr95,threshold,omega,n_id,n_ood\n";
    for (const report_row& r : file.rows) {
        out += r.method;
        out += ',';
        out += format_double(r.auroc);
        out += ',';
        out += format_double(r.tnr_at_tpr95);
        out += ',';
        out += format_double(r.threshold);
        out += ',';
        if (r.has_omega) out += format_double(r.omega);
        out += ',';
        out += std::to_string(r.n_id);
        out += ',';
        out += std::to_string(r.n_ood);
        out += '\n';
    }
    if (file.train_accuracy) out += "# train_accuracy=" + format_double(*file.train_accuracy) + "\n";
    if (file.variances) {
        out += "# var_s_alpha=" + format_double(file.variances->var_s_alpha) + "\n";
        out += "# var_s_beta=" + format_double(file.variances->var_s_beta) + "\n";
    }
    write_file_bytes(path, out);
}

report_file read_report_file(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file_bytes(path));
    if (lines.empty() || lines[0] != "# pedcc-report v1")
        throw validation_error("file '" + path + "': not a pedcc-report v1 header");
    report_file out;
    std::size_t idx = 1;
    try {
        out.config_hash = parse_config_line(lines, idx);
    } catch (const validation_error& e) {
        fail_at(path, idx, e.what());
    }
    if (idx >= lines.size() || lines[idx] != "method,auroc,tnr_at_tpr95,threshold,omega,n_id,n_ood")
        fail_at(path, idx, "missing report column header");
    ++idx;

    double var_a = 0.0, var_b = 0.0;
    bool have_a = false, have_b = false;
    for (; idx < lines.size(); ++idx) {
        const std::string& line = lines[idx];
        try {
            if (line.rfind("# train_accuracy=", 0) == 0) {
                out.train_accuracy = parse_double(line.substr(17));
                continue;
            }
            if (line.rfind("# var_s_alpha=", 0) == 0) {
                var_a = parse_double(line.substr(14));
                have_a = true;
                continue;
            }
            if (line.rfind("# var_s_beta=", 0) == 0) {
                var_b = parse_double(line.substr(13));
                have_b = true;
                continue;
            }
            std::vector<std::string> vals = split(line, ',');
            if (vals.size() != 7) fail_at(path, idx, "expected 7 fields, got " + std::to_string(vals.size()));
            report_row r;
            r.method = vals[0];
            r.auroc = parse_double(vals[1]);
            r.tnr_at_tpr95 = parse_double(vals[2]);
            r.threshold = parse_double(vals[3]);
            if (!vals[4].empty()) {
                r.has_omega = true;
                r.omega = parse_double(vals[4]);
            }
            r.n_id = parse_int(vals[5]);
            r.n_ood = parse_int(vals[6]);
            out.rows.push_back(std::move(r));
        } catch (const validation_error& e) {
            fail_at(path, idx, e.what());
        }
    }
    if (have_a != have_b)
        throw validation_error("file '" + path + "': variance comment lines must appear as a pair");
    if (have_a) out.variances = variance_pair{var_a, var_b};
    return out;
}

void write_checkpoint(const std::string& path, const mlp& model, std::uint64_t config_hash) {
    std::string out = "# pedcc-net v1\n# config " + hash_hex(config_hash) + "\n";
    out += "input_dim " + std::to_string(model.spec.input_dim) + "\n";
    out += "feature_dim " + std::to_string(model.spec.feature_dim) + "\n";
    out += std::string("activation ") +
           (model.spec.activation == activation_kind::relu ? "relu" : "tanh") + "\n";
    out += "seed " + std::to_string(model.spec.seed) + "\n";
    out += "layers " + std::to_string(model.layers.size()) + "\n";
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const mlp::layer& L = model.layers[k];
        out += "layer " + std::to_string(k) + " " + std::to_string(L.out) + " " + std::to_string(L.in) + "\n";
        for (int o = 0; o < L.out; ++o) append_row(out, L.W.data() + static_cast<std::size_t>(o) * L.in, L.in);
        out += "bias ";
        std::string tmp;
        append_row(tmp, L.b.data(), L.out);
        out += tmp;
    }
    write_file_bytes(path, out);
}

checkpoint_file read_checkpoint(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file_bytes(path));
    if (lines.empty() || lines[0] != "# pedcc-net v1")
        throw validation_error("file '" + path + "': not a pedcc-net v1 header");
    checkpoint_file out;
    std::size_t idx = 1;
    try {
        out.config_hash = parse_config_line(lines, idx);
    } catch (const validation_error& e) {
        fail_at(path, idx, e.what());
    }

    auto expect_kv = [&](const char* key) -> std::string {
        if (idx >= lines.size()) fail_at(path, idx, std::string("missing '") + key + "' line");
        std::vector<std::string> tok = split(lines[idx], ' ');
        if (tok.size() != 2 || tok[0] != key)
            fail_at(path, idx, std::string("expected '") + key + " <value>'");
        ++idx;
        return tok[1];
    };

    mlp& m = out.model;
    try {
        m.spec.input_dim = static_cast<int>(parse_int(expect_kv("input_dim")));
        m.spec.feature_dim = static_cast<int>(parse_int(expect_kv("feature_dim")));
        std::string act = expect_kv("activation");
        if (act == "relu")
            m.spec.activation = activation_kind::relu;
        else if (act == "tanh")
            m.spec.activation = activation_kind::tanh;
        else
            throw validation_error("unknown activation '" + act + "'");
        m.spec.seed = static_cast<std::uint64_t>(parse_int(expect_kv("seed")));
        long long layer_count = parse_int(expect_kv("layers"));
        if (layer_count < 1) throw validation_error("checkpoint must have at least one layer");

        for (long long k = 0; k < layer_count; ++k) {
            if (idx >= lines.size()) fail_at(path, idx, "missing layer header");
            std::vector<std::string> tok = split(lines[idx], ' ');
            if (tok.size() != 4 || tok[0] != "layer") fail_at(path, idx, "expected 'layer <k> <out> <in>'");
            if (parse_int(tok[1]) != k) fail_at(path, idx, "layer index out of order");
            mlp::layer L;
            L.out = static_cast<int>(parse_int(tok[2]));
            L.in = static_cast<int>(parse_int(tok[3]));
            if (L.out < 1 || L.in < 1) fail_at(path, idx, "layer shape must be positive");
            ++idx;
            for (int o = 0; o < L.out; ++o, ++idx) {
                if (idx >= lines.size()) fail_at(path, idx, "missing weight row");
                std::vector<std::string> vals = split(lines[idx], ',');
                if (vals.size() != static_cast<std::size_t>(L.in))
                    fail_at(path, idx,
                            "expected " + std::to_string(L.in) + " weights, got " + std::to_string(vals.size()));
                for (const std::string& v : vals) L.W.push_back(parse_double(v));
            }
            if (idx >= lines.size() || lines[idx].rfind("bias ", 0) != 0) fail_at(path, idx, "missing bias line");
            std::vector<std::string> vals = split(lines[idx].substr(5), ',');
            if (vals.size() != static_cast<std::size_t>(L.out))
                fail_at(path, idx,
                        "expected " + std::to_string(L.out) + " biases, got " + std::to_string(vals.size()));
            for (const std::string& v : vals) L.b.push_back(parse_double(v));
            ++idx;
            m.layers.push_back(std::move(L));
        }
    } catch (const validation_error& e) {
        std::string msg = e.what();
        if (msg.rfind("file '", 0) == 0) throw;
        fail_at(path, idx, msg);
    }
    if (idx != lines.size()) fail_at(path, idx, "unexpected trailing content");

    if (m.layers.front().in != m.spec.input_dim)
        throw validation_error("file '" + path + "': first layer input " + std::to_string(m.layers.front().in) +
                               " does not match input_dim " + std::to_string(m.spec.input_dim));
    if (m.layers.back().out != m.spec.feature_dim)
        throw validation_error("file '" + path + "': last layer output " + std::to_string(m.layers.back().out) +
                               " does not match feature_dim " + std::to_string(m.spec.feature_dim));
    for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) {
        if (m.layers[k].out != m.layers[k + 1].in)
            throw validation_error("file '" + path + "': layer " + std::to_string(k + 1) +
                                   " input does not match previous layer output");
        m.spec.hidden_dims.push_back(m.layers[k].out);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(i + 1) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw validation_error("config line " + std::to_string(i + 1) + ": empty key");
        for (const auto& kv : out)
            if (kv.first == key)
                throw validation_error("config line " + std::to_string(i + 1) + ": duplicate key '" + key + "'");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    return parse_config_text(read_file_bytes(path));
}

} // namespace pedcc
