#include "pedcc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pedcc/errors.hpp"

namespace pedcc {

namespace {

void check_scores(const std::vector<double>& v, const char* who) {
    if (v.empty()) throw validation_error(std::string(who) + ": empty score list");
    for (double x : v)
        if (!std::isfinite(x)) throw validation_error(std::string(who) + ": non-finite score");
}

std::vector<double> extract(const std::vector<score_record>& recs, double (*get)(const score_record&)) {
    std::vector<double> out(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) out[i] = get(recs[i]);
    return out;
}

} // namespace

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
    check_scores(id_scores, "auroc id");
    check_scores(ood_scores, "auroc ood");
    const std::size_t n1 = id_scores.size(), n0 = ood_scores.size();

    std::vector<std::pair<double, int>> all;
    all.reserve(n1 + n0);
    for (double v : id_scores) all.emplace_back(v, 1);
    for (double v : ood_scores) all.emplace_back(v, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // midranks over runs of equal values; half-integers, exact in double
    double rank_sum_id = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j + 1 < all.size() && all[j + 1].first == all[i].first) ++j;
        const double midrank = 0.5 * (double(i + 1) + double(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (all[k].second) rank_sum_id += midrank;
        i = j + 1;
    }
    const double u = rank_sum_id - 0.5 * double(n1) * double(n1 + 1);
    return u / (double(n1) * double(n0));
}

tnr_result tnr_at_tpr(const std::vector<double>& id_scores, const std::vector<double>& ood_scores,
                      double tpr_target) {
    check_scores(id_scores, "tnr_at_tpr id");
    check_scores(ood_scores, "tnr_at_tpr ood");
    if (!(tpr_target > 0.0 && tpr_target <= 1.0))
        throw validation_error("tnr_at_tpr: tpr_target must be in (0, 1]");

    std::vector<double> sorted(id_scores);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const std::size_t n = sorted.size();

    double threshold = sorted.back();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        if (double(j + 1) / double(n) >= tpr_target) {
            threshold = sorted[i];
            break;
        }
        i = j + 1;
    }

    std::size_t below = 0;
    for (double v : ood_scores)
        if (v < threshold) ++below;
    return {double(below) / double(ood_scores.size()), threshold};
}

std::vector<double> default_omega_grid() {
    std::vector<double> grid;
    grid.push_back(0.0);
    for (int k = 0; k < 25; ++k) grid.push_back(std::pow(10.0, -3.0 + 6.0 * k / 24.0));
    grid[1] = 1e-3;
    grid[25] = 1e3;
    return grid;
}

tune_result tune_omega(const std::vector<score_record>& id_val, const std::vector<score_record>& ood_val,
                       const std::vector<double>& grid) {
    if (id_val.empty() || ood_val.empty()) throw validation_error("tune_omega: empty score set");
    if (grid.empty()) throw validation_error("tune_omega: empty grid");
    std::vector<double> g(grid);
    std::sort(g.begin(), g.end());
    for (double w : g)
        if (!(w >= 0.0) || !std::isfinite(w)) throw validation_error("tune_omega: grid values must be >= 0");
    if (std::find(g.begin(), g.end(), 0.0) == g.end())
        throw validation_error("tune_omega: grid must contain 0 (endpoint rule)");
    if (g.back() < 1e3)
        throw validation_error("tune_omega: grid must contain a value >= 1e3 (endpoint rule)");

    std::vector<double> sid(id_val.size()), sood(ood_val.size());
    tune_result best;
    bool first = true;
    for (double w : g) {
        for (std::size_t i = 0; i < id_val.size(); ++i) sid[i] = id_val[i].s_alpha + w * id_val[i].s_beta;
        for (std::size_t i = 0; i < ood_val.size(); ++i) sood[i] = ood_val[i].s_alpha + w * ood_val[i].s_beta;
        tnr_result r = tnr_at_tpr(sid, sood);
        if (first || r.tnr > best.tnr) {
            best = {w, r.tnr, r.threshold};
            first = false;
        }
    }
    return best;
}

std::vector<double> baseline_max_softmax(const std::vector<double>& vecs, int num_classes,
                                         double temperature) {
    if (num_classes < 1) throw validation_error("baseline_max_softmax: need at least 1 class");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw validation_error("baseline_max_softmax: temperature must be positive and finite");
    if (vecs.size() % num_classes != 0)
        throw validation_error("baseline_max_softmax: input size is not a multiple of the class count");
    for (double v : vecs)
        if (!std::isfinite(v)) throw validation_error("baseline_max_softmax: non-finite input");

    const std::size_t n = vecs.size() / num_classes;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = vecs.data() + i * num_classes;
        double vmax = row[0];
        for (int j = 1; j < num_classes; ++j) vmax = std::max(vmax, row[j]);
        double denom = 0.0;
        for (int j = 0; j < num_classes; ++j) denom += std::exp((row[j] - vmax) / temperature);
        out[i] = 1.0 / denom;
    }
    return out;
}

variance_pair variance_report(const std::vector<score_record>& records) {
    if (records.size() < 2) throw validation_error("variance_report: need at least 2 records");
    variance_pair out;
    double ma = 0.0, mb = 0.0;
    for (const score_record& r : records) {
        ma += r.s_alpha;
        mb += r.s_beta;
    }
    ma /= double(records.size());
    mb /= double(records.size());
    double sa = 0.0, sb = 0.0;
    for (const score_record& r : records) {
        sa += (r.s_alpha - ma) * (r.s_alpha - ma);
        sb += (r.s_beta - mb) * (r.s_beta - mb);
    }
    out.var_s_alpha = sa / double(records.size() - 1);
    out.var_s_beta = sb / double(records.size() - 1);
    return out;
}

std::vector<report_row> ablation_grid(const std::vector<score_record>& id, const std::vector<score_record>& ood,
                                      double omega) {
    if (id.empty() || ood.empty()) throw validation_error("ablation_grid: empty score set");

    struct variant {
        const char* name;
        double (*get)(const score_record&);
        bool with_omega;
    };
    // s_d_pedcc is recomputed from s_alpha and s_beta at the omega given
    // here, so the grid does not depend on the omega the records were
    // scored with.
    static const variant variants[] = {
        {"s_alpha", [](const score_record& r) { return r.s_alpha; }, false},
        {"s_beta", [](const score_record& r) { return r.s_beta; }, false},
        {"s_alpha*s_beta", [](const score_record& r) { return r.s_alpha * r.s_beta; }, false},
        {"s_alpha+s_beta", [](const score_record& r) { return r.s_alpha + r.s_beta; }, false},
        {"s_pedcc", [](const score_record& r) { return r.s_pedcc; }, false},
        {"s_d_pedcc", nullptr, true},
    };

    std::vector<report_row> rows;
    for (const variant& v : variants) {
        std::vector<double> sid, sood;
        if (v.with_omega) {
            sid.resize(id.size());
            sood.resize(ood.size());
            for (std::size_t i = 0; i < id.size(); ++i) sid[i] = id[i].s_alpha + omega * id[i].s_beta;
            for (std::size_t i = 0; i < ood.size(); ++i) sood[i] = ood[i].s_alpha + omega * ood[i].s_beta;
        } else {
            sid = extract(id, v.get);
            sood = extract(ood, v.get);
        }
        report_row row;
        row.method = v.name;
        row.auroc = auroc(sid, sood);
        tnr_result t = tnr_at_tpr(sid, sood);
        row.tnr_at_tpr95 = t.tnr;
        row.threshold = t.threshold;
        row.has_omega = v.with_omega;
        row.omega = v.with_omega ? omega : 0.0;
        row.n_id = static_cast<long long>(id.size());
        row.n_ood = static_cast<long long>(ood.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace pedcc
