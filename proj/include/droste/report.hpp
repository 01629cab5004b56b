#pragma once

// Experiment records (RFC-4180 CSV) and the summary tables: mean scores per
// backend with metric polarity arrows, and one-way ANOVA per metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "droste/error.hpp"
#include "droste/stats.hpp"

namespace droste {

struct MetricInfo {
    std::string name;
    bool higher_is_better = true;
};

inline MetricInfo builtin_metric(const std::string& name) {
    if (name == "brisque") return {"brisque", false};
    if (name == "dom") return {"dom", true};
    throw ConfigError("unknown metric '" + name + "'");
}

struct ExperimentRecord {
    int image_index = 0;
    std::string image;  // label: file name or straight_<k>
    int mask_index = 0;
    std::uint64_t mask_seed = 0;
    std::string mask_class;  // pure_inpaint | contains_outpaint
    double coverage = 0.0;
    std::string backend;
    std::string status = "ok";  // ok | failed
    std::string error;
    std::vector<std::optional<double>> scores;  // parallel to the metric list
    double wall_time = 0.0;                     // kept out of the records CSV
};

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Round-trips exactly through strtod.
inline std::string exact_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << quote(cells[i]);
    os << "\r\n";
}

/// Parses RFC-4180 text: quoted fields, doubled quotes, CRLF or LF endings.
inline std::vector<std::vector<std::string>> parse(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    auto end_row = [&] {
        row.push_back(field);
        rows.push_back(row);
        row.clear();
        field.clear();
        any = false;
    };
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
            any = true;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            end_row();
        } else if (c == '\n') {
            end_row();
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ConfigError("csv: unterminated quoted field");
    if (any || !field.empty()) end_row();
    return rows;
}

}  // namespace csv

inline std::vector<std::string> record_header(const std::vector<MetricInfo>& metrics) {
    std::vector<std::string> h = {"image_index", "image",  "mask_index", "mask_seed", "mask_class",
                                  "coverage",    "backend", "status",     "error"};
    for (const auto& m : metrics) h.push_back(m.name);
    return h;
}

inline void write_records(std::ostream& os, const std::vector<ExperimentRecord>& recs,
                          const std::vector<MetricInfo>& metrics) {
    csv::write_row(os, record_header(metrics));
    for (const auto& r : recs) {
        std::vector<std::string> row = {std::to_string(r.image_index), r.image, std::to_string(r.mask_index),
                                        std::to_string(r.mask_seed),   r.mask_class, csv::exact_number(r.coverage),
                                        r.backend,                      r.status,     r.error};
        for (const auto& s : r.scores) row.push_back(s ? csv::exact_number(*s) : "");
        csv::write_row(os, row);
    }
}

inline void write_timings(std::ostream& os, const std::vector<ExperimentRecord>& recs) {
    csv::write_row(os, {"image_index", "mask_index", "backend", "wall_time_s"});
    for (const auto& r : recs)
        csv::write_row(os, {std::to_string(r.image_index), std::to_string(r.mask_index), r.backend,
                            csv::number(r.wall_time)});
}

/// Reads a records CSV. Metric columns are everything after "error"; their
/// polarity comes from `known` when listed there, else higher is better.
inline std::vector<ExperimentRecord> read_records(std::istream& in, std::vector<MetricInfo>& metrics,
                                                  const std::map<std::string, bool>& known = {}) {
    const auto rows = csv::parse(in);
    if (rows.empty()) throw ConfigError("records: empty file");
    const auto& h = rows[0];
    const std::vector<std::string> fixed = record_header({});
    if (h.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), h.begin())) {
        throw ConfigError("records: unexpected header");
    }
    metrics.clear();
    for (std::size_t i = fixed.size(); i < h.size(); ++i) {
        auto it = known.find(h[i]);
        bool hib = true;
        if (it != known.end()) hib = it->second;
        else if (h[i] == "brisque") hib = false;
        metrics.push_back({h[i], hib});
    }
    std::vector<ExperimentRecord> recs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != h.size()) throw ConfigError("records: row " + std::to_string(r) + " has wrong width");
        try {
            ExperimentRecord e;
            e.image_index = std::stoi(row[0]);
            e.image = row[1];
            e.mask_index = std::stoi(row[2]);
            e.mask_seed = std::stoull(row[3]);
            e.mask_class = row[4];
            e.coverage = std::stod(row[5]);
            e.backend = row[6];
            e.status = row[7];
            e.error = row[8];
            for (std::size_t i = fixed.size(); i < h.size(); ++i)
                e.scores.push_back(row[i].empty() ? std::nullopt : std::optional<double>(std::stod(row[i])));
            recs.push_back(std::move(e));
        } catch (const std::logic_error&) {
            throw ConfigError("records: malformed row " + std::to_string(r));
        }
    }
    return recs;
}

// ---------------------------------------------------------------------------
// Summary tables

struct MeanCell {
    std::size_t n = 0;
    double mean = NAN, stddev = NAN, cv = NAN;
};

struct MeanTable {
    std::string subset;  // "all", "pure_inpaint", "contains_outpaint"
    std::vector<std::string> backends;
    std::vector<MetricInfo> metrics;
    std::vector<std::vector<MeanCell>> cells;  // [backend][metric]
};

struct AnovaRow {
    MetricInfo metric;
    std::optional<stats::AnovaResult> result;
    std::string note;  // why it is missing
};

namespace detail {

inline std::vector<std::string> backend_order(const std::vector<ExperimentRecord>& recs) {
    std::vector<std::string> order;
    for (const auto& r : recs)
        if (std::find(order.begin(), order.end(), r.backend) == order.end()) order.push_back(r.backend);
    return order;
}

inline std::vector<double> series(const std::vector<ExperimentRecord>& recs, const std::string& backend,
                                  std::size_t metric, const std::string& subset) {
    std::vector<double> v;
    for (const auto& r : recs) {
        if (r.backend != backend || r.status != "ok") continue;
        if (subset != "all" && r.mask_class != subset) continue;
        if (metric < r.scores.size() && r.scores[metric] && std::isfinite(*r.scores[metric]))
            v.push_back(*r.scores[metric]);
    }
    return v;
}

inline std::string fmt(double v, int prec = 4) {
    if (!std::isfinite(v)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline std::string arrow(const MetricInfo& m) { return m.higher_is_better ? "↑" : "↓"; }

inline std::string display_name(const std::string& metric) {
    if (metric == "brisque") return "Brisque";
    if (metric == "dom") return "DOM";
    return metric;
}

}  // namespace detail

inline MeanTable mean_table(const std::vector<ExperimentRecord>& recs, const std::vector<MetricInfo>& metrics,
                            const std::string& subset = "all") {
    MeanTable t;
    t.subset = subset;
    t.backends = detail::backend_order(recs);
    t.metrics = metrics;
    for (const auto& b : t.backends) {
        std::vector<MeanCell> row;
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            const auto v = detail::series(recs, b, m, subset);
            MeanCell c;
            c.n = v.size();
            if (!v.empty()) c.mean = stats::mean(v);
            if (v.size() >= 2) {
                c.stddev = stats::stddev(v);
                if (c.mean != 0.0) c.cv = stats::coefficient_of_variation(v);
            }
            row.push_back(c);
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

inline std::vector<AnovaRow> anova_table(const std::vector<ExperimentRecord>& recs,
                                         const std::vector<MetricInfo>& metrics, const std::string& subset = "all") {
    std::vector<AnovaRow> rows;
    const auto backends = detail::backend_order(recs);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        AnovaRow row{metrics[m], std::nullopt, {}};
        std::vector<std::vector<double>> groups;
        for (const auto& b : backends) groups.push_back(detail::series(recs, b, m, subset));
        if (groups.size() < 2) {
            row.note = "needs >= 2 backends";
        } else {
            try {
                row.result = stats::anova_oneway(groups);
            } catch (const Error& e) {
                row.note = e.what();
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Index of the best backend in a metric column, by polarity; -1 if none.
inline int best_backend(const MeanTable& t, std::size_t metric) {
    int best = -1;
    for (std::size_t b = 0; b < t.backends.size(); ++b) {
        const double v = t.cells[b][metric].mean;
        if (!std::isfinite(v)) continue;
        if (best < 0) {
            best = int(b);
            continue;
        }
        const double cur = t.cells[best][metric].mean;
        if (t.metrics[metric].higher_is_better ? v > cur : v < cur) best = int(b);
    }
    return best;
}

/// Method | <metric> ↑/↓ ... ; best mean per column in bold.
inline void render_mean_markdown(std::ostream& os, const MeanTable& t) {
    os << "| Method |";
    for (const auto& m : t.metrics) os << ' ' << detail::display_name(m.name) << ' ' << detail::arrow(m) << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < t.metrics.size(); ++i) os << "---:|";
    os << '\n';
    for (std::size_t b = 0; b < t.backends.size(); ++b) {
        os << "| " << t.backends[b] << " |";
        for (std::size_t m = 0; m < t.metrics.size(); ++m) {
            const std::string v = detail::fmt(t.cells[b][m].mean);
            os << ' ' << (best_backend(t, m) == int(b) ? "**" + v + "**" : v) << " |";
        }
        os << '\n';
    }
}

inline void render_spread_markdown(std::ostream& os, const MeanTable& t) {
    os << "| Method | Metric | n | mean | std | CV % |\n|---|---|---:|---:|---:|---:|\n";
    for (std::size_t b = 0; b < t.backends.size(); ++b)
        for (std::size_t m = 0; m < t.metrics.size(); ++m) {
            const auto& c = t.cells[b][m];
            os << "| " << t.backends[b] << " | " << detail::display_name(t.metrics[m].name) << " | " << c.n << " | "
               << detail::fmt(c.mean) << " | " << detail::fmt(c.stddev) << " | " << detail::fmt(c.cv, 2) << " |\n";
        }
}

/// Method | Fvalue | Fcrit | RH0, one row per metric.
inline void render_anova_markdown(std::ostream& os, const std::vector<AnovaRow>& rows) {
    os << "| Method | Fvalue | Fcrit | RH0 |\n|---|---:|---:|:---:|\n";
    for (const auto& r : rows) {
        os << "| " << detail::display_name(r.metric.name) << " | ";
        if (r.result) {
            os << detail::fmt(r.result->f, 2) << " | " << detail::fmt(r.result->f_crit, 2) << " | "
               << (r.result->reject ? "yes" : "no") << " |\n";
        } else {
            os << "n/a | n/a | n/a (" << r.note << ") |\n";
        }
    }
}

inline void render_mean_csv(std::ostream& os, const MeanTable& t) {
    std::vector<std::string> h = {"subset", "method"};
    for (const auto& m : t.metrics) h.push_back(m.name + (m.higher_is_better ? "_higher_better" : "_lower_better"));
    csv::write_row(os, h);
    for (std::size_t b = 0; b < t.backends.size(); ++b) {
        std::vector<std::string> row = {t.subset, t.backends[b]};
        for (std::size_t m = 0; m < t.metrics.size(); ++m)
            row.push_back(std::isfinite(t.cells[b][m].mean) ? csv::number(t.cells[b][m].mean) : "");
        csv::write_row(os, row);
    }
}

inline void render_anova_csv(std::ostream& os, const std::vector<AnovaRow>& rows, const std::string& subset) {
    csv::write_row(os, {"subset", "metric", "F", "df1", "df2", "Fcrit_05", "p_value", "reject_h0"});
    for (const auto& r : rows) {
        if (r.result) {
            csv::write_row(os, {subset, r.metric.name, csv::number(r.result->f), std::to_string(r.result->df1),
                                std::to_string(r.result->df2), csv::number(r.result->f_crit),
                                csv::number(r.result->p_value), r.result->reject ? "yes" : "no"});
        } else {
            csv::write_row(os, {subset, r.metric.name, "", "", "", "", "", ""});
        }
    }
}

/// Full Markdown report: pooled and per-subset means, spread, pairwise
/// differences and ANOVA.
inline void render_report(std::ostream& os, const std::vector<ExperimentRecord>& recs,
                          const std::vector<MetricInfo>& metrics) {
    std::size_t failed = 0;
    for (const auto& r : recs) failed += r.status != "ok";
    os << "# Inpainting evaluation\n\n";
    os << recs.size() << " records, " << failed << " failed.\n\n";
    for (const std::string subset : {"all", "pure_inpaint", "contains_outpaint"}) {
        std::size_t n = 0;
        for (const auto& r : recs) n += subset == "all" || r.mask_class == subset;
        os << "## Mean scores (" << subset << ", " << n << " records)\n\n";
        if (n == 0) {
            os << "No records.\n\n";
            continue;
        }
        const MeanTable t = mean_table(recs, metrics, subset);
        render_mean_markdown(os, t);
        os << '\n';
        if (subset == "all") {
            render_spread_markdown(os, t);
            os << '\n';
            if (t.backends.size() >= 2) {
                os << "### Pairwise mean differences (row minus column)\n\n";
                for (std::size_t m = 0; m < metrics.size(); ++m) {
                    os << "**" << detail::display_name(metrics[m].name) << "**\n\n| |";
                    for (const auto& b : t.backends) os << ' ' << b << " |";
                    os << "\n|---|";
                    for (std::size_t i = 0; i < t.backends.size(); ++i) os << "---:|";
                    os << '\n';
                    for (std::size_t a = 0; a < t.backends.size(); ++a) {
                        os << "| " << t.backends[a] << " |";
                        for (std::size_t b = 0; b < t.backends.size(); ++b)
                            os << ' ' << detail::fmt(t.cells[a][m].mean - t.cells[b][m].mean) << " |";
                        os << '\n';
                    }
                    os << '\n';
                }
            }
        }
        if (t.backends.size() >= 2) {
            os << "### ANOVA (" << subset << ")\n\n";
            render_anova_markdown(os, anova_table(recs, metrics, subset));
            os << '\n';
        }
    }
}

}  // namespace droste
