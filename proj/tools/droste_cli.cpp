// droste: unroll / inpaint / rewarp Droste-warped images, and evaluate inpainting backends.
//
// Exit codes: 0 success, 1 internal error, 2 user/config error, 3 backend error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "droste/complex_map.hpp"
#include "droste/config.hpp"
#include "droste/image_io.hpp"
#include "droste/inpaint.hpp"
#include "droste/iqa.hpp"
#include "droste/masking.hpp"
#include "droste/pipeline.hpp"
#include "droste/report.hpp"
#include "droste/stats.hpp"
#include "droste/straight_io.hpp"
#include "droste/warp.hpp"

namespace fs = std::filesystem;
using namespace droste;

namespace {

void info(const std::string& msg) { std::cerr << "droste: " << msg << '\n'; }

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> backends;
    std::vector<std::string> metrics;
    std::optional<int> workers;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("-c,--config", a.config, "JSON configuration file");
    app->add_option("--seed", a.seed, "global seed");
    app->add_option("--out-dir", a.out_dir, "output directory");
    app->add_option("--backend", a.backends, "backend name (built-in or declared in the config); repeatable");
    app->add_option("--metrics", a.metrics, "metrics: brisque, dom")->delimiter(',');
    app->add_option("--workers", a.workers, "parallel experiment cells (0 = hardware threads)");
}

PipelineConfig resolve_config(const CommonArgs& a) {
    PipelineConfig c = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    if (a.seed) c.seed = *a.seed;
    if (!a.out_dir.empty()) c.output_dir = a.out_dir;
    if (!a.metrics.empty()) {
        for (const auto& m : a.metrics) builtin_metric(m);
        c.metrics = a.metrics;
    }
    if (a.workers) {
        if (*a.workers < 0) throw ConfigError("--workers must be >= 0");
        c.workers = *a.workers == 0 ? int(std::max(1u, std::thread::hardware_concurrency())) : *a.workers;
    }
    if (!a.backends.empty()) {
        std::vector<BackendDescriptor> chosen;
        for (const auto& name : a.backends) {
            auto it = std::find_if(c.backends.begin(), c.backends.end(),
                                   [&](const BackendDescriptor& d) { return d.name == name; });
            chosen.push_back(it != c.backends.end() ? *it : builtin_backend(name));
        }
        c.backends = chosen;
    }
    return c;
}

void require_backends(const PipelineConfig& c) {
    if (c.backends.empty()) throw ConfigError("no backend selected (use --backend or the config's backends list)");
}

RasterImage load_source(const PipelineConfig& c) {
    if (c.source.empty()) throw ConfigError("no source image (config key 'source' or --source)");
    return io::read_image(c.source);
}

StraightSet obtain_straight(const PipelineConfig& c, std::optional<RasterImage>* source_out = nullptr) {
    if (!c.straight_dir.empty()) {
        StraightSet set = load_straight_set(c.straight_dir);
        if (source_out && !c.source.empty()) *source_out = io::read_image(c.source);
        return set;
    }
    RasterImage src = load_source(c);
    StraightSet set = unroll(src, c.droste_params(src.width(), src.height()), c.sampler, c.unroll);
    if (source_out) *source_out = std::move(src);
    return set;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << s;
}

// ---------------------------------------------------------------------------

int cmd_unroll(const PipelineConfig& c) {
    RasterImage src = load_source(c);
    const DrosteParams p = c.droste_params(src.width(), src.height());
    StraightSet set = unroll(src, p, c.sampler, c.unroll);
    const fs::path dir = c.output_dir / "straight";
    save_straight_set(set, dir);
    nlohmann::json m;
    m["source"] = c.source.string();
    m["straight_dir"] = "straight";
    m["images"] = nlohmann::json::array();
    for (int k = 0; k < p.branch_count; ++k) {
        m["images"].push_back({{"index", k},
                               {"image", "straight/straight_" + std::to_string(k) + ".png"},
                               {"blank", "straight/blank_" + std::to_string(k) + ".png"},
                               {"blank_pixels", set.blank_masks[k].hole_count()}});
        if (set.blank_masks[k].empty_hole()) info("warning: straight view " + std::to_string(k) + " has no blank region");
    }
    m["droste"] = to_json(p);
    write_text(c.output_dir / "manifest.json", m.dump(2) + "\n");
    info("wrote " + std::to_string(p.branch_count) + " straight views to " + dir.string());
    return 0;
}

int cmd_rewarp(const PipelineConfig& c) {
    if (c.straight_dir.empty()) throw ConfigError("rewarp needs a straight set directory (--straight)");
    const StraightSet set = load_straight_set(c.straight_dir);
    const RasterImage out = rewarp(set, c.sampler, c.rewarp);
    fs::create_directories(c.output_dir);
    io::write_png(c.output_dir / "rewarped.png", out);
    info("wrote " + (c.output_dir / "rewarped.png").string());
    return 0;
}

int cmd_mask_gen(const PipelineConfig& c, int width, int height) {
    fs::create_directories(c.output_dir);
    std::ofstream idx(c.output_dir / "masks.csv", std::ios::binary);
    csv::write_row(idx, {"mask_index", "file", "mask_seed", "coverage", "mask_class"});
    for (int m = 0; m < c.mask_count; ++m) {
        MaskSpec ms = c.masks;
        ms.seed = derive_mask_seed(c.seed, 0, std::uint64_t(m));
        const Mask mask = random_mask(ms, width, height);
        char name[32];
        std::snprintf(name, sizeof name, "mask_%03d.png", m);
        io::write_mask(c.output_dir / name, mask);
        csv::write_row(idx, {std::to_string(m), name, std::to_string(ms.seed), csv::number(mask.coverage()),
                             to_string(classify(mask))});
    }
    info("wrote " + std::to_string(c.mask_count) + " masks to " + c.output_dir.string());
    return 0;
}

int cmd_inpaint(const PipelineConfig& c, const std::string& image, const std::string& mask) {
    require_backends(c);
    if (image.empty() || mask.empty()) throw ConfigError("inpaint needs --image and --mask");
    const RasterImage img = io::read_image(image);
    const Mask m = io::read_mask(mask);
    check_same_size(img, m);
    fs::create_directories(c.output_dir);
    for (const auto& b : c.backends) {
        const InpaintResult r = run_backend(b, img, m, c.output_dir / ("work_" + b.name));
        const fs::path out = c.output_dir / ("inpainted_" + b.name + ".png");
        io::write_png(out, r.image);
        info(b.name + ": " + out.string() + " (" + csv::number(r.wall_time) + " s)");
    }
    return 0;
}

int cmd_restore(const PipelineConfig& c) {
    require_backends(c);
    std::optional<RasterImage> source;
    const StraightSet set = obtain_straight(c, &source);
    fs::create_directories(c.output_dir);
    const bool suffix = c.backends.size() > 1;
    for (const auto& b : c.backends) {
        const std::string tag = suffix ? "_" + b.name : "";
        RestoreResult r;
        try {
            r = restore(set, b, c.sampler, c.rewarp, c.output_dir / "work");
        } catch (const Error&) {
            info("backend " + b.name + " failed; partial artifacts kept in " + (c.output_dir / "work").string());
            throw;
        }
        save_straight_set(r.filled, c.output_dir / ("filled" + tag));
        io::write_png(c.output_dir / ("restored" + tag + ".png"), r.restored);
        const RasterImage& left = source ? *source : rewarp(set, c.sampler, c.rewarp);
        io::write_png(c.output_dir / ("comparison" + tag + ".png"), side_by_side(left, r.restored));
        info(b.name + ": wrote " + (c.output_dir / ("restored" + tag + ".png")).string());
    }
    return 0;
}

void write_reports(const fs::path& dir, const std::vector<ExperimentRecord>& recs,
                   const std::vector<MetricInfo>& metrics) {
    std::ostringstream md;
    render_report(md, recs, metrics);
    write_text(dir / "report.md", md.str());
    std::ostringstream means, anova;
    bool first = true;
    for (const std::string subset : {"all", "pure_inpaint", "contains_outpaint"}) {
        std::ostringstream part;
        render_mean_csv(part, mean_table(recs, metrics, subset));
        std::string s = part.str();
        if (!first) s = s.substr(s.find("\r\n") + 2);  // one header for the whole file
        means << s;
        first = false;
    }
    write_text(dir / "means.csv", means.str());
    if (detail::backend_order(recs).size() >= 2) {
        render_anova_csv(anova, anova_table(recs, metrics, "all"), "all");
        write_text(dir / "anova.csv", anova.str());
    }
}

int cmd_experiment(const PipelineConfig& c) {
    require_backends(c);
    ExperimentSpec spec;
    spec.backends = c.backends;
    spec.metrics = c.metrics;
    spec.scorers = c.scorers;
    spec.masks = c.masks;
    spec.mask_count = c.mask_count;
    spec.seed = c.seed;
    spec.workers = c.workers;
    spec.work_dir = c.output_dir / "work";
    spec.brisque_model = c.model_path();
    for (auto& b : spec.backends)
        if (b.kind == BackendKind::external && !b.params.count("timeout"))
            b.params["timeout"] = csv::number(c.backend_timeout_s);

    if (!c.experiment_images.empty()) {
        for (const auto& p : c.experiment_images) spec.images.push_back({p.filename().string(), io::read_image(p), {}});
    } else {
        const StraightSet set = obtain_straight(c);
        std::vector<int> which = c.straight_indices;
        if (which.empty())
            for (int k = 0; k < int(set.images.size()); ++k) which.push_back(k);
        for (int k : which) {
            if (k < 0 || k >= int(set.images.size())) throw ConfigError("straight index out of range: " + std::to_string(k));
            std::optional<Mask> blank;
            if (!set.blank_masks[k].empty_hole()) blank = set.blank_masks[k];
            spec.images.push_back({"straight_" + std::to_string(k), set.images[k], blank});
        }
    }
    const ExperimentOutput out = run_experiment(spec, info);
    fs::create_directories(c.output_dir);
    {
        std::ofstream f(c.output_dir / "records.csv", std::ios::binary);
        write_records(f, out.records, out.metrics);
        std::ofstream t(c.output_dir / "timings.csv", std::ios::binary);
        write_timings(t, out.records);
    }
    write_reports(c.output_dir, out.records, out.metrics);
    std::size_t failed = 0;
    for (const auto& r : out.records) failed += r.status != "ok";
    info("wrote " + std::to_string(out.records.size()) + " records (" + std::to_string(failed) + " failed) to " +
         c.output_dir.string());
    if (failed == out.records.size()) throw BackendError("every experiment cell failed");
    return 0;
}

int cmd_report(const PipelineConfig& c, const std::string& records) {
    if (records.empty()) throw ConfigError("report needs --records");
    std::ifstream in(records, std::ios::binary);
    if (!in) throw ConfigError("records file not found: " + records);
    std::map<std::string, bool> known;
    for (const auto& s : c.scorers) known[s.name] = s.higher_is_better;
    std::vector<MetricInfo> metrics;
    const auto recs = read_records(in, metrics, known);
    fs::create_directories(c.output_dir);
    write_reports(c.output_dir, recs, metrics);
    info("wrote report to " + (c.output_dir / "report.md").string());
    return 0;
}

/// Reference constants for the period-256 map; a config with another period fails the checks.
int cmd_selfcheck(const PipelineConfig& c) {
    int failures = 0;
    auto line = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
        failures += !ok;
    };
    const Complex alpha = compute_alpha(c.period);
    const Complex expect{1.0, -0.88254240061};
    char buf[160];
    std::snprintf(buf, sizeof buf, "alpha = %.10f %+.10fi", alpha.real(), alpha.imag());
    line("alpha", std::abs(alpha - expect) < 1e-9, buf);

    const SelfSimilarity s = self_similarity(alpha);
    std::snprintf(buf, sizeof buf, "scale = %.5f, angle = %.3f deg", s.scale, s.angle_deg);
    line("self_similarity", std::abs(s.scale - 22.58) <= 0.01 && std::abs(s.angle_deg - 157.63) <= 0.5, buf);

    const double fcrit = stats::f_quantile(0.95, 2, 147);
    std::snprintf(buf, sizeof buf, "Fcrit(2,147) = %.6f", fcrit);
    line("f_critical", std::abs(fcrit - 3.06) <= 0.01, buf);

    const fs::path model = c.model_path();
    if (!fs::exists(model)) {
        std::cout << "SKIP brisque_model  not found: " << model.string() << '\n';
    } else {
        try {
            const SvrModel m = SvrModel::load(model);
            RasterImage flat(64, 64, {128, 128, 128, 255});
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) {
                    const auto v = quantize(128 + 60 * std::sin(0.3 * x) * std::cos(0.21 * y));
                    flat.at(x, y) = {v, v, v, 255};
                }
            const double score = brisque_score(flat, m);
            std::snprintf(buf, sizeof buf, "%zu support vectors, probe score %.3f", m.support.size(), score);
            line("brisque_model", std::isfinite(score), buf);
        } catch (const Error& e) {
            line("brisque_model", false, e.what());
        }
    }
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Droste-warp restoration toolkit"};
    app.require_subcommand(1);
    CommonArgs common;

    std::string source, straight_dir, image, mask, records;
    int mask_w = 512, mask_h = 512, mask_count = -1;
    std::vector<double> coverage, shapes;
    std::optional<bool> allow_border;

    auto* un = app.add_subcommand("unroll", "unroll a warped image into straight views");
    auto* rw = app.add_subcommand("rewarp", "recombine a straight set into the warped composite");
    auto* mg = app.add_subcommand("mask-gen", "generate seeded random masks");
    auto* ip = app.add_subcommand("inpaint", "fill one image/mask pair");
    auto* rs = app.add_subcommand("restore", "unroll, inpaint every blank, rewarp");
    auto* ex = app.add_subcommand("experiment", "score backends on seeded random masks");
    auto* rp = app.add_subcommand("report", "rebuild tables from a records CSV");
    auto* sc = app.add_subcommand("selfcheck", "verify the derived constants");
    for (auto* s : {un, rw, mg, ip, rs, ex, rp, sc}) add_common(s, common);
    for (auto* s : {un, rs, ex}) s->add_option("--source", source, "warped source image (PNG/JPEG)");
    for (auto* s : {rw, rs, ex}) s->add_option("--straight", straight_dir, "existing straight set directory");
    for (auto* s : {mg, ex}) {
        s->add_option("--coverage", coverage, "hole coverage range min,max")->delimiter(',')->expected(2);
        s->add_option("--shapes", shapes, "rectangle,ellipse,stroke weights")->delimiter(',')->expected(3);
        s->add_option("--allow-border", allow_border, "allow holes touching the image border (true/false)");
        s->add_option("--count", mask_count, "number of masks");
    }
    mg->add_option("--width", mask_w, "mask width");
    mg->add_option("--height", mask_h, "mask height");
    ip->add_option("--image", image, "input image");
    ip->add_option("--mask", mask, "hole mask PNG (255 = hole)");
    rp->add_option("--records", records, "records.csv from an experiment run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        PipelineConfig c = resolve_config(common);
        if (!source.empty()) c.source = source;
        if (!straight_dir.empty()) c.straight_dir = straight_dir;
        if (coverage.size() == 2) {
            c.masks.coverage_min = coverage[0];
            c.masks.coverage_max = coverage[1];
        }
        if (shapes.size() == 3)
            for (int i = 0; i < 3; ++i) c.masks.shape_mix[i] = shapes[i];
        if (allow_border) c.masks.allow_border_contact = *allow_border;
        if (mask_count >= 0) c.mask_count = mask_count;
        c.masks.validate();
        if (c.mask_count < 1) throw ConfigError("--count must be >= 1");

        if (*un) return cmd_unroll(c);
        if (*rw) return cmd_rewarp(c);
        if (*mg) return cmd_mask_gen(c, mask_w, mask_h);
        if (*ip) return cmd_inpaint(c, image, mask);
        if (*rs) return cmd_restore(c);
        if (*ex) return cmd_experiment(c);
        if (*rp) return cmd_report(c, records);
        if (*sc) return cmd_selfcheck(c);
    } catch (const BackendError& e) {
        std::cerr << "droste: backend error: " << e.what() << '\n';
        if (!e.diagnostics().empty()) std::cerr << e.diagnostics() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "droste: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "droste: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "droste: internal error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
