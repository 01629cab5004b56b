#pragma once

// The three-step restoration (unroll, inpaint each straight view, rewarp) and
// the seeded mask experiment behind the CLI.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "droste/config.hpp"
#include "droste/inpaint.hpp"
#include "droste/iqa.hpp"
#include "droste/masking.hpp"
#include "droste/report.hpp"
#include "droste/warp.hpp"

namespace droste {

/// Counter-based seed for mask `mask` of image `image`: the same triple always
/// gives the same mask, whichever backend or worker asks for it.
inline std::uint64_t derive_mask_seed(std::uint64_t global, std::uint64_t image, std::uint64_t mask) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(global) ^ image) ^ (mask * 0xd1b54a32d192ed03ULL));
}

// ---------------------------------------------------------------------------
// Restore

struct RestoreResult {
    StraightSet filled;  // straight views after inpainting
    RasterImage restored;
    std::vector<double> wall_times;
};

/// Inpaints every view's blank mask with `backend` (views with an empty blank
/// are passed through) and rewarps the filled stack.
inline RestoreResult restore(const StraightSet& set, const BackendDescriptor& backend, const SamplerSpec& sampler,
                             const RewarpOptions& rw = {}, const std::filesystem::path& work_dir = {}) {
    set.validate();
    RestoreResult r;
    r.filled = set;
    for (std::size_t k = 0; k < set.images.size(); ++k) {
        if (set.blank_masks[k].empty_hole()) {
            r.wall_times.push_back(0.0);
            continue;
        }
        const auto wd = work_dir.empty() ? work_dir : work_dir / (backend.name + "_" + std::to_string(k));
        InpaintResult ir = run_backend(backend, set.images[k], set.blank_masks[k], wd);
        r.filled.images[k] = std::move(ir.image);
        r.wall_times.push_back(ir.wall_time);
    }
    r.restored = rewarp(r.filled, sampler, rw);
    return r;
}

/// Source (left) and restored (right) side by side, scaled to the same height.
inline RasterImage side_by_side(const RasterImage& a, const RasterImage& b) {
    const int h = a.height();
    const int bw = std::max(1, int(std::lround(double(b.width()) * h / b.height())));
    RasterImage out(a.width() + bw, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < a.width(); ++x) out.at(x, y) = a.at(x, y);
    SamplerSpec s;
    const RasterImage scaled = resample(b, bw, h, s, [&](double x, double y) -> std::optional<std::array<double, 2>> {
        return std::array<double, 2>{x * b.width() / bw, y * b.height() / h};
    });
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < bw; ++x) out.at(a.width() + x, y) = scaled.at(x, y);
    return out;
}

// ---------------------------------------------------------------------------
// External scorers

/// Runs `{input}`-templated command; parses the first number on stdout.
inline double run_scorer(const ScorerDescriptor& s, const std::filesystem::path& image) {
    std::string cmd = s.command_template;
    cmd = detail::replace_once(cmd, "{input}", image.string());
    std::FILE* p = popen(cmd.c_str(), "r");
    if (!p) throw BackendError("scorer '" + s.name + "': cannot start");
    std::string out;
    char buf[256];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    const int status = pclose(p);
    if (status != 0) throw BackendError("scorer '" + s.name + "' failed with status " + std::to_string(status), out);
    try {
        return std::stod(out);
    } catch (const std::exception&) {
        throw BackendError("scorer '" + s.name + "' printed no number", out);
    }
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentImage {
    std::string label;
    RasterImage image;
    std::optional<Mask> extra_hole;  // e.g. a straight view's own blank, always filled too
};

struct ExperimentSpec {
    std::vector<ExperimentImage> images;
    std::vector<BackendDescriptor> backends;
    std::vector<std::string> metrics{"brisque", "dom"};
    std::vector<ScorerDescriptor> scorers;
    MaskSpec masks;  // seed field ignored; per-mask seeds are derived
    int mask_count = 50;
    std::uint64_t seed = 0;
    int workers = 1;
    std::filesystem::path work_dir;  // for external backends/scorers
    std::filesystem::path brisque_model;
};

struct ExperimentOutput {
    std::vector<MetricInfo> metrics;
    std::vector<ExperimentRecord> records;  // ordered by (image, mask, backend)
};

inline std::vector<MetricInfo> experiment_metrics(const ExperimentSpec& spec) {
    std::vector<MetricInfo> m;
    for (const auto& n : spec.metrics) m.push_back(builtin_metric(n));
    for (const auto& s : spec.scorers) m.push_back({s.name, s.higher_is_better});
    return m;
}

/// Runs every backend on every seeded mask of every image and scores the
/// results. Failed cells are recorded with status "failed" and empty scores.
inline ExperimentOutput run_experiment(const ExperimentSpec& spec,
                                       const std::function<void(const std::string&)>& log = {}) {
    if (spec.images.empty()) throw ConfigError("experiment: no images");
    if (spec.backends.empty()) throw ConfigError("experiment: no backends");
    if (spec.metrics.empty() && spec.scorers.empty()) throw ConfigError("experiment: no metrics");
    if (spec.mask_count < 1) throw ConfigError("experiment: mask count must be >= 1");
    for (const auto& b : spec.backends) b.validate();

    ExperimentOutput out;
    out.metrics = experiment_metrics(spec);

    std::optional<SvrModel> model;
    for (const auto& m : spec.metrics)
        if (m == "brisque")
            model = SvrModel::load(spec.brisque_model.empty() ? default_brisque_model_path() : spec.brisque_model);

    // Masks first, so every backend sees the same holes regardless of scheduling.
    struct MaskJob {
        Mask hole;
        std::uint64_t seed;
        std::string cls;
        double coverage;
    };
    std::vector<std::vector<MaskJob>> masks(spec.images.size());
    for (std::size_t i = 0; i < spec.images.size(); ++i) {
        const auto& img = spec.images[i].image;
        for (int m = 0; m < spec.mask_count; ++m) {
            MaskSpec ms = spec.masks;
            ms.seed = derive_mask_seed(spec.seed, i, std::uint64_t(m));
            Mask rm = random_mask(ms, img.width(), img.height());
            MaskJob job{rm, ms.seed, to_string(classify(rm)), rm.coverage()};
            if (spec.images[i].extra_hole) {
                auto dst = job.hole.values();
                auto src = spec.images[i].extra_hole->values();
                for (std::size_t p = 0; p < dst.size(); ++p)
                    if (src[p] == Mask::kHole) dst[p] = Mask::kHole;
            }
            masks[i].push_back(std::move(job));
        }
    }

    const std::size_t nb = spec.backends.size();
    const std::size_t cells = spec.images.size() * std::size_t(spec.mask_count) * nb;
    out.records.resize(cells);
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;

    auto work = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= cells) return;
            const std::size_t b = c % nb;
            const std::size_t m = (c / nb) % std::size_t(spec.mask_count);
            const std::size_t i = c / nb / std::size_t(spec.mask_count);
            const auto& job = masks[i][m];
            const auto& backend = spec.backends[b];
            ExperimentRecord& r = out.records[c];
            r.image_index = int(i);
            r.image = spec.images[i].label;
            r.mask_index = int(m);
            r.mask_seed = job.seed;
            r.mask_class = job.cls;
            r.coverage = job.coverage;
            r.backend = backend.name;
            r.scores.assign(out.metrics.size(), std::nullopt);
            const std::string cell = "img" + std::to_string(i) + "_mask" + std::to_string(m) + "_" + backend.name;
            const auto wd = spec.work_dir.empty() ? std::filesystem::path{} : spec.work_dir / cell;
            try {
                const InpaintResult ir = run_backend(backend, spec.images[i].image, job.hole, wd);
                r.wall_time = ir.wall_time;
                std::size_t k = 0;
                for (const auto& name : spec.metrics) {
                    try {
                        r.scores[k] = name == "brisque" ? brisque_score(ir.image, *model) : dom_score(ir.image);
                    } catch (const UnscorableError&) {
                    }
                    ++k;
                }
                if (!spec.scorers.empty()) {
                    const auto dir = wd.empty() ? std::filesystem::temp_directory_path() / ("droste_score_" + cell) : wd;
                    std::filesystem::create_directories(dir);
                    const auto png = dir / "scored.png";
                    io::write_png(png, ir.image);
                    for (const auto& s : spec.scorers) {
                        try {
                            r.scores[k] = run_scorer(s, png);
                        } catch (const BackendError& e) {
                            if (log) {
                                std::lock_guard lk(log_mu);
                                log("scorer " + s.name + " failed on " + cell + ": " + e.what());
                            }
                        }
                        ++k;
                    }
                }
            } catch (const Error& e) {
                r.status = "failed";
                r.error = e.what();
                if (log) {
                    std::lock_guard lk(log_mu);
                    log("cell " + cell + " failed: " + e.what());
                }
            }
        }
    };

    const int nw = std::max(1, std::min<int>(spec.workers, int(cells)));
    if (nw == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nw; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

}  // namespace droste
