#pragma once

// Pipeline configuration as JSON. Every key is optional except where a
// command needs it (source for unroll/restore, backends for inpaint-type
// commands). See README for the schema.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "droste/inpaint.hpp"
#include "droste/iqa.hpp"
#include "droste/masking.hpp"
#include "droste/warp.hpp"

namespace droste {

struct ScorerDescriptor {
    std::string name;
    std::string command_template;  // must contain {input}; prints one number on stdout
    bool higher_is_better = true;
};

struct PipelineConfig {
    std::filesystem::path source;
    double period = 256.0;
    std::optional<Complex> center;  // default: source image centre
    double base_radius = 2.0;
    int branch_count = 8;
    double cut_angle = 0.0;
    SamplerSpec sampler;
    UnrollOptions unroll;
    RewarpOptions rewarp;
    std::filesystem::path straight_dir;  // existing StraightSet to reuse
    MaskSpec masks;
    int mask_count = 50;
    std::vector<BackendDescriptor> backends;
    std::vector<std::string> metrics{"brisque", "dom"};
    std::vector<ScorerDescriptor> scorers;
    std::vector<std::filesystem::path> experiment_images;  // overrides source/straight views
    std::vector<int> straight_indices;                     // default: all views
    std::filesystem::path brisque_model;                   // default: shipped model
    std::filesystem::path output_dir = "droste_out";
    std::uint64_t seed = 0;
    int workers = 1;
    double backend_timeout_s = 600.0;

    DrosteParams droste_params(int source_width, int source_height) const {
        const Complex c = center ? *center : Complex{source_width / 2.0, source_height / 2.0};
        return DrosteParams::make(period, c, base_radius, branch_count, cut_angle);
    }

    std::filesystem::path model_path() const {
        return brisque_model.empty() ? default_brisque_model_path() : brisque_model;
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline BackendDescriptor parse_backend(const nlohmann::json& j) {
    detail::reject_unknown(j, {"name", "kind", "command", "params"}, "backend");
    BackendDescriptor d;
    d.kind = parse_backend_kind(j.value("kind", std::string("diffusion")));
    d.name = j.value("name", to_string(d.kind));
    d.command_template = j.value("command", std::string());
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
            d.params[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
        }
    }
    d.validate();
    return d;
}

/// Built-in descriptor by name, for `--backend diffusion|patch`.
inline BackendDescriptor builtin_backend(const std::string& name) {
    BackendDescriptor d;
    d.kind = parse_backend_kind(name);
    if (d.kind == BackendKind::external) throw ConfigError("external backends must be declared in the config file");
    d.name = name;
    return d;
}

inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    using detail::read_opt;
    PipelineConfig c;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base.empty() ? base / path : path;
    };
    try {
        detail::reject_unknown(j, {"source", "droste", "sampler", "straight", "blank", "rewarp", "masks", "backends",
                                   "metrics", "scorers", "experiment", "output_dir", "seed", "workers"},
                               "config");
        if (j.contains("source")) c.source = resolve(j["source"].get<std::string>());
        if (j.contains("droste")) {
            const auto& d = j["droste"];
            detail::reject_unknown(d, {"period", "center", "base_radius", "branch_count", "cut_angle"}, "droste");
            read_opt(d, "period", c.period);
            read_opt(d, "base_radius", c.base_radius);
            read_opt(d, "branch_count", c.branch_count);
            read_opt(d, "cut_angle", c.cut_angle);
            if (d.contains("center")) c.center = Complex{d["center"].at(0).get<double>(), d["center"].at(1).get<double>()};
        }
        if (j.contains("sampler")) {
            const auto& s = j["sampler"];
            detail::reject_unknown(s, {"interpolation", "supersampling"}, "sampler");
            if (s.contains("interpolation")) c.sampler.interpolation = parse_interpolation(s["interpolation"].get<std::string>());
            read_opt(s, "supersampling", c.sampler.supersampling);
            c.sampler.validate();
        }
        if (j.contains("straight")) {
            const auto& s = j["straight"];
            detail::reject_unknown(s, {"size", "margin", "dir"}, "straight");
            read_opt(s, "size", c.unroll.out_size);
            read_opt(s, "margin", c.unroll.margin);
            if (s.contains("dir")) c.straight_dir = resolve(s["dir"].get<std::string>());
        }
        if (j.contains("blank")) {
            const auto& b = j["blank"];
            detail::reject_unknown(b, {"whiteness_threshold", "dilation_px", "min_component_px"}, "blank");
            read_opt(b, "whiteness_threshold", c.unroll.blank.whiteness_threshold);
            read_opt(b, "dilation_px", c.unroll.blank.dilation_px);
            read_opt(b, "min_component_px", c.unroll.blank.min_component_px);
        }
        if (j.contains("rewarp")) {
            const auto& r = j["rewarp"];
            detail::reject_unknown(r, {"width", "height", "seam_band_px"}, "rewarp");
            read_opt(r, "width", c.rewarp.out_width);
            read_opt(r, "height", c.rewarp.out_height);
            read_opt(r, "seam_band_px", c.rewarp.seam_band_px);
        }
        if (j.contains("masks")) {
            const auto& m = j["masks"];
            detail::reject_unknown(m, {"count", "coverage", "shapes", "allow_border_contact"}, "masks");
            read_opt(m, "count", c.mask_count);
            if (m.contains("coverage")) {
                c.masks.coverage_min = m["coverage"].at(0).get<double>();
                c.masks.coverage_max = m["coverage"].at(1).get<double>();
            }
            if (m.contains("shapes")) {
                for (int i = 0; i < 3; ++i) c.masks.shape_mix[i] = m["shapes"].at(i).get<double>();
            }
            read_opt(m, "allow_border_contact", c.masks.allow_border_contact);
            c.masks.validate();
        }
        if (j.contains("backends")) {
            for (const auto& b : j["backends"]) c.backends.push_back(parse_backend(b));
        }
        if (j.contains("metrics")) c.metrics = j["metrics"].get<std::vector<std::string>>();
        if (j.contains("scorers")) {
            for (const auto& s : j["scorers"]) {
                detail::reject_unknown(s, {"name", "command", "higher_is_better"}, "scorer");
                ScorerDescriptor d{s.at("name").get<std::string>(), s.at("command").get<std::string>(),
                                   s.value("higher_is_better", true)};
                if (d.command_template.find("{input}") == std::string::npos) {
                    throw ConfigError("scorer '" + d.name + "': command lacks {input}");
                }
                c.scorers.push_back(d);
            }
        }
        if (j.contains("experiment")) {
            const auto& e = j["experiment"];
            detail::reject_unknown(e, {"images", "straight_indices", "brisque_model", "backend_timeout_s"}, "experiment");
            if (e.contains("images"))
                for (const auto& p : e["images"]) c.experiment_images.push_back(resolve(p.get<std::string>()));
            read_opt(e, "straight_indices", c.straight_indices);
            if (e.contains("brisque_model")) c.brisque_model = resolve(e["brisque_model"].get<std::string>());
            read_opt(e, "backend_timeout_s", c.backend_timeout_s);
        }
        if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
        read_opt(j, "seed", c.seed);
        read_opt(j, "workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& m : c.metrics) {
        if (m != "brisque" && m != "dom") throw ConfigError("unknown metric '" + m + "' (brisque|dom)");
    }
    if (c.mask_count < 1) throw ConfigError("masks.count must be >= 1");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    for (std::size_t i = 0; i < c.backends.size(); ++i)
        for (std::size_t k = i + 1; k < c.backends.size(); ++k)
            if (c.backends[i].name == c.backends[k].name)
                throw ConfigError("duplicate backend name '" + c.backends[i].name + "'");
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

}  // namespace droste
