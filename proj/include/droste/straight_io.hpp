#pragma once

// StraightSet on disk: straight_<k>.png, blank_<k>.png and params.json.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "droste/image_io.hpp"
#include "droste/warp.hpp"

namespace droste {

inline nlohmann::json to_json(const DrosteParams& p) {
    return {{"period", p.period},
            {"center", {p.center.real(), p.center.imag()}},
            {"base_radius", p.base_radius},
            {"branch_count", p.branch_count},
            {"cut_angle", p.cut_angle},
            {"alpha", {p.alpha.real(), p.alpha.imag()}},
            {"zoom_step", p.zoom_step}};
}

inline nlohmann::json to_json(const SamplerSpec& s) {
    return {{"interpolation", to_string(s.interpolation)}, {"supersampling", s.supersampling}};
}

inline void save_straight_set(const StraightSet& set, const std::filesystem::path& dir) {
    set.validate();
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < set.images.size(); ++k) {
        io::write_png(dir / ("straight_" + std::to_string(k) + ".png"), set.images[k]);
        io::write_mask(dir / ("blank_" + std::to_string(k) + ".png"), set.blank_masks[k]);
    }
    nlohmann::json j;
    j["format"] = "droste-straight-set/1";
    j["droste"] = to_json(set.params);
    j["sampler"] = to_json(set.sampler);
    j["out_size"] = set.out_size;
    j["margin"] = set.margin;
    j["out_resolution"] = set.out_resolution();
    j["source_size"] = {set.source_width, set.source_height};
    std::ofstream(dir / "params.json") << j.dump(2) << '\n';
}

inline StraightSet load_straight_set(const std::filesystem::path& dir) {
    const auto pfile = dir / "params.json";
    std::ifstream in(pfile);
    if (!in) throw IoError("straight set has no params.json: " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
        StraightSet set;
        const auto& d = j.at("droste");
        set.params = DrosteParams::make(d.at("period").get<double>(),
                                        {d.at("center").at(0).get<double>(), d.at("center").at(1).get<double>()},
                                        d.at("base_radius").get<double>(), d.at("branch_count").get<int>(),
                                        d.at("cut_angle").get<double>());
        set.sampler.interpolation = parse_interpolation(j.at("sampler").at("interpolation").get<std::string>());
        set.sampler.supersampling = j.at("sampler").at("supersampling").get<int>();
        set.out_size = j.at("out_size").get<int>();
        set.margin = j.at("margin").get<double>();
        set.source_width = j.at("source_size").at(0).get<int>();
        set.source_height = j.at("source_size").at(1).get<int>();
        for (int k = 0; k < set.params.branch_count; ++k) {
            set.images.push_back(io::read_image(dir / ("straight_" + std::to_string(k) + ".png")));
            set.blank_masks.push_back(io::read_mask(dir / ("blank_" + std::to_string(k) + ".png")));
        }
        set.validate();
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(pfile.string() + ": " + e.what());
    }
}

}  // namespace droste
