// Builds a synthetic Droste picture with a blank centre, restores it with the
// diffusion backend and writes every intermediate as PNG.
//
//   print_gallery_demo [out_dir]

#include <cmath>
#include <filesystem>
#include <iostream>

#include "droste/complex_map.hpp"
#include "droste/image_io.hpp"
#include "droste/pipeline.hpp"
#include "droste/straight_io.hpp"
#include "droste/warp.hpp"

using namespace droste;

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : "demo_out";
    std::filesystem::create_directories(out);

    const int size = 768;
    const DrosteParams p = DrosteParams::make(256.0, {size / 2.0, size / 2.0}, 2.0);
    const double L = std::log(p.period);

    // Straight picture: a log-periodic brick pattern, warped by painting pixel z
    // with the pattern at alpha * Ln z.
    RasterImage warped(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const Complex z = (Complex{x + 0.5, y + 0.5} - p.center) / p.base_radius;
            const Complex u = p.alpha * std::log(z);
            const double a = std::sin(kTwoPi * 4 * u.real() / L), b = std::sin(6 * u.imag());
            const double v = 0.5 + 0.5 * std::tanh(4 * a * b);
            warped.at(x, y) = to_rgba({60 + 150 * v, 50 + 110 * v, 40 + 60 * (1 - v)});
            if (std::abs(z) * p.base_radius < 90) warped.at(x, y) = {255, 255, 255, 255};
        }
    io::write_png(out / "warped.png", warped);

    const StraightSet set = unroll(warped, p, SamplerSpec{});
    save_straight_set(set, out / "straight");

    BackendDescriptor diffusion;
    const RestoreResult r = restore(set, diffusion, SamplerSpec{});
    save_straight_set(r.filled, out / "filled");
    io::write_png(out / "restored.png", r.restored);
    io::write_png(out / "comparison.png", side_by_side(warped, r.restored));

    const SelfSimilarity s = self_similarity(p);
    std::cout << "alpha = " << p.alpha.real() << " " << p.alpha.imag() << "i\n"
              << "self-similarity: x" << s.scale << ", " << s.angle_deg << " deg\n"
              << "wrote " << out.string() << "/{warped,restored,comparison}.png\n";
}
