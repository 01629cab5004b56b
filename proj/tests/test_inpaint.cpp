#include <gtest/gtest.h>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <filesystem>
#include <map>

#include "droste/inpaint.hpp"
#include "support/fixtures.hpp"

using namespace droste;
namespace fs = std::filesystem;

namespace {

Mask square_hole(int w, int h, int x0, int y0, int x1, int y1) {
    Mask m(w, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.at(x, y) = Mask::kHole;
    return m;
}

/// Independent oracle: assemble the 5-point Laplace system over the hole with
/// Dirichlet data from known pixels and solve it directly (one channel).
std::vector<double> direct_harmonic(const RasterImage& img, const Mask& m, int channel) {
    const int w = img.width(), h = img.height();
    std::map<int, int> index;
    for (int i = 0; i < w * h; ++i)
        if (m.values()[i] == Mask::kHole) index.emplace(i, int(index.size()));
    const int n = int(index.size());
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    auto value = [&](int i) {
        const Rgba& p = img.pixels()[i];
        return double(channel == 0 ? p.r : channel == 1 ? p.g : p.b);
    };
    for (const auto& [pix, row] : index) {
        const int x = pix % w, y = pix / w;
        int deg = 0;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& q : nb) {
            if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
            ++deg;
            const int j = q[1] * w + q[0];
            auto it = index.find(j);
            if (it != index.end()) t.emplace_back(row, it->second, -1.0);
            else rhs[row] += value(j);
        }
        t.emplace_back(row, row, double(deg));
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    const Eigen::VectorXd x = lu.solve(rhs);
    std::vector<double> out(w * h, NAN);
    for (const auto& [pix, row] : index) out[pix] = x[row];
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("droste_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

BackendDescriptor mock(const std::string& mode) {
    BackendDescriptor d;
    d.kind = BackendKind::external;
    d.name = "mock_" + mode;
    for (auto& c : d.name)
        if (c == '-') c = '_';
    d.command_template = std::string(DROSTE_MOCK_BACKEND) + " " + mode + " {input} {mask} {output}";
    return d;
}

}  // namespace

TEST(Diffusion, ConstantImageFillsExactly) {
    const RasterImage img(48, 40, {12, 200, 77, 255});
    const Mask m = square_hole(48, 40, 10, 8, 30, 33);
    const InpaintResult r = diffusion_fill(img, m);
    EXPECT_EQ(r.image, img);
    EXPECT_TRUE(r.unmasked_preserved);
}

TEST(Diffusion, LinearRampMatchesDirectSolveAndRamp) {
    RasterImage img(80, 60);
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 80; ++x) img.at(x, y) = {std::uint8_t(3 * x), std::uint8_t(40), std::uint8_t(250 - 3 * x), 255};
    const Mask m = square_hole(80, 60, 25, 15, 55, 45);
    const InpaintResult r = diffusion_fill(img, m, {1e-4, 50000});
    const auto oracle = direct_harmonic(img, m, 0);
    for (int y = 15; y < 45; ++y)
        for (int x = 25; x < 55; ++x) {
            EXPECT_NEAR(oracle[y * 80 + x], 3.0 * x, 1e-6);
            EXPECT_LE(std::abs(r.image.at(x, y).r - 3.0 * x), 0.5);
            EXPECT_LE(std::abs(r.image.at(x, y).b - (250.0 - 3 * x)), 0.5);
        }
}

TEST(Diffusion, MatchesDirectSolveOnIrregularBoundary) {
    const RasterImage img = fixtures::dead_leaves(64, 64, 4, 20.0, 1);
    Mask m(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (std::hypot(x - 30.0, y - 34.0) < 18 + 5 * std::sin(0.3 * x)) m.at(x, y) = Mask::kHole;
    const InpaintResult r = diffusion_fill(img, m, {1e-4, 50000});
    for (int c = 0; c < 3; ++c) {
        const auto oracle = direct_harmonic(img, m, c);
        for (int i = 0; i < 64 * 64; ++i) {
            if (m.values()[i] != Mask::kHole) continue;
            const Rgba& p = r.image.pixels()[i];
            const double got = c == 0 ? p.r : c == 1 ? p.g : p.b;
            ASSERT_LE(std::abs(got - oracle[i]), 0.55);  // rounding plus iteration residual
        }
    }
}

TEST(Diffusion, MaximumPrincipleOnCheckerBoundary) {
    RasterImage img(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const std::uint8_t v = ((x / 4 + y / 4) % 2) ? 220 : 30;
            img.at(x, y) = {v, v, v, 255};
        }
    const Mask m = square_hole(64, 64, 13, 17, 47, 51);
    const InpaintResult r = diffusion_fill(img, m);
    for (int y = 17; y < 51; ++y)
        for (int x = 13; x < 47; ++x) {
            EXPECT_GE(r.image.at(x, y).r, 30);
            EXPECT_LE(r.image.at(x, y).r, 220);
        }
}

TEST(Diffusion, HoleTouchingBorderUsesNaturalBoundary) {
    RasterImage img(64, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) img.at(x, y) = {std::uint8_t(2 * x), 0, 0, 255};
    const Mask m = square_hole(64, 32, 20, 0, 40, 32);  // full-height band
    const InpaintResult r = diffusion_fill(img, m);
    for (int y = 0; y < 32; ++y)
        for (int x = 20; x < 40; ++x) EXPECT_LE(std::abs(r.image.at(x, y).r - 2.0 * x), 0.5);
}

TEST(Diffusion, RejectsHoleWithoutKnownBoundary) {
    const RasterImage img(32, 32, {1, 2, 3, 255});
    EXPECT_THROW(diffusion_fill(img, Mask(32, 32, Mask::kHole)), UnsupportedInput);
    EXPECT_THROW(diffusion_fill(img, Mask(32, 32)), ConfigError);
    // Hole enclosed by transparent (unknown) pixels.
    RasterImage t = img;
    for (int y = 8; y < 24; ++y)
        for (int x = 8; x < 24; ++x) t.at(x, y).a = 0;
    EXPECT_THROW(diffusion_fill(t, square_hole(32, 32, 12, 12, 20, 20)), UnsupportedInput);
}

TEST(Patch, ConstantImageFillsExactly) {
    const RasterImage img(64, 64, {9, 99, 199, 255});
    const InpaintResult r = patch_fill(img, square_hole(64, 64, 20, 20, 40, 44));
    EXPECT_EQ(r.image, img);
}

TEST(Patch, StripesContinuePhaseCorrectly) {
    const int W = 96, period = 8;
    RasterImage img(W, W);
    for (int y = 0; y < W; ++y)
        for (int x = 0; x < W; ++x) {
            const double v = 128 + 90 * std::sin(2 * std::numbers::pi * (x + 0.5 * y) / period);
            img.at(x, y) = {quantize(v), quantize(255 - v), 80, 255};
        }
    const Mask m = square_hole(W, W, 40, 40, 40 + 2 * period + 4, 40 + 2 * period + 4);  // < 3 periods
    const InpaintResult r = patch_fill(img, m);
    std::size_t holes = 0, good = 0;
    for (int y = 0; y < W; ++y)
        for (int x = 0; x < W; ++x) {
            if (!m.hole(x, y)) continue;
            ++holes;
            const Rgba a = r.image.at(x, y), b = img.at(x, y);
            good += std::abs(a.r - b.r) <= 2 && std::abs(a.g - b.g) <= 2 && std::abs(a.b - b.b) <= 2;
        }
    EXPECT_GE(double(good) / double(holes), 0.95);
    EXPECT_TRUE(r.unmasked_preserved);
}

TEST(Patch, DeterministicAndNeverCopiesHolePixels) {
    RasterImage img = fixtures::dead_leaves(80, 80, 8, 20.0, 1);
    MaskSpec ms;
    ms.seed = 3;
    const Mask m = random_mask(ms, 80, 80);
    // Poison the hole: a colour absent from the known region.
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            if (m.hole(x, y)) img.at(x, y) = {255, 0, 255, 255};
    const InpaintResult a = patch_fill(img, m), b = patch_fill(img, m);
    EXPECT_EQ(a.image, b.image);
    for (const auto& p : a.image.pixels()) ASSERT_FALSE(p.r == 255 && p.g == 0 && p.b == 255);
    PatchOptions global;
    global.search_radius = 0;
    const InpaintResult g = patch_fill(img, m, global);
    for (const auto& p : g.image.pixels()) ASSERT_FALSE(p.r == 255 && p.g == 0 && p.b == 255);
}

TEST(Patch, NoSourcePatchIsAnError) {
    const RasterImage img(16, 16, {5, 5, 5, 255});
    Mask m(16, 16, Mask::kHole);
    for (int x = 0; x < 16; ++x) m.at(x, 0) = 0;  // one known row, no 7x7 patch
    EXPECT_THROW(patch_fill(img, m), UnsupportedInput);
    EXPECT_THROW(patch_fill(img, square_hole(16, 16, 4, 4, 8, 8), {4, 8}), ConfigError);
}

TEST(Descriptor, PlaceholderValidation) {
    BackendDescriptor d;
    d.kind = BackendKind::external;
    d.name = "ext";
    d.command_template = "tool {input} {mask}";
    EXPECT_THROW(d.validate(), ConfigError);
    d.command_template = "tool {input} {mask} {output} {input}";
    EXPECT_THROW(d.validate(), ConfigError);
    d.command_template = "tool {input} {mask} {output}";
    EXPECT_NO_THROW(d.validate());
    d.name = "bad name";
    EXPECT_THROW(d.validate(), ConfigError);
}

TEST(External, CopyBackendPreservesInput) {
    const RasterImage img = fixtures::dead_leaves(40, 30, 1, 20.0, 1);
    const Mask m = square_hole(40, 30, 5, 5, 15, 15);
    const fs::path wd = scratch("copy");
    const InpaintResult r = run_external(mock("copy"), img, m, {wd, 30.0, true});
    EXPECT_EQ(r.image, img);
    EXPECT_TRUE(r.unmasked_preserved);
    EXPECT_TRUE(fs::exists(wd / "in.png"));
    EXPECT_TRUE(fs::exists(wd / "mask.png"));
    EXPECT_TRUE(fs::exists(wd / "out.png"));
    fs::remove_all(wd);
}

TEST(External, RedFillWithRestore) {
    const RasterImage img = fixtures::dead_leaves(40, 30, 2, 20.0, 1);
    const Mask m = square_hole(40, 30, 5, 5, 15, 15);
    const fs::path wd = scratch("red");
    const InpaintResult r = run_external(mock("noisy"), img, m, {wd, 30.0, true});
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) {
            if (m.hole(x, y)) EXPECT_EQ(r.image.at(x, y), (Rgba{255, 0, 0, 255}));
            else EXPECT_EQ(r.image.at(x, y), img.at(x, y));
        }
    EXPECT_TRUE(r.unmasked_preserved);
    const InpaintResult raw = run_external(mock("noisy"), img, m, {wd, 30.0, false});
    EXPECT_FALSE(raw.unmasked_preserved);
    fs::remove_all(wd);
}

TEST(External, WrongDimensionsIsBackendError) {
    const RasterImage img(20, 20, {1, 1, 1, 255});
    const fs::path wd = scratch("dims");
    EXPECT_THROW(run_external(mock("wrong-size"), img, square_hole(20, 20, 2, 2, 5, 5), {wd, 30.0, true}),
                 BackendError);
    fs::remove_all(wd);
}

TEST(External, FailureCarriesStderr) {
    const RasterImage img(20, 20, {1, 1, 1, 255});
    const fs::path wd = scratch("fail");
    try {
        run_external(mock("fail"), img, square_hole(20, 20, 2, 2, 5, 5), {wd, 30.0, true});
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("status 7"), std::string::npos);
        EXPECT_NE(e.diagnostics().find("deliberate failure"), std::string::npos);
        EXPECT_EQ(e.kind(), ErrorKind::backend);
    }
    fs::remove_all(wd);
}

TEST(External, TimeoutKillsTheProcess) {
    BackendDescriptor d;
    d.kind = BackendKind::external;
    d.name = "sleeper";
    d.command_template = "sleep 30; cp {input} {output} # {mask}";
    const RasterImage img(20, 20, {1, 1, 1, 255});
    const fs::path wd = scratch("sleep");
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_THROW(run_external(d, img, square_hole(20, 20, 2, 2, 5, 5), {wd, 0.3, true}), BackendError);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
    fs::remove_all(wd);
}

TEST(External, MissingOutputIsBackendError) {
    BackendDescriptor d;
    d.kind = BackendKind::external;
    d.name = "silent";
    d.command_template = "true {input} {mask} {output}";
    const RasterImage img(20, 20, {1, 1, 1, 255});
    const fs::path wd = scratch("silent");
    EXPECT_THROW(run_external(d, img, square_hole(20, 20, 2, 2, 5, 5), {wd, 30.0, true}), BackendError);
    fs::remove_all(wd);
}

TEST(RunBackend, DispatchesBuiltinsWithParams) {
    const RasterImage img(32, 32, {50, 60, 70, 255});
    const Mask m = square_hole(32, 32, 8, 8, 20, 20);
    BackendDescriptor d;
    d.kind = BackendKind::patch;
    d.name = "p5";
    d.params["patch_size"] = "5";
    const InpaintResult r = run_backend(d, img, m);
    EXPECT_EQ(r.backend, "p5");
    EXPECT_EQ(r.image, img);
    d.params["patch_size"] = "five";
    EXPECT_THROW(run_backend(d, img, m), ConfigError);
}
