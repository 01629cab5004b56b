#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "droste/image_io.hpp"
#include "droste/masking.hpp"
#include "support/fixtures.hpp"

using namespace droste;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

/// Runs the CLI with stdout captured and stderr merged in.
CliRun droste_cli(const std::string& args) {
    const std::string cmd = std::string(DROSTE_CLI) + " " + args + " 2>&1";
    CliRun r;
    std::FILE* p = popen(cmd.c_str(), "r");
    char buf[512];
    while (std::fgets(buf, sizeof buf, p)) r.out += buf;
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path root;

    void SetUp() override {
        root = fs::temp_directory_path() /
               ("droste_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
                std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    void TearDown() override { fs::remove_all(root); }

    fs::path spiral_source(int W = 256) {
        const DrosteParams p = DrosteParams::make(256.0, {W / 2.0, W / 2.0}, 1.0);
        RasterImage src = fixtures::warped_fixture(W, W, p, fixtures::texture_pattern(256.0), 2);
        fixtures::blank_center(src, p.center, 0.12 * W);
        const fs::path f = root / "source.png";
        io::write_png(f, src);
        return f;
    }

    fs::path write_config(const std::string& json) {
        const fs::path f = root / "config.json";
        std::ofstream(f) << json;
        return f;
    }
};

}  // namespace

TEST_F(Cli, MissingSourceIsConfigError) {
    const CliRun r = droste_cli("unroll --source " + (root / "nope.png").string() + " --out-dir " + root.string());
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("nope.png"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(droste_cli("").code, 2);
    EXPECT_EQ(droste_cli("frobnicate").code, 2);
    EXPECT_EQ(droste_cli("selfcheck --workers many").code, 2);
    EXPECT_EQ(droste_cli("inpaint --out-dir " + root.string()).code, 2);  // no backend
    EXPECT_EQ(droste_cli("selfcheck --config " + write_config("{\"bogus\": 1}").string()).code, 2);
}

TEST_F(Cli, UnrollWritesSetAndIsReproducible) {
    const fs::path src = spiral_source();
    const std::string args = "unroll --source " + src.string() + " -c " +
                             write_config(R"({"straight": {"size": 128}})").string() + " --out-dir ";
    ASSERT_EQ(droste_cli(args + (root / "a").string()).code, 0);
    ASSERT_EQ(droste_cli(args + (root / "b").string()).code, 0);
    for (int k = 0; k < 8; ++k) {
        const std::string s = "straight/straight_" + std::to_string(k) + ".png";
        const std::string m = "straight/blank_" + std::to_string(k) + ".png";
        ASSERT_TRUE(fs::exists(root / "a" / s));
        ASSERT_TRUE(fs::exists(root / "a" / m));
        EXPECT_EQ(slurp(root / "a" / s), slurp(root / "b" / s));
        EXPECT_EQ(slurp(root / "a" / m), slurp(root / "b" / m));
    }
    EXPECT_EQ(slurp(root / "a/straight/params.json"), slurp(root / "b/straight/params.json"));
    const auto manifest = nlohmann::json::parse(slurp(root / "a/manifest.json"));
    EXPECT_EQ(manifest["images"].size(), 8u);

    const CliRun rw = droste_cli("rewarp --straight " + (root / "a/straight").string() + " --out-dir " +
                              (root / "rw").string());
    ASSERT_EQ(rw.code, 0) << rw.out;
    const RasterImage back = io::read_image(root / "rw/rewarped.png");
    EXPECT_EQ(back.width(), 256);
}

TEST_F(Cli, SelfcheckPassesOnDefaults) {
    const CliRun r = droste_cli("selfcheck");
    EXPECT_EQ(r.code, 0) << r.out;
    for (const char* name : {"PASS alpha", "PASS self_similarity", "PASS f_critical", "PASS brisque_model"})
        EXPECT_NE(r.out.find(name), std::string::npos) << r.out;
}

TEST_F(Cli, SelfcheckFailsOnTamperedPeriod) {
    const CliRun r = droste_cli("selfcheck -c " + write_config(R"({"droste": {"period": 255}})").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.out.find("FAIL alpha"), std::string::npos) << r.out;
}

TEST_F(Cli, SelfcheckSkipsMissingModel) {
    const CliRun r = droste_cli("selfcheck -c " +
                             write_config(R"({"experiment": {"brisque_model": "absent.txt"}})").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("SKIP brisque_model"), std::string::npos) << r.out;
}

TEST_F(Cli, MaskGenWritesSeededMasks) {
    const std::string args = "mask-gen --width 80 --height 60 --count 5 --seed 3 --allow-border false --out-dir ";
    ASSERT_EQ(droste_cli(args + (root / "a").string()).code, 0);
    ASSERT_EQ(droste_cli(args + (root / "b").string()).code, 0);
    EXPECT_EQ(slurp(root / "a/masks.csv"), slurp(root / "b/masks.csv"));
    for (int m = 0; m < 5; ++m) {
        char name[32];
        std::snprintf(name, sizeof name, "mask_%03d.png", m);
        const Mask mk = io::read_mask(root / "a" / name);
        EXPECT_EQ(mk.width(), 80);
        EXPECT_EQ(classify(mk), MaskClass::pure_inpaint);
        EXPECT_EQ(slurp(root / "a" / name), slurp(root / "b" / name));
    }
}

TEST_F(Cli, InpaintWithBuiltinAndExternal) {
    const RasterImage img = fixtures::dead_leaves(48, 48, 2, 20.0, 1);
    Mask m(48, 48);
    for (int y = 10; y < 20; ++y)
        for (int x = 10; x < 20; ++x) m.at(x, y) = Mask::kHole;
    io::write_png(root / "img.png", img);
    io::write_mask(root / "mask.png", m);
    const fs::path cfg = write_config(std::string(R"({"backends": [{"name": "red", "kind": "external", "command": ")") +
                                      DROSTE_MOCK_BACKEND + R"( red {input} {mask} {output}"}]})");
    const CliRun r = droste_cli("inpaint -c " + cfg.string() + " --backend red --backend patch --image " +
                             (root / "img.png").string() + " --mask " + (root / "mask.png").string() + " --out-dir " +
                             (root / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    const RasterImage red = io::read_image(root / "out/inpainted_red.png");
    EXPECT_EQ(red.at(12, 12), (Rgba{255, 0, 0, 255}));
    EXPECT_EQ(red.at(30, 30), img.at(30, 30));
    EXPECT_TRUE(fs::exists(root / "out/inpainted_patch.png"));
}

TEST_F(Cli, BackendFailureExitsThree) {
    const RasterImage img(32, 32, {9, 9, 9, 255});
    Mask m(32, 32);
    m.at(5, 5) = Mask::kHole;
    io::write_png(root / "img.png", img);
    io::write_mask(root / "mask.png", m);
    const fs::path cfg = write_config(std::string(R"({"backends": [{"name": "bad", "kind": "external", "command": ")") +
                                      DROSTE_MOCK_BACKEND + R"( fail {input} {mask} {output}"}]})");
    const CliRun r = droste_cli("inpaint -c " + cfg.string() + " --image " + (root / "img.png").string() + " --mask " +
                             (root / "mask.png").string() + " --out-dir " + (root / "out").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("deliberate failure"), std::string::npos) << r.out;
}

TEST_F(Cli, RestoreWithTwoBackendsSuffixesOutputs) {
    const fs::path src = spiral_source(192);
    const fs::path cfg = write_config(R"({"straight": {"size": 96}})");
    const CliRun r = droste_cli("restore -c " + cfg.string() + " --source " + src.string() +
                             " --backend diffusion --backend patch --out-dir " + (root / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* f : {"restored_diffusion.png", "restored_patch.png", "comparison_diffusion.png",
                          "comparison_patch.png", "filled_diffusion/params.json", "filled_patch/params.json"})
        EXPECT_TRUE(fs::exists(root / "out" / f)) << f;
    EXPECT_FALSE(fs::exists(root / "out/restored.png"));

    const CliRun one = droste_cli("restore -c " + cfg.string() + " --source " + src.string() +
                               " --backend diffusion --out-dir " + (root / "one").string());
    ASSERT_EQ(one.code, 0) << one.out;
    EXPECT_TRUE(fs::exists(root / "one/restored.png"));
    EXPECT_TRUE(fs::exists(root / "one/comparison.png"));
    EXPECT_EQ(slurp(root / "one/restored.png"), slurp(root / "out/restored_diffusion.png"));
}

TEST_F(Cli, ExperimentCsvIsByteIdenticalAcrossRuns) {
    const RasterImage img = fixtures::dead_leaves(64, 64, 5);
    io::write_png(root / "img.png", img);
    const fs::path cfg = write_config(R"({"experiment": {"images": ["img.png"]}, "masks": {"count": 8}})");
    const std::string base = "experiment -c " + cfg.string() + " --backend diffusion --backend patch ";
    const std::string args = base + "--seed 11 --out-dir ";
    const CliRun a = droste_cli(args + (root / "a").string());
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(droste_cli(args + (root / "b").string() + " --workers 2").code, 0);
    EXPECT_EQ(slurp(root / "a/records.csv"), slurp(root / "b/records.csv"));
    EXPECT_EQ(slurp(root / "a/means.csv"), slurp(root / "b/means.csv"));
    EXPECT_EQ(slurp(root / "a/anova.csv"), slurp(root / "b/anova.csv"));
    EXPECT_TRUE(fs::exists(root / "a/timings.csv"));
    const std::string report = slurp(root / "a/report.md");
    EXPECT_NE(report.find("| Method | Brisque ↓ | DOM ↑ |"), std::string::npos);
    EXPECT_NE(report.find("| Method | Fvalue | Fcrit | RH0 |"), std::string::npos);

    const CliRun rep = droste_cli("report --records " + (root / "a/records.csv").string() + " --out-dir " +
                               (root / "rep").string());
    ASSERT_EQ(rep.code, 0) << rep.out;
    EXPECT_EQ(slurp(root / "rep/report.md"), report);
    EXPECT_EQ(slurp(root / "rep/anova.csv"), slurp(root / "a/anova.csv"));

    const CliRun other = droste_cli(base + "--seed 12 --out-dir " + (root / "c").string());
    ASSERT_EQ(other.code, 0);
    EXPECT_NE(slurp(root / "c/records.csv"), slurp(root / "a/records.csv"));
}

TEST_F(Cli, ExperimentAllFailedExitsThree) {
    io::write_png(root / "img.png", fixtures::dead_leaves(48, 48, 5, 20.0, 1));
    const fs::path cfg = write_config(
        std::string(R"({"experiment": {"images": ["img.png"]}, "masks": {"count": 2}, "metrics": ["dom"],
                       "backends": [{"name": "bad", "kind": "external", "command": ")") +
        DROSTE_MOCK_BACKEND + R"( fail {input} {mask} {output}"}]})");
    const CliRun r = droste_cli("experiment -c " + cfg.string() + " --out-dir " + (root / "out").string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_TRUE(fs::exists(root / "out/records.csv"));
}
