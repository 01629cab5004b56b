#pragma once

// Hole filling: harmonic diffusion, exemplar patch copy, and an external
// process backend (file-in, file-out) for third-party models.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>
#include <fcntl.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "droste/image_io.hpp"
#include "droste/masking.hpp"
#include "droste/raster.hpp"

namespace droste {

enum class BackendKind { diffusion, patch, external };

inline std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::diffusion: return "diffusion";
        case BackendKind::patch: return "patch";
        case BackendKind::external: return "external";
    }
    return "diffusion";
}

inline BackendKind parse_backend_kind(const std::string& s) {
    if (s == "diffusion") return BackendKind::diffusion;
    if (s == "patch") return BackendKind::patch;
    if (s == "external") return BackendKind::external;
    throw ConfigError("unknown backend kind '" + s + "' (diffusion|patch|external)");
}

struct BackendDescriptor {
    BackendKind kind = BackendKind::diffusion;
    std::string name = "diffusion";
    std::string command_template;               // external only
    std::map<std::string, std::string> params;  // free-form, parsed per kind

    static constexpr std::array<const char*, 3> kPlaceholders = {"{input}", "{mask}", "{output}"};

    double param_or(const std::string& key, double fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("backend '" + name + "': parameter " + key + " is not a number: " + it->second);
        }
    }

    bool flag_or(const std::string& key, bool fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("backend '" + name + "': parameter " + key + " must be true/false");
    }

    void validate() const {
        if (name.empty()) throw ConfigError("backend name must not be empty");
        for (char c : name) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
                throw ConfigError("backend name '" + name + "' may only contain [A-Za-z0-9_-]");
            }
        }
        if (kind != BackendKind::external) return;
        for (const char* ph : kPlaceholders) {
            const auto first = command_template.find(ph);
            if (first == std::string::npos) {
                throw ConfigError("backend '" + name + "': command template lacks " + std::string(ph));
            }
            if (command_template.find(ph, first + 1) != std::string::npos) {
                throw ConfigError("backend '" + name + "': placeholder " + std::string(ph) +
                                  " appears more than once");
            }
        }
    }
};

struct InpaintResult {
    RasterImage image;
    std::string backend;
    double wall_time = 0.0;  // seconds
    bool unmasked_preserved = false;
};

namespace detail {

inline bool unmasked_equal(const RasterImage& a, const RasterImage& b, const Mask& mask) {
    auto pa = a.pixels(), pb = b.pixels();
    auto m = mask.values();
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (m[i] != Mask::kHole && !(pa[i] == pb[i])) return false;
    return true;
}

inline void check_fill_inputs(const RasterImage& image, const Mask& mask, const char* who) {
    check_same_size(image, mask);
    if (mask.empty_hole()) throw ConfigError(std::string(who) + ": mask has no hole pixels");
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Harmonic diffusion

namespace detail {

// Per-channel values for the unknown pixels of one multigrid level.
struct DiffusionLevel {
    int w = 0, h = 0;
    std::vector<std::uint8_t> unknown;   // 1 = solve here
    std::vector<std::uint8_t> usable;    // 1 = known value (boundary data)
    std::array<std::vector<double>, 3> v;
};

inline DiffusionLevel coarsen(const DiffusionLevel& f) {
    DiffusionLevel c;
    c.w = (f.w + 1) / 2;
    c.h = (f.h + 1) / 2;
    const std::size_t n = std::size_t(c.w) * c.h;
    c.unknown.assign(n, 0);
    c.usable.assign(n, 0);
    for (auto& ch : c.v) ch.assign(n, 0.0);
    for (int y = 0; y < c.h; ++y) {
        for (int x = 0; x < c.w; ++x) {
            std::array<double, 3> sum{};
            int known = 0, holes = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int fx = 2 * x + dx, fy = 2 * y + dy;
                    if (fx >= f.w || fy >= f.h) continue;
                    const std::size_t i = std::size_t(fy) * f.w + fx;
                    if (f.usable[i]) {
                        ++known;
                        for (int k = 0; k < 3; ++k) sum[k] += f.v[k][i];
                    } else if (f.unknown[i]) {
                        ++holes;
                    }
                }
            const std::size_t j = std::size_t(y) * c.w + x;
            if (known > 0) {
                c.usable[j] = 1;
                for (int k = 0; k < 3; ++k) c.v[k][j] = sum[k] / known;
            } else if (holes > 0) {
                c.unknown[j] = 1;
            }
        }
    }
    return c;
}

/// SOR Gauss-Seidel on the 5-point Laplacian; border neighbours outside the
/// image or without data are skipped (natural boundary). Returns the final
/// max residual and the sweep count.
inline std::pair<double, int> relax(DiffusionLevel& L, double tol, int max_iter, double omega) {
    std::vector<int> idx;
    for (int i = 0; i < L.w * L.h; ++i)
        if (L.unknown[i]) idx.push_back(i);
    if (idx.empty()) return {0.0, 0};
    auto residual = [&](int i, int k) {
        const int x = i % L.w, y = i / L.w;
        double s = 0.0;
        int n = 0;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& q : nb) {
            if (q[0] < 0 || q[1] < 0 || q[0] >= L.w || q[1] >= L.h) continue;
            const int j = q[1] * L.w + q[0];
            if (!L.unknown[j] && !L.usable[j]) continue;
            s += L.v[k][j];
            ++n;
        }
        return n ? s / n - L.v[k][i] : 0.0;
    };
    double worst = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        worst = 0.0;
        for (int i : idx)
            for (int k = 0; k < 3; ++k) {
                const double r = residual(i, k);
                worst = std::max(worst, std::abs(r));
                L.v[k][i] += omega * r;
            }
        if (worst < tol) {
            // Confirm on the settled state.
            double check = 0.0;
            for (int i : idx)
                for (int k = 0; k < 3; ++k) check = std::max(check, std::abs(residual(i, k)));
            worst = check;
            if (check < tol) return {check, it + 1};
        }
    }
    return {worst, it};
}

}  // namespace detail

struct DiffusionOptions {
    double tol = 1e-3;  // max |Laplacian residual|, 8-bit units
    int max_iter = 20000;
};

/// Fills every hole pixel with the discrete harmonic interpolant of the known
/// pixels around it (per RGB channel).
inline InpaintResult diffusion_fill(const RasterImage& image, const Mask& mask, const DiffusionOptions& opt = {}) {
    detail::check_fill_inputs(image, mask, "diffusion_fill");
    if (!(opt.tol > 0.0) || opt.max_iter < 1) throw ConfigError("diffusion_fill: tol > 0 and max_iter >= 1 required");
    const auto t0 = detail::Clock::now();
    const int w = image.width(), h = image.height();

    detail::DiffusionLevel fine;
    fine.w = w;
    fine.h = h;
    fine.unknown.assign(image.size(), 0);
    fine.usable.assign(image.size(), 0);
    for (auto& ch : fine.v) ch.assign(image.size(), 0.0);
    auto px = image.pixels();
    auto mv = mask.values();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (mv[i] == Mask::kHole) {
            fine.unknown[i] = 1;
        } else if (px[i].a != 0) {
            fine.usable[i] = 1;
            fine.v[0][i] = px[i].r;
            fine.v[1][i] = px[i].g;
            fine.v[2][i] = px[i].b;
        }
    }

    // Every 4-connected hole component must touch known data.
    {
        std::vector<int> comp(image.size(), -1), stack;
        for (int s = 0; s < w * h; ++s) {
            if (!fine.unknown[s] || comp[s] >= 0) continue;
            bool touches = false;
            comp[s] = s;
            stack.push_back(s);
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int x = p % w, y = p / w;
                const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
                for (const auto& q : nb) {
                    if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
                    const int j = q[1] * w + q[0];
                    if (fine.usable[j]) touches = true;
                    if (fine.unknown[j] && comp[j] < 0) {
                        comp[j] = s;
                        stack.push_back(j);
                    }
                }
            }
            if (!touches) {
                throw UnsupportedInput("diffusion_fill: hole component at (" + std::to_string(s % w) + ", " +
                                       std::to_string(s / w) + ") has no known boundary pixels");
            }
        }
    }

    // Coarse-to-fine: solve on a pyramid and prolong as the initial guess.
    std::vector<detail::DiffusionLevel> pyr{fine};
    while (std::min(pyr.back().w, pyr.back().h) > 16) pyr.push_back(detail::coarsen(pyr.back()));
    for (int l = int(pyr.size()) - 1; l >= 0; --l) {
        auto& L = pyr[l];
        if (l + 1 < int(pyr.size())) {
            const auto& C = pyr[l + 1];
            for (int y = 0; y < L.h; ++y)
                for (int x = 0; x < L.w; ++x) {
                    const std::size_t i = std::size_t(y) * L.w + x;
                    if (!L.unknown[i]) continue;
                    const std::size_t j = std::size_t(y / 2) * C.w + x / 2;
                    for (int k = 0; k < 3; ++k) L.v[k][i] = C.v[k][j];
                }
        }
        const double size = std::max(L.w, L.h);
        const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / size));
        const bool finest = l == 0;
        detail::relax(L, finest ? opt.tol : std::max(opt.tol, 1e-2), opt.max_iter, std::min(omega, 1.95));
    }

    InpaintResult res{image, "diffusion", 0.0, false};
    auto out = res.image.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!pyr[0].unknown[i]) continue;
        out[i] = {quantize(pyr[0].v[0][i]), quantize(pyr[0].v[1][i]), quantize(pyr[0].v[2][i]), 255};
    }
    res.unmasked_preserved = detail::unmasked_equal(image, res.image, mask);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

// ---------------------------------------------------------------------------
// Exemplar patch copy

struct PatchOptions {
    int patch_size = 7;      // odd
    int search_radius = 32;  // source window half-size around the target; 0 = whole image
};

/// Onion-peel exemplar fill. Each peel visits the current hole front in raster
/// order; the patch around a front pixel takes the unknown pixels of the
/// best SSD match among fully known source patches.
inline InpaintResult patch_fill(const RasterImage& image, const Mask& mask, const PatchOptions& opt = {}) {
    detail::check_fill_inputs(image, mask, "patch_fill");
    if (opt.patch_size < 3 || opt.patch_size % 2 == 0) throw ConfigError("patch_fill: patch_size must be odd and >= 3");
    if (opt.search_radius < 0) throw ConfigError("patch_fill: search_radius must be >= 0");
    const auto t0 = detail::Clock::now();
    const int w = image.width(), h = image.height(), r = opt.patch_size / 2;

    std::vector<std::uint8_t> orig(image.size(), 0), have(image.size(), 0);
    auto src_px = image.pixels();
    for (std::size_t i = 0; i < orig.size(); ++i)
        orig[i] = have[i] = (mask.values()[i] != Mask::kHole && src_px[i].a != 0) ? 1 : 0;

    // Summed-area table of "not originally known" to test full source patches in O(1).
    std::vector<int> sat(std::size_t(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            sat[std::size_t(y + 1) * (w + 1) + x + 1] = (orig[std::size_t(y) * w + x] ? 0 : 1) +
                                                       sat[std::size_t(y) * (w + 1) + x + 1] +
                                                       sat[std::size_t(y + 1) * (w + 1) + x] -
                                                       sat[std::size_t(y) * (w + 1) + x];
    std::vector<std::uint8_t> source_ok(image.size(), 0);
    bool any_source = false;
    for (int y = r; y < h - r; ++y)
        for (int x = r; x < w - r; ++x) {
            const int x0 = x - r, y0 = y - r, x1 = x + r + 1, y1 = y + r + 1;
            const int bad = sat[std::size_t(y1) * (w + 1) + x1] - sat[std::size_t(y0) * (w + 1) + x1] -
                            sat[std::size_t(y1) * (w + 1) + x0] + sat[std::size_t(y0) * (w + 1) + x0];
            if (bad == 0) {
                source_ok[std::size_t(y) * w + x] = 1;
                any_source = true;
            }
        }
    if (!any_source) throw UnsupportedInput("patch_fill: no fully known source patch exists");

    InpaintResult res{image, "patch", 0.0, false};
    RasterImage& out = res.image;

    auto ssd_at = [&](int tx, int ty, int sx, int sy, long best) {
        long s = 0;
        for (int dy = -r; dy <= r; ++dy) {
            const int yy = ty + dy;
            if (yy < 0 || yy >= h) continue;
            for (int dx = -r; dx <= r; ++dx) {
                const int xx = tx + dx;
                if (xx < 0 || xx >= w || !have[std::size_t(yy) * w + xx]) continue;
                const Rgba& a = out.at(xx, yy);
                const Rgba& b = image.at(sx + dx, sy + dy);
                const long dr = long(a.r) - b.r, dg = long(a.g) - b.g, db = long(a.b) - b.b;
                s += dr * dr + dg * dg + db * db;
            }
            if (s >= best) return s;  // early abandon; ties keep the earlier source
        }
        return s;
    };

    auto best_source = [&](int tx, int ty) {
        long best = std::numeric_limits<long>::max();
        int bx = -1, by = -1;
        int rad = opt.search_radius;
        for (;;) {
            const bool global = rad == 0 || rad >= std::max(w, h);
            const int y0 = global ? r : std::max(r, ty - rad), y1 = global ? h - r - 1 : std::min(h - r - 1, ty + rad);
            const int x0 = global ? r : std::max(r, tx - rad), x1 = global ? w - r - 1 : std::min(w - r - 1, tx + rad);
            for (int sy = y0; sy <= y1; ++sy)
                for (int sx = x0; sx <= x1; ++sx) {
                    if (!source_ok[std::size_t(sy) * w + sx]) continue;
                    const long s = ssd_at(tx, ty, sx, sy, best);
                    if (s < best) {
                        best = s;
                        bx = sx;
                        by = sy;
                    }
                }
            if (bx >= 0 || global) break;
            rad *= 2;
        }
        return std::array<int, 2>{bx, by};
    };

    std::vector<int> front;
    for (;;) {
        front.clear();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = std::size_t(y) * w + x;
                if (have[i] || mask.values()[i] != Mask::kHole) continue;
                bool edge = false;
                for (int dy = -1; dy <= 1 && !edge; ++dy)
                    for (int dx = -1; dx <= 1 && !edge; ++dx) {
                        const int qx = x + dx, qy = y + dy;
                        if (qx >= 0 && qy >= 0 && qx < w && qy < h && have[std::size_t(qy) * w + qx]) edge = true;
                    }
                if (edge) front.push_back(int(i));
            }
        if (front.empty()) break;
        for (int i : front) {
            if (have[i]) continue;
            const int tx = i % w, ty = i / w;
            const auto [sx, sy] = best_source(tx, ty);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = tx + dx, yy = ty + dy;
                    if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                    const std::size_t j = std::size_t(yy) * w + xx;
                    if (have[j] || mask.values()[j] != Mask::kHole) continue;
                    out.at(xx, yy) = image.at(sx + dx, sy + dy);
                    have[j] = 1;
                }
        }
    }
    // Hole pixels with no path to known data (isolated by alpha-0 regions) cannot be reached.
    for (std::size_t i = 0; i < have.size(); ++i)
        if (!have[i] && mask.values()[i] == Mask::kHole)
            throw UnsupportedInput("patch_fill: hole region not reachable from known pixels");

    res.unmasked_preserved = detail::unmasked_equal(image, out, mask);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

// ---------------------------------------------------------------------------
// External process backend

struct ExternalOptions {
    std::filesystem::path work_dir;  // created if missing; one invocation at a time
    double timeout_s = 600.0;
    bool restore_unmasked = true;
};

namespace detail {

inline std::string replace_once(std::string s, const std::string& key, const std::string& value) {
    const auto pos = s.find(key);
    if (pos != std::string::npos) s.replace(pos, key.size(), value);
    return s;
}

inline std::string read_text(const std::filesystem::path& p, std::size_t limit = 8192) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (s.size() > limit) s = "..." + s.substr(s.size() - limit);
    return s;
}

}  // namespace detail

/// Runs `desc.command_template` through /bin/sh with the placeholders replaced
/// by paths in the work directory, then reads the output PNG back.
inline InpaintResult run_external(const BackendDescriptor& desc, const RasterImage& image, const Mask& mask,
                                  const ExternalOptions& opt) {
    desc.validate();
    if (desc.kind != BackendKind::external) throw ConfigError("run_external: backend is not external");
    check_same_size(image, mask);
    if (opt.work_dir.empty()) throw ConfigError("run_external: work directory required");
    const auto t0 = detail::Clock::now();
    namespace fs = std::filesystem;
    fs::create_directories(opt.work_dir);
    const fs::path in = fs::absolute(opt.work_dir / "in.png");
    const fs::path mk = fs::absolute(opt.work_dir / "mask.png");
    const fs::path outp = fs::absolute(opt.work_dir / "out.png");
    const fs::path log = fs::absolute(opt.work_dir / "backend.log");
    fs::remove(outp);
    io::write_png(in, image);
    io::write_mask(mk, mask);

    std::string cmd = desc.command_template;
    cmd = detail::replace_once(cmd, "{input}", in.string());
    cmd = detail::replace_once(cmd, "{mask}", mk.string());
    cmd = detail::replace_once(cmd, "{output}", outp.string());

    const pid_t pid = fork();
    if (pid < 0) throw BackendError("backend '" + desc.name + "': fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDERR_FILENO);
            close(fd);
        }
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            dup2(devnull, STDIN_FILENO);
            close(devnull);
        }
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);

    int status = 0;
    bool timed_out = false;
    for (;;) {
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) throw BackendError("backend '" + desc.name + "': waitpid failed");
        if (detail::seconds_since(t0) > opt.timeout_s) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    const std::string diag = detail::read_text(log);
    if (timed_out) {
        throw BackendError("backend '" + desc.name + "' timed out after " + std::to_string(opt.timeout_s) + " s", diag);
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        throw BackendError("backend '" + desc.name + "' exited with status " + std::to_string(code), diag);
    }
    if (!fs::exists(outp)) throw BackendError("backend '" + desc.name + "' produced no output file", diag);

    RasterImage result;
    try {
        result = io::read_image(outp);
    } catch (const Error& e) {
        throw BackendError("backend '" + desc.name + "': unreadable output: " + e.what(), diag);
    }
    if (result.width() != image.width() || result.height() != image.height()) {
        throw BackendError("backend '" + desc.name + "': output is " + std::to_string(result.width()) + "x" +
                               std::to_string(result.height()) + ", expected " + std::to_string(image.width()) +
                               "x" + std::to_string(image.height()),
                           diag);
    }
    if (opt.restore_unmasked) {
        auto dst = result.pixels();
        auto src = image.pixels();
        auto m = mask.values();
        for (std::size_t i = 0; i < dst.size(); ++i)
            if (m[i] != Mask::kHole) dst[i] = src[i];
    }
    InpaintResult res{std::move(result), desc.name, 0.0, false};
    res.unmasked_preserved = detail::unmasked_equal(image, res.image, mask);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

/// Dispatches on the descriptor kind. Built-in parameters: tol, max_iter
/// (diffusion); patch_size, search_radius (patch); timeout, restore_unmasked (external).
inline InpaintResult run_backend(const BackendDescriptor& desc, const RasterImage& image, const Mask& mask,
                                 const std::filesystem::path& work_dir = {}) {
    desc.validate();
    InpaintResult r;
    switch (desc.kind) {
        case BackendKind::diffusion: {
            DiffusionOptions o;
            o.tol = desc.param_or("tol", o.tol);
            o.max_iter = int(desc.param_or("max_iter", o.max_iter));
            r = diffusion_fill(image, mask, o);
            break;
        }
        case BackendKind::patch: {
            PatchOptions o;
            o.patch_size = int(desc.param_or("patch_size", o.patch_size));
            o.search_radius = int(desc.param_or("search_radius", o.search_radius));
            r = patch_fill(image, mask, o);
            break;
        }
        case BackendKind::external: {
            ExternalOptions o;
            o.work_dir = work_dir.empty() ? std::filesystem::temp_directory_path() / ("droste_" + desc.name)
                                          : work_dir;
            o.timeout_s = desc.param_or("timeout", o.timeout_s);
            o.restore_unmasked = desc.flag_or("restore_unmasked", true);
            return run_external(desc, image, mask, o);
        }
    }
    r.backend = desc.name;
    return r;
}

}  // namespace droste
