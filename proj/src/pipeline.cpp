#include "qki/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <png.h>

#include "qki/common.hpp"
#include "qki/rng.hpp"

namespace qki {

const char* label_name(int label) {
    if (label == 1) return "defect";
    if (label == -1) return "good";
    throw std::invalid_argument("label must be +1 or -1");
}

int label_from_name(const std::string& name) {
    if (name == "defect") return 1;
    if (name == "good") return -1;
    throw io_error("unknown label '" + name + "' (expected good or defect)");
}

ImageSample to_grayscale(const ImageSample& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) {
        throw std::invalid_argument("grayscale conversion expects 1 or 3 channels");
    }
    ImageSample out;
    out.height = img.height;
    out.width = img.width;
    out.channels = 1;
    out.label = img.label;
    out.source_id = img.source_id;
    out.pixels.resize(static_cast<std::size_t>(img.height) * img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double y = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                             0.114 * img.at(r, c, 2);
            out.pixels[static_cast<std::size_t>(r) * img.width + c] =
                static_cast<uint8_t>(std::lround(y));
        }
    }
    return out;
}

ImageSample resize_area(const ImageSample& img, int out_h, int out_w) {
    if (img.channels != 1) throw std::invalid_argument("resize expects a single channel");
    if (img.height < 1 || img.width < 1 || out_h < 1 || out_w < 1) {
        throw std::invalid_argument("resize dimensions must be positive");
    }
    ImageSample out;
    out.height = out_h;
    out.width = out_w;
    out.channels = 1;
    out.label = img.label;
    out.source_id = img.source_id;
    out.pixels.resize(static_cast<std::size_t>(out_h) * out_w);

    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        const double y0 = r * sy, y1 = (r + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(static_cast<int>(std::ceil(y1)), img.height);
        for (int c = 0; c < out_w; ++c) {
            const double x0 = c * sx, x1 = (c + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(static_cast<int>(std::ceil(x1)), img.width);
            double acc = 0.0, wsum = 0.0;
            for (int iy = iy0; iy < iy1; ++iy) {
                const double wy = std::min(y1, iy + 1.0) - std::max(y0, static_cast<double>(iy));
                if (wy <= 0.0) continue;
                for (int ix = ix0; ix < ix1; ++ix) {
                    const double wx =
                        std::min(x1, ix + 1.0) - std::max(x0, static_cast<double>(ix));
                    if (wx <= 0.0) continue;
                    acc += wy * wx * img.at(iy, ix);
                    wsum += wy * wx;
                }
            }
            const long v = std::lround(acc / wsum);
            out.pixels[static_cast<std::size_t>(r) * out_w + c] =
                static_cast<uint8_t>(std::clamp(v, 0L, 255L));
        }
    }
    return out;
}

std::vector<double> flatten_pixels(const ImageSample& img) {
    if (img.channels != 1) throw std::invalid_argument("flatten expects a single channel");
    return std::vector<double>(img.pixels.begin(), img.pixels.end());
}

namespace {

void orthonormal_completion(Matrix& components, std::size_t row) {
    const std::size_t d = components.cols;
    // Deterministic fill-in for rank-deficient data: take the coordinate
    // axis with the largest residual after removing earlier components.
    double best_norm = -1.0;
    std::vector<double> best(d), w(d);
    for (std::size_t axis = 0; axis < d; ++axis) {
        std::fill(w.begin(), w.end(), 0.0);
        w[axis] = 1.0;
        for (std::size_t m = 0; m < row; ++m) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += components.at(m, j) * w[j];
            for (std::size_t j = 0; j < d; ++j) w[j] -= dot * components.at(m, j);
        }
        double norm2 = 0.0;
        for (double v : w) norm2 += v * v;
        if (norm2 > best_norm) {
            best_norm = norm2;
            best = w;
        }
    }
    const double norm = std::sqrt(best_norm);
    if (norm <= 0.0) throw std::invalid_argument("pca completion failed: zero residual space");
    for (std::size_t j = 0; j < d; ++j) components.at(row, j) = best[j] / norm;
}

void fix_component_sign(Matrix& components, std::size_t row) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < components.cols; ++j) {
        const double a = std::abs(components.at(row, j));
        if (a > best) {
            best = a;
            arg = j;
        }
    }
    if (components.at(row, arg) < 0.0) {
        for (std::size_t j = 0; j < components.cols; ++j) {
            components.at(row, j) = -components.at(row, j);
        }
    }
}

}  // namespace

PcaModel pca_fit(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows, d = x.cols;
    if (n < 2) throw std::invalid_argument("pca_fit needs at least 2 samples");
    if (k < 1 || k > std::min(n - 1, d)) {
        throw std::invalid_argument("pca component count must lie in [1, min(n-1, D)]");
    }

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += x.at(i, j);
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    Matrix xc(n, d);
    double total_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = x.at(i, j) - model.mean[j];
            xc.at(i, j) = v;
            total_sq += v * v;
        }
    }
    model.total_variance = total_sq / static_cast<double>(n - 1);
    model.components = Matrix(k, d);
    model.explained_variance.assign(k, 0.0);

    if (d <= n) {
        const SymmetricEigen eig = eigen_symmetric(matmul(transpose(xc), xc));
        for (std::size_t i = 0; i < k; ++i) {
            model.explained_variance[i] =
                std::max(eig.eigenvalues[i], 0.0) / static_cast<double>(n - 1);
            for (std::size_t j = 0; j < d; ++j) {
                model.components.at(i, j) = eig.eigenvectors.at(j, i);
            }
        }
    } else {
        const SymmetricEigen eig = eigen_symmetric(matmul(xc, transpose(xc)));
        const double rank_tol = std::max(eig.eigenvalues.front(), 0.0) * 1e-12;
        for (std::size_t i = 0; i < k; ++i) {
            const double mu = eig.eigenvalues[i];
            if (mu > rank_tol && mu > 0.0) {
                // Right singular direction v = Xc^T u / sqrt(mu).
                double norm2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    double v = 0.0;
                    for (std::size_t r = 0; r < n; ++r) {
                        v += xc.at(r, j) * eig.eigenvectors.at(r, i);
                    }
                    model.components.at(i, j) = v;
                    norm2 += v * v;
                }
                const double norm = std::sqrt(norm2);
                for (std::size_t j = 0; j < d; ++j) model.components.at(i, j) /= norm;
                model.explained_variance[i] = mu / static_cast<double>(n - 1);
            } else {
                orthonormal_completion(model.components, i);
                model.explained_variance[i] = 0.0;
            }
        }
    }
    for (std::size_t i = 0; i < k; ++i) fix_component_sign(model.components, i);
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols != model.dim()) {
        throw std::invalid_argument("pca_transform: feature width does not match model");
    }
    Matrix out(x.rows, model.k());
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t c = 0; c < model.k(); ++c) {
            double v = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j) {
                v += (x.at(i, j) - model.mean[j]) * model.components.at(c, j);
            }
            out.at(i, c) = v;
        }
    }
    return out;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& y) {
    if (y.cols != model.k()) {
        throw std::invalid_argument("pca_inverse_transform: width does not match model");
    }
    Matrix out(y.rows, model.dim());
    for (std::size_t i = 0; i < y.rows; ++i) {
        for (std::size_t j = 0; j < model.dim(); ++j) {
            double v = model.mean[j];
            for (std::size_t c = 0; c < model.k(); ++c) {
                v += y.at(i, c) * model.components.at(c, j);
            }
            out.at(i, j) = v;
        }
    }
    return out;
}

constexpr double kPi = 3.14159265358979323846;

ScalerModel scale_fit(const Matrix& train) {
    if (train.rows == 0 || train.cols == 0) {
        throw std::invalid_argument("scaler needs a nonempty matrix");
    }
    ScalerModel m;
    m.min.assign(train.cols, 0.0);
    m.max.assign(train.cols, 0.0);
    for (std::size_t j = 0; j < train.cols; ++j) {
        double lo = train.at(0, j), hi = train.at(0, j);
        for (std::size_t i = 1; i < train.rows; ++i) {
            lo = std::min(lo, train.at(i, j));
            hi = std::max(hi, train.at(i, j));
        }
        m.min[j] = lo;
        m.max[j] = hi;
    }
    return m;
}

Matrix scale_apply(const ScalerModel& model, const Matrix& x) {
    if (x.cols != model.min.size()) {
        throw std::invalid_argument("scaler width does not match input");
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double span = model.max[j] - model.min[j];
        for (std::size_t i = 0; i < x.rows; ++i) {
            double v = 0.0;
            if (span > 0.0) {
                v = (x.at(i, j) - model.min[j]) / span * kPi;
                v = std::clamp(v, 0.0, kPi);
            }
            out.at(i, j) = v;
        }
    }
    return out;
}

std::pair<ScalerModel, Matrix> scale_fit_transform(const Matrix& train) {
    ScalerModel m = scale_fit(train);
    return {m, scale_apply(m, train)};
}

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t n, uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    SplitMix64 rng(seed);
    // Fisher-Yates; hand-rolled so the result is identical on every platform.
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

std::size_t train_count(std::size_t n, double train_frac) {
    if (n < 2) throw std::invalid_argument("split needs at least 2 samples");
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw std::invalid_argument("train_frac must lie strictly between 0 and 1");
    }
    const auto n_train = static_cast<std::size_t>(std::lround(n * train_frac));
    if (n_train == 0 || n_train >= n) {
        throw std::invalid_argument("split leaves one side empty at this fraction");
    }
    return n_train;
}

}  // namespace

DatasetSplit split(std::size_t n, double train_frac, uint64_t seed) {
    const std::size_t n_train = train_count(n, train_frac);
    const auto perm = seeded_permutation(n, seed);
    DatasetSplit s;
    s.seed = seed;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.test.assign(perm.begin() + n_train, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

DatasetSplit split(const std::vector<int>& labels, double train_frac, uint64_t seed) {
    const std::size_t n = labels.size();
    const std::size_t n_train = train_count(n, train_frac);
    std::size_t count_neg = 0, count_pos = 0;
    for (int v : labels) {
        if (v == -1) ++count_neg;
        else if (v == 1) ++count_pos;
        else throw std::invalid_argument("labels must be +1 or -1");
    }

    // Largest-remainder quotas keep each class within one sample of its
    // proportional share.
    const double exact_neg = count_neg * train_frac;
    const double exact_pos = count_pos * train_frac;
    std::size_t quota_neg = static_cast<std::size_t>(std::floor(exact_neg));
    std::size_t quota_pos = static_cast<std::size_t>(std::floor(exact_pos));
    std::size_t remaining = n_train - std::min(n_train, quota_neg + quota_pos);
    const double rem_neg = exact_neg - std::floor(exact_neg);
    const double rem_pos = exact_pos - std::floor(exact_pos);
    while (remaining > 0) {
        if (rem_neg >= rem_pos && quota_neg < count_neg) ++quota_neg;
        else if (quota_pos < count_pos) ++quota_pos;
        else ++quota_neg;
        --remaining;
    }

    const auto perm = seeded_permutation(n, seed);
    DatasetSplit s;
    s.seed = seed;
    for (const std::size_t idx : perm) {
        std::size_t& quota = labels[idx] == -1 ? quota_neg : quota_pos;
        if (quota > 0) {
            s.train.push_back(idx);
            --quota;
        } else {
            s.test.push_back(idx);
        }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

namespace {

struct Housing {
    double cx, cy, hw, hh, radius;
    double bg, fill;
};

bool in_housing(double px, double py, const Housing& h) {
    const double dx = std::abs(px - h.cx) - (h.hw - h.radius);
    const double dy = std::abs(py - h.cy) - (h.hh - h.radius);
    const double qx = std::max(dx, 0.0), qy = std::max(dy, 0.0);
    return qx * qx + qy * qy <= h.radius * h.radius;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

struct Defect {
    int kind;  // 0 scratch, 1 hole, 2 clipped corner
    double a, b, c, d;
};

constexpr int kCanvas = 112;

}  // namespace

std::vector<ImageSample> generate_synthetic_corpus(int n, double defect_rate, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("corpus size must be >= 1");
    if (!(defect_rate >= 0.0 && defect_rate <= 1.0)) {
        throw std::invalid_argument("defect_rate must lie in [0, 1]");
    }
    const auto n_defect = static_cast<std::size_t>(std::lround(n * defect_rate));

    // Label stream is disjoint from every per-image stream (indices < n).
    std::vector<bool> defective(n, false);
    {
        const auto order = seeded_permutation(static_cast<std::size_t>(n),
                                              mix_seed(seed, uint64_t{1} << 32));
        for (std::size_t i = 0; i < n_defect; ++i) defective[order[i]] = true;
    }

    std::vector<ImageSample> out;
    out.reserve(n);
    for (int idx = 0; idx < n; ++idx) {
        SplitMix64 rng(mix_seed(seed, static_cast<uint64_t>(idx)));
        const auto uniform = [&](double lo, double hi) {
            return lo + rng.next_double() * (hi - lo);
        };

        Housing h;
        h.bg = 22.0 + static_cast<double>(rng.next_below(17));     // 30 +- 8
        h.fill = 175.0 + static_cast<double>(rng.next_below(31));  // 190 +- 15
        h.cx = uniform(53.0, 59.0);
        h.cy = uniform(53.0, 59.0);
        h.hw = uniform(36.0, 44.0);
        h.hh = uniform(28.0, 36.0);
        h.radius = uniform(9.0, 15.0);

        std::vector<Defect> defects;
        if (defective[idx]) {
            const int count = 1 + static_cast<int>(rng.next_below(3));
            for (int k = 0; k < count; ++k) {
                Defect d;
                d.kind = static_cast<int>(rng.next_below(3));
                switch (d.kind) {
                    case 0: {  // scratch through a random interior point
                        d.a = h.cx + uniform(-0.7, 0.7) * h.hw;
                        d.b = h.cy + uniform(-0.7, 0.7) * h.hh;
                        d.c = uniform(0.0, 2.0 * kPi);  // direction
                        d.d = 0.0;
                        break;
                    }
                    case 1: {  // hole
                        d.a = h.cx + uniform(-0.7, 0.7) * h.hw;
                        d.b = h.cy + uniform(-0.7, 0.7) * h.hh;
                        d.c = uniform(3.0, 6.0);  // radius
                        d.d = 0.0;
                        break;
                    }
                    default: {  // clipped corner
                        d.a = static_cast<double>(rng.next_below(4));
                        d.b = uniform(8.0, 16.0);  // cut size
                        d.c = d.d = 0.0;
                        break;
                    }
                }
                defects.push_back(d);
            }
        }

        ImageSample img;
        img.height = kCanvas;
        img.width = kCanvas;
        img.channels = 1;
        img.label = defective[idx] ? 1 : -1;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "synthetic-%04d", idx);
            img.source_id = buf;
        }
        img.pixels.resize(static_cast<std::size_t>(kCanvas) * kCanvas);

        // Mounting holes sit at fixed offsets inside the jittered shell.
        const double holes[2][2] = {{h.cx - (h.hw - 12.0), h.cy - (h.hh - 12.0)},
                                    {h.cx + (h.hw - 12.0), h.cy + (h.hh - 12.0)}};

        std::vector<double> canvas(static_cast<std::size_t>(kCanvas) * kCanvas);
        for (int y = 0; y < kCanvas; ++y) {
            for (int x = 0; x < kCanvas; ++x) {
                const double px = x, py = y;
                double v = h.bg;
                const bool inside = in_housing(px, py, h);
                if (inside) v = h.fill;
                for (const auto& hole : holes) {
                    const double dx = px - hole[0], dy = py - hole[1];
                    if (dx * dx + dy * dy <= 4.5 * 4.5) v = 45.0;
                }
                if (inside) {
                    for (const Defect& d : defects) {
                        switch (d.kind) {
                            case 0: {
                                const double ax = d.a - std::cos(d.c) * 60.0;
                                const double ay = d.b - std::sin(d.c) * 60.0;
                                const double bx = d.a + std::cos(d.c) * 60.0;
                                const double by = d.b + std::sin(d.c) * 60.0;
                                if (segment_distance(px, py, ax, ay, bx, by) <= 1.2) v = 60.0;
                                break;
                            }
                            case 1: {
                                const double dx = px - d.a, dy = py - d.b;
                                if (dx * dx + dy * dy <= d.c * d.c) v = h.bg;
                                break;
                            }
                            default: {
                                const int corner = static_cast<int>(d.a);
                                const double cx = corner % 2 == 0 ? h.cx - h.hw : h.cx + h.hw;
                                const double cy = corner < 2 ? h.cy - h.hh : h.cy + h.hh;
                                if (std::abs(px - cx) + std::abs(py - cy) <= d.b) v = h.bg;
                                break;
                            }
                        }
                    }
                }
                canvas[static_cast<std::size_t>(y) * kCanvas + x] = v;
            }
        }

        for (std::size_t p = 0; p < canvas.size(); ++p) {
            const double noisy = canvas[p] + static_cast<double>(rng.next_below(13)) - 6.0;
            img.pixels[p] = static_cast<uint8_t>(std::clamp(std::lround(noisy), 0L, 255L));
        }
        out.push_back(std::move(img));
    }
    return out;
}

// ---- image files ----

namespace {

int pnm_token(std::istream& in) {
    // Skips whitespace and '#' comments, then reads one unsigned int.
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw io_error("truncated PNM header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value) || value < 0) throw io_error("bad PNM header field");
    return value;
}

ImageSample read_pnm(std::ifstream& in, const std::string& path, int channels) {
    ImageSample img;
    img.channels = channels;
    img.width = pnm_token(in);
    img.height = pnm_token(in);
    const int maxval = pnm_token(in);
    if (img.width < 1 || img.height < 1) throw io_error("bad PNM dimensions in '" + path + "'");
    if (maxval != 255) throw io_error("only 8-bit PNM supported ('" + path + "')");
    in.get();  // single whitespace after maxval
    const std::size_t count =
        static_cast<std::size_t>(img.width) * img.height * channels;
    img.pixels.resize(count);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) {
        throw io_error("truncated pixel data in '" + path + "'");
    }
    return img;
}

ImageSample read_png_file(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw io_error("cannot open '" + path + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw io_error("png reader initialization failed");
    }

    ImageSample img;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw io_error("failed to decode PNG '" + path + "'");
    }

    png_init_io(png, fp);
    png_read_info(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_scale_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw io_error("unsupported channel layout in '" + path + "'");
    }
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    row_ptrs.resize(img.height);
    for (int r = 0; r < img.height; ++r) {
        row_ptrs[r] = img.pixels.data() +
                      static_cast<std::size_t>(r) * img.width * img.channels;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

}  // namespace

ImageSample read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2) throw io_error("file too short: '" + path + "'");
    if (magic[0] == 'P' && magic[1] == '5') return read_pnm(in, path, 1);
    if (magic[0] == 'P' && magic[1] == '6') return read_pnm(in, path, 3);
    if (magic[0] == '\x89' && magic[1] == 'P') {
        in.close();
        return read_png_file(path);
    }
    throw io_error("unrecognized image format in '" + path + "' (want PNG, P5, or P6)");
}

void write_pgm(const ImageSample& img, const std::string& path) {
    if (img.channels != 1) throw std::invalid_argument("PGM output expects a single channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

void write_png(const ImageSample& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw std::invalid_argument("PNG output expects 1 or 3 channels");
    }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw io_error("cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw io_error("png writer initialization failed");
    }
    std::vector<png_bytep> row_ptrs(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw io_error("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r) {
        row_ptrs[r] = const_cast<png_bytep>(
            img.pixels.data() + static_cast<std::size_t>(r) * img.width * img.channels);
    }
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// ---- manifests, features, model persistence ----

std::vector<ManifestEntry> read_manifest(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw io_error("cannot open '" + csv_path + "'");
    std::string line;
    if (!std::getline(in, line)) throw io_error("manifest '" + csv_path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,label") {
        throw io_error("manifest '" + csv_path + "' must start with header path,label");
    }
    const auto base = std::filesystem::path(csv_path).parent_path();
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0) {
            throw io_error("manifest '" + csv_path + "' line " + std::to_string(line_no) +
                           ": expected path,label");
        }
        ManifestEntry e;
        e.label = label_from_name(line.substr(comma + 1));
        const std::filesystem::path p(line.substr(0, comma));
        e.path = p.is_absolute() ? p.string() : (base / p).string();
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw io_error("manifest '" + csv_path + "' lists no images");
    return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw io_error("cannot open '" + csv_path + "' for writing");
    out << "path,label\n";
    for (const auto& e : entries) out << e.path << ',' << label_name(e.label) << '\n';
    if (!out.good()) throw io_error("write to '" + csv_path + "' failed");
}

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_features(const Matrix& x, const std::vector<int>& labels, const std::string& path) {
    if (x.rows != labels.size()) {
        throw std::invalid_argument("feature rows and label count differ");
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < x.cols; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) out << fmt_g17(x.at(i, j)) << ',';
        out << label_name(labels[i]) << '\n';
    }
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

FeatureSet load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw io_error("feature file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t cols = 0;
    {
        std::stringstream header(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(header, field, ',')) fields.push_back(field);
        if (fields.empty() || fields.back() != "label") {
            throw io_error("feature file '" + path + "' must end its header with label");
        }
        cols = fields.size() - 1;
        if (cols == 0) throw io_error("feature file '" + path + "' has no feature columns");
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != cols + 1) {
            throw io_error("feature file '" + path + "' line " + std::to_string(line_no) +
                           ": expected " + std::to_string(cols + 1) + " fields");
        }
        std::vector<double> row(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            try {
                std::size_t used = 0;
                row[j] = std::stod(cells[j], &used);
                if (used != cells[j].size()) throw std::invalid_argument(cells[j]);
            } catch (const std::exception&) {
                throw io_error("bad numeric cell '" + cells[j] + "' in '" + path + "'");
            }
        }
        labels.push_back(label_from_name(cells.back()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error("feature file '" + path + "' has no samples");

    FeatureSet fs;
    fs.x = Matrix(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) fs.x.at(i, j) = rows[i][j];
    }
    fs.labels = std::move(labels);
    return fs;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw io_error("matrix data size mismatch");
    return m;
}

template <typename T>
T parse_json_as(const std::string& text, const char* what, T (*decode)(const nlohmann::json&)) {
    try {
        return decode(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string(what) + ": " + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out.good()) throw io_error("write to '" + path + "' failed");
}

}  // namespace

std::string pca_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["mean"] = model.mean;
    j["components"] = matrix_to_json(model.components);
    j["explained_variance"] = model.explained_variance;
    j["total_variance"] = model.total_variance;
    return j.dump(2) + "\n";
}

PcaModel pca_from_json(const std::string& text) {
    return parse_json_as<PcaModel>(text, "bad PCA model JSON", [](const nlohmann::json& j) {
        PcaModel m;
        m.mean = j.at("mean").get<std::vector<double>>();
        m.components = matrix_from_json(j.at("components"));
        m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
        m.total_variance = j.at("total_variance").get<double>();
        if (m.components.cols != m.mean.size() ||
            m.explained_variance.size() != m.components.rows) {
            throw io_error("inconsistent PCA model dimensions");
        }
        return m;
    });
}

void save_pca(const PcaModel& model, const std::string& path) { spill(pca_to_json(model), path); }
PcaModel load_pca(const std::string& path) { return pca_from_json(slurp(path)); }

std::string scaler_to_json(const ScalerModel& model) {
    nlohmann::json j;
    j["min"] = model.min;
    j["max"] = model.max;
    return j.dump(2) + "\n";
}

ScalerModel scaler_from_json(const std::string& text) {
    return parse_json_as<ScalerModel>(text, "bad scaler JSON", [](const nlohmann::json& j) {
        ScalerModel m;
        m.min = j.at("min").get<std::vector<double>>();
        m.max = j.at("max").get<std::vector<double>>();
        if (m.min.size() != m.max.size()) throw io_error("scaler min/max lengths differ");
        return m;
    });
}

void save_scaler(const ScalerModel& model, const std::string& path) {
    spill(scaler_to_json(model), path);
}
ScalerModel load_scaler(const std::string& path) { return scaler_from_json(slurp(path)); }

std::string split_to_json(const DatasetSplit& s) {
    nlohmann::json j;
    j["train"] = s.train;
    j["test"] = s.test;
    j["seed"] = s.seed;
    return j.dump(2) + "\n";
}

DatasetSplit split_from_json(const std::string& text) {
    return parse_json_as<DatasetSplit>(text, "bad split JSON", [](const nlohmann::json& j) {
        DatasetSplit s;
        s.train = j.at("train").get<std::vector<std::size_t>>();
        s.test = j.at("test").get<std::vector<std::size_t>>();
        s.seed = j.at("seed").get<uint64_t>();
        return s;
    });
}

void save_split(const DatasetSplit& s, const std::string& path) { spill(split_to_json(s), path); }
DatasetSplit load_split(const std::string& path) { return split_from_json(slurp(path)); }

}  // namespace qki
