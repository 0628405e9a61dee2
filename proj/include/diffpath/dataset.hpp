#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "diffpath/common.hpp"
#include "diffpath/score_model.hpp"

namespace diffpath {

// Rows are flattened samples; images carry their H x W x C shape so resizing
// can reinterpret rows.
struct Dataset {
    Matrix samples;
    std::string name;
    std::optional<std::array<int, 3>> shape; // H, W, C

    int dim() const noexcept { return static_cast<int>(samples.cols()); }
    std::size_t size() const noexcept { return samples.rows(); }
    void validate() const;
};

enum class ToyKind { gaussian, gmm, ring, moons };
ToyKind toy_kind_from_name(std::string_view name);

struct ToyParams {
    int dim = 2;
    Vec mean;              // gaussian; defaults to zeros
    double stddev = 1.0;   // gaussian
    GaussianMixtureSpec mixture; // gmm; empty means unset
    double radius = 3.0;       // ring
    double ring_sigma = 0.1;   // ring: radial noise
    double moons_noise = 0.1;  // moons
};

Dataset generate_toy_dataset(ToyKind kind, const ToyParams& params, int n, std::uint64_t seed);

// -1 times every sample; shape metadata is preserved.
Dataset negate_dataset(const Dataset& base);

// CSV (headerless numeric rows) or tensor container, by extension ".dptn".
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Bilinear resample of every row-image to out_h x out_w, half-pixel-center
// alignment. Exact on constant images.
Matrix resize_bilinear(const Matrix& images, int h, int w, int c, int out_h, int out_w);

// Resolution equalization: the higher-resolution set is first downsampled to
// the other set's native resolution, then both are upsampled to
// model_res x model_res. Requires square images.
std::pair<Dataset, Dataset> resize_equalized(const Dataset& a, const Dataset& b, int model_res);

} // namespace diffpath
