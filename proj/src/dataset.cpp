#include "diffpath/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "diffpath/rng.hpp"
#include "diffpath/tensor_file.hpp"

namespace diffpath {

void Dataset::validate() const {
    if (!samples.all_finite()) throw DataError("dataset '" + name + "' has non-finite entries");
    if (shape) {
        const auto [h, w, c] = *shape;
        require(h >= 1 && w >= 1 && c >= 1, "invalid image shape");
        if (static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                static_cast<std::size_t>(c) !=
            samples.cols())
            throw DataError("dataset '" + name + "' shape does not match row width");
    }
}

ToyKind toy_kind_from_name(std::string_view name) {
    if (name == "gaussian") return ToyKind::gaussian;
    if (name == "gmm") return ToyKind::gmm;
    if (name == "ring") return ToyKind::ring;
    if (name == "moons") return ToyKind::moons;
    throw std::invalid_argument("unknown dataset kind: " + std::string(name));
}

Dataset generate_toy_dataset(ToyKind kind, const ToyParams& params, int n, std::uint64_t seed) {
    require(n >= 1, "need at least one sample");
    Rng rng(seed);
    Dataset out;

    switch (kind) {
    case ToyKind::gaussian: {
        const int d = params.mean.empty() ? params.dim : static_cast<int>(params.mean.size());
        require(d >= 1, "dimension must be positive");
        require(params.stddev > 0.0, "stddev must be positive");
        out.samples = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
        out.name = "gaussian";
        for (std::size_t i = 0; i < out.samples.rows(); ++i)
            for (std::size_t j = 0; j < out.samples.cols(); ++j) {
                const double mu = params.mean.empty() ? 0.0 : params.mean[j];
                out.samples(i, j) = mu + params.stddev * rng.normal();
            }
        break;
    }
    case ToyKind::gmm: {
        const GaussianMixtureSpec& spec = params.mixture;
        spec.validate();
        out.samples = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(spec.dim()));
        out.name = "gmm";
        for (std::size_t i = 0; i < out.samples.rows(); ++i) {
            double u = rng.uniform();
            std::size_t comp = spec.weights.size() - 1;
            for (std::size_t k = 0; k < spec.weights.size(); ++k) {
                if (u < spec.weights[k]) {
                    comp = k;
                    break;
                }
                u -= spec.weights[k];
            }
            for (std::size_t j = 0; j < out.samples.cols(); ++j)
                out.samples(i, j) =
                    spec.means(comp, j) + std::sqrt(spec.variances(comp, j)) * rng.normal();
        }
        break;
    }
    case ToyKind::ring: {
        require(params.radius > 0.0 && params.ring_sigma >= 0.0, "invalid ring parameters");
        out.samples = Matrix(static_cast<std::size_t>(n), 2);
        out.name = "ring";
        for (std::size_t i = 0; i < out.samples.rows(); ++i) {
            const double angle = 6.283185307179586476925286766559 * rng.uniform();
            // radial noise truncated at 3.5 sigma, so every norm stays
            // within radius +- 4 sigma
            double z = rng.normal();
            while (std::abs(z) > 3.5) z = rng.normal();
            const double r = params.radius + params.ring_sigma * z;
            out.samples(i, 0) = r * std::cos(angle);
            out.samples(i, 1) = r * std::sin(angle);
        }
        break;
    }
    case ToyKind::moons: {
        require(params.moons_noise >= 0.0, "invalid moons noise");
        out.samples = Matrix(static_cast<std::size_t>(n), 2);
        out.name = "moons";
        for (std::size_t i = 0; i < out.samples.rows(); ++i) {
            const double angle = 3.14159265358979323846 * rng.uniform();
            const bool upper = (i % 2) == 0;
            double x = std::cos(angle), y = std::sin(angle);
            if (!upper) {
                x = 1.0 - x;
                y = 0.5 - y;
            }
            out.samples(i, 0) = x + params.moons_noise * rng.normal();
            out.samples(i, 1) = y + params.moons_noise * rng.normal();
        }
        break;
    }
    }
    out.validate();
    return out;
}

Dataset negate_dataset(const Dataset& base) {
    Dataset out = base;
    out.name = "negated(" + base.name + ")";
    for (double& v : out.samples.data()) v = -v;
    return out;
}

namespace {

Dataset load_csv_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<Vec> rows;
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        Vec row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string cell = line.substr(pos, comma - pos);
            if (!cell.empty()) {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str()) {
                    if (rows.empty() && width == 0) {
                        row.clear(); // header line, skip it
                        break;
                    }
                    throw DataError("non-numeric cell '" + cell + "' in " + path.string());
                }
                row.push_back(v);
            }
            pos = comma + 1;
        }
        if (row.empty()) continue;
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw DataError("ragged row " + std::to_string(rows.size() + 1) + " in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no samples in " + path.string());
    Dataset out;
    out.samples = Matrix(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), out.samples.row(i).begin());
    out.name = path.stem().string();
    out.validate();
    return out;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    if (path.extension() == ".dptn") {
        const TensorFile file = TensorFile::read(path);
        const TensorSection& samples = file.get("samples");
        Dataset out;
        out.name = path.stem().string();
        if (samples.dims.size() == 2) {
            out.samples = matrix_from_section(samples);
        } else if (samples.dims.size() == 4) {
            const auto n = static_cast<std::size_t>(samples.dims[0]);
            const auto h = static_cast<int>(samples.dims[1]);
            const auto w = static_cast<int>(samples.dims[2]);
            const auto c = static_cast<int>(samples.dims[3]);
            out.samples = Matrix(n, static_cast<std::size_t>(h) * w * c);
            for (std::size_t i = 0; i < samples.data.size(); ++i)
                out.samples.data()[i] = samples.data[i];
            out.shape = {h, w, c};
        } else {
            throw DataError("samples section must be rank 2 or 4: " + path.string());
        }
        out.validate();
        return out;
    }
    return load_csv_dataset(path);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    TensorFile file;
    TensorSection& samples = file.add("samples", {});
    if (dataset.shape) {
        const auto [h, w, c] = *dataset.shape;
        samples.dims = {dataset.samples.rows(), static_cast<std::uint64_t>(h),
                        static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(c)};
        samples.data.resize(dataset.samples.data().size());
        for (std::size_t i = 0; i < samples.data.size(); ++i)
            samples.data[i] = static_cast<float>(dataset.samples.data()[i]);
    } else {
        section_from_matrix(samples, dataset.samples);
    }
    file.write(path);
}

namespace {

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

} // namespace

Matrix resize_bilinear(const Matrix& images, int h, int w, int c, int out_h, int out_w) {
    require(h >= 1 && w >= 1 && c >= 1 && out_h >= 1 && out_w >= 1, "invalid resize shape");
    require(images.cols() == static_cast<std::size_t>(h) * w * c, "image width mismatch");
    Matrix out(images.rows(), static_cast<std::size_t>(out_h) * out_w * c);
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (std::size_t img = 0; img < images.rows(); ++img) {
        const double* src = images.row(img).data();
        double* dst = out.row(img).data();
        for (int oy = 0; oy < out_h; ++oy) {
            double fy = (oy + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            fy -= y0;
            int y1 = y0 + 1;
            if (y0 < 0) y0 = 0;
            if (y1 < 0) y1 = 0;
            if (y0 > h - 1) y0 = h - 1;
            if (y1 > h - 1) y1 = h - 1;
            for (int ox = 0; ox < out_w; ++ox) {
                double fx = (ox + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                fx -= x0;
                int x1 = x0 + 1;
                if (x0 < 0) x0 = 0;
                if (x1 < 0) x1 = 0;
                if (x0 > w - 1) x0 = w - 1;
                if (x1 > w - 1) x1 = w - 1;
                for (int ch = 0; ch < c; ++ch) {
                    const double p00 = src[(static_cast<std::size_t>(y0) * w + x0) * c + ch];
                    const double p01 = src[(static_cast<std::size_t>(y0) * w + x1) * c + ch];
                    const double p10 = src[(static_cast<std::size_t>(y1) * w + x0) * c + ch];
                    const double p11 = src[(static_cast<std::size_t>(y1) * w + x1) * c + ch];
                    dst[(static_cast<std::size_t>(oy) * out_w + ox) * c + ch] =
                        lerp(lerp(p00, p01, fx), lerp(p10, p11, fx), fy);
                }
            }
        }
    }
    return out;
}

std::pair<Dataset, Dataset> resize_equalized(const Dataset& a, const Dataset& b, int model_res) {
    require(model_res >= 1, "model resolution must be positive");
    require(a.shape.has_value() && b.shape.has_value(), "both datasets need image shapes");
    const auto [ah, aw, ac] = *a.shape;
    const auto [bh, bw, bc] = *b.shape;
    require(ah == aw && bh == bw, "images must be square");
    require(ac == bc, "channel counts must match");
    const int low_res = std::min(ah, bh);

    auto equalize = [&](const Dataset& src, int res) {
        Dataset out = src;
        Matrix working = src.samples;
        int cur = res;
        if (cur > low_res) { // downsample the higher-resolution side first
            working = resize_bilinear(working, cur, cur, ac, low_res, low_res);
            cur = low_res;
        }
        if (cur != model_res) working = resize_bilinear(working, cur, cur, ac, model_res, model_res);
        out.samples = std::move(working);
        out.shape = {{model_res, model_res, ac}};
        return out;
    };
    return {equalize(a, ah), equalize(b, bh)};
}

} // namespace diffpath
