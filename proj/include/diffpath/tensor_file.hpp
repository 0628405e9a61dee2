#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "diffpath/common.hpp"

namespace diffpath {

// Named-section tensor container. Layout, all little-endian:
//   magic "DPTN" | version u32 | section_count u32
//   per section: name_len u32 | name bytes | ndims u32 | dims u64[ndims]
//                | payload f32[prod(dims)] row-major
struct TensorSection {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;

    std::uint64_t element_count() const noexcept {
        std::uint64_t n = 1;
        for (std::uint64_t d : dims) n *= d;
        return n;
    }
};

struct TensorFile {
    static constexpr std::uint32_t kVersion = 1;

    std::vector<TensorSection> sections;

    TensorSection& add(std::string name, std::vector<std::uint64_t> dims);
    const TensorSection* find(std::string_view name) const noexcept;
    // Throws DataError when the section is missing.
    const TensorSection& get(std::string_view name) const;

    void write(const std::filesystem::path& path) const;
    // Throws DataError on bad magic, unsupported version, or truncation.
    static TensorFile read(const std::filesystem::path& path);
};

// double <-> f32 section bridges
void section_from_matrix(TensorSection& section, const Matrix& m);
Matrix matrix_from_section(const TensorSection& section);
void section_from_vec(TensorSection& section, const Vec& v);
Vec vec_from_section(const TensorSection& section);

} // namespace diffpath
