#include "diffpath/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace diffpath {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'T', 'N'};

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

template <typename T> void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T> T read_pod(std::ifstream& in, const char* what) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError(std::string("truncated tensor file while reading ") + what);
    return value;
}

} // namespace

TensorSection& TensorFile::add(std::string name, std::vector<std::uint64_t> dims) {
    TensorSection section;
    section.name = std::move(name);
    section.dims = std::move(dims);
    section.data.resize(section.element_count());
    sections.push_back(std::move(section));
    return sections.back();
}

const TensorSection* TensorFile::find(std::string_view name) const noexcept {
    for (const TensorSection& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const TensorSection& TensorFile::get(std::string_view name) const {
    if (const TensorSection* s = find(name)) return *s;
    throw DataError("tensor file is missing section '" + std::string(name) + "'");
}

void TensorFile::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sections.size()));
    for (const TensorSection& s : sections) {
        if (s.data.size() != s.element_count())
            throw DataError("section '" + s.name + "' payload does not match dims");
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
        out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
        for (std::uint64_t d : s.dims) write_pod<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(s.data.data()),
                  static_cast<std::streamsize>(s.data.size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

TensorFile TensorFile::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad magic, not a tensor file: " + path.string());
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw DataError("unsupported tensor file version " + std::to_string(version) +
                        " (expected " + std::to_string(kVersion) + "): " + path.string());
    const auto count = read_pod<std::uint32_t>(in, "section count");
    TensorFile file;
    file.sections.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorSection s;
        const auto name_len = read_pod<std::uint32_t>(in, "section name length");
        s.name.resize(name_len);
        in.read(s.name.data(), name_len);
        if (!in) throw DataError("truncated tensor file while reading section name");
        const auto ndims = read_pod<std::uint32_t>(in, "ndims");
        s.dims.resize(ndims);
        for (std::uint32_t d = 0; d < ndims; ++d) s.dims[d] = read_pod<std::uint64_t>(in, "dims");
        const std::uint64_t elems = s.element_count();
        if (elems > std::numeric_limits<std::uint32_t>::max())
            throw DataError("section '" + s.name + "' is implausibly large");
        s.data.resize(elems);
        in.read(reinterpret_cast<char*>(s.data.data()),
                static_cast<std::streamsize>(elems * sizeof(float)));
        if (!in) throw DataError("truncated payload in section '" + s.name + "'");
        file.sections.push_back(std::move(s));
    }
    return file;
}

void section_from_matrix(TensorSection& section, const Matrix& m) {
    section.dims = {m.rows(), m.cols()};
    section.data.resize(m.data().size());
    for (std::size_t i = 0; i < m.data().size(); ++i)
        section.data[i] = static_cast<float>(m.data()[i]);
}

Matrix matrix_from_section(const TensorSection& section) {
    if (section.dims.size() != 2)
        throw DataError("section '" + section.name + "' is not a matrix");
    Matrix m(static_cast<std::size_t>(section.dims[0]), static_cast<std::size_t>(section.dims[1]));
    for (std::size_t i = 0; i < m.data().size(); ++i) m.data()[i] = section.data[i];
    return m;
}

void section_from_vec(TensorSection& section, const Vec& v) {
    section.dims = {v.size()};
    section.data.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) section.data[i] = static_cast<float>(v[i]);
}

Vec vec_from_section(const TensorSection& section) {
    Vec v(section.data.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = section.data[i];
    return v;
}

} // namespace diffpath
