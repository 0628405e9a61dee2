#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "diffpath/tensor_file.hpp"

using namespace diffpath;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("diffpath_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("tensor file round trip is exact") {
    TempDir dir;
    const auto file_path = dir.path / "model.dptn";

    TensorFile file;
    TensorSection& a = file.add("alpha", {2, 3});
    for (std::size_t i = 0; i < 6; ++i) a.data[i] = static_cast<float>(i) * 0.25f - 1.0f;
    TensorSection& b = file.add("beta/values", {4});
    b.data = {1.5f, -2.0f, 0.0f, 3.25f};
    file.write(file_path);

    const TensorFile loaded = TensorFile::read(file_path);
    REQUIRE(loaded.sections.size() == 2);
    CHECK(loaded.get("alpha").dims == std::vector<std::uint64_t>{2, 3});
    CHECK(loaded.get("alpha").data == a.data);
    CHECK(loaded.get("beta/values").data == b.data);
    CHECK(loaded.find("missing") == nullptr);
    CHECK_THROWS_AS(loaded.get("missing"), DataError);
}

TEST_CASE("bad magic is rejected") {
    TempDir dir;
    const auto file_path = dir.path / "bad.dptn";
    std::ofstream out(file_path, std::ios::binary);
    out << "NOPE then some bytes";
    out.close();
    CHECK_THROWS_WITH_AS(TensorFile::read(file_path),
                         doctest::Contains("bad magic"), DataError);
}

TEST_CASE("version bump is rejected explicitly") {
    TempDir dir;
    const auto file_path = dir.path / "versioned.dptn";
    TensorFile file;
    file.add("x", {1}).data[0] = 1.0f;
    file.write(file_path);

    // bump the version field in place (bytes 4..7)
    std::fstream patch(file_path, std::ios::binary | std::ios::in | std::ios::out);
    patch.seekp(4);
    const std::uint32_t bogus = 99;
    patch.write(reinterpret_cast<const char*>(&bogus), 4);
    patch.close();

    CHECK_THROWS_WITH_AS(TensorFile::read(file_path),
                         doctest::Contains("unsupported tensor file version"), DataError);
}

TEST_CASE("truncated payload is rejected") {
    TempDir dir;
    const auto file_path = dir.path / "trunc.dptn";
    TensorFile file;
    file.add("x", {16});
    file.write(file_path);

    const auto size = std::filesystem::file_size(file_path);
    std::filesystem::resize_file(file_path, size - 8);
    CHECK_THROWS_AS(TensorFile::read(file_path), DataError);
}

TEST_CASE("matrix and vec bridges") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = -0.5;
    m(1, 0) = 2.5;
    m(1, 1) = 4.0;
    TensorFile file;
    section_from_matrix(file.add("m", {}), m);
    const Matrix back = matrix_from_section(file.get("m"));
    CHECK(back.rows() == 2);
    CHECK(back(1, 0) == 2.5);

    section_from_vec(file.add("v", {}), Vec{1.0, 2.0});
    CHECK(vec_from_section(file.get("v")) == Vec{1.0, 2.0});
    CHECK_THROWS_AS(matrix_from_section(file.get("v")), DataError);
}
