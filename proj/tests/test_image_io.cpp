#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "polyp/png_io.hpp"
#include "polyp/rng.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using polyp::Rng;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("png write/read round trip is bit-exact") {
  auto dir = testutil::scratch_dir("png_roundtrip");
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    int w = static_cast<int>(rng.irange(1, 200));
    int h = static_cast<int>(rng.irange(1, 200));
    auto img = testutil::random_image(w, h, rng);
    auto path = (dir / ("img" + std::to_string(trial) + ".png")).string();
    polyp::write_png(path, img);
    auto back = polyp::read_png(path);
    REQUIRE(back.width == w);
    REQUIRE(back.height == h);
    CHECK(back.data == img.data);
  }
}

TEST_CASE("png encoding is byte-deterministic") {
  auto dir = testutil::scratch_dir("png_deterministic");
  Rng rng(9);
  auto img = testutil::random_image(123, 77, rng);
  polyp::write_png((dir / "a.png").string(), img);
  polyp::write_png((dir / "b.png").string(), img);
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
}

TEST_CASE("reading a missing or corrupt file raises io_error") {
  auto dir = testutil::scratch_dir("png_errors");
  CHECK_THROWS_AS(polyp::read_png((dir / "missing.png").string()), polyp::io_error);
  std::ofstream((dir / "junk.png")) << "not a png";
  CHECK_THROWS_AS(polyp::read_png((dir / "junk.png").string()), polyp::io_error);
}

TEST_CASE("writing into a missing directory raises io_error") {
  auto dir = testutil::scratch_dir("png_nodir");
  polyp::Image img = polyp::Image::filled(4, 4, 1, 2, 3);
  CHECK_THROWS_AS(polyp::write_png((dir / "nope" / "x.png").string(), img), polyp::io_error);
}
