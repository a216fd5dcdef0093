#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "sinointerp/container.hpp"
#include "support.hpp"

using namespace sinointerp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << bytes;
}

ErrorCode code_of(const fs::path& p) {
  try {
    load_container(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(Container, SinogramRoundTripIsBitExact) {
  const auto dir = testing_support::scratch_dir();
  ScanGeometry g;
  g.n_angles = 33;
  g.angle_step_deg = 0.35 * 16;
  const Sinogram s(g, testing_support::random_values(33u * 512u, 11, -3.0, 7.0));
  save_container(s, dir / "a.sct");
  const Sinogram back = load_sinogram(dir / "a.sct");
  EXPECT_EQ(back.geometry(), s.geometry());
  EXPECT_EQ(back.data(), s.data());
  EXPECT_FALSE(back.norm());
  save_container(back, dir / "b.sct");
  EXPECT_EQ(slurp(dir / "a.sct"), slurp(dir / "b.sct"));
}

TEST(Container, NormRecordSurvives) {
  const auto dir = testing_support::scratch_dir();
  const auto s = normalize(testing_support::sinogram_from(4, 8, testing_support::random_values(32, 2)));
  save_container(s, dir / "n.sct");
  const auto back = load_sinogram(dir / "n.sct");
  EXPECT_EQ(back.norm(), s.norm());
  EXPECT_EQ(back.data(), s.data());
}

TEST(Container, ImageRoundTrip) {
  const auto dir = testing_support::scratch_dir();
  const Image img(16, testing_support::random_values(256, 5));
  save_container(img, dir / "i.sct");
  const auto c = load_container(dir / "i.sct");
  ASSERT_TRUE(std::holds_alternative<Image>(c));
  EXPECT_EQ(std::get<Image>(c).data(), img.data());
  EXPECT_THROW(load_sinogram(dir / "i.sct"), Error);
}

TEST(Container, HeaderLayout) {
  const auto dir = testing_support::scratch_dir();
  const auto s = testing_support::sinogram_from(2, 3, {1, 2, 3, 4, 5, 6});
  save_container(s, dir / "h.sct");
  const std::string bytes = slurp(dir / "h.sct");
  EXPECT_EQ(bytes.rfind("SCT1 sino 2 3 f32le\n", 0), 0u);
  EXPECT_NE(bytes.find("\nangles: "), std::string::npos);
  // payload is the trailing 6 little-endian floats
  const std::string tail = bytes.substr(bytes.size() - 24);
  float first = 0;
  std::memcpy(&first, tail.data(), 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Container, MinimalHeaderWithoutOptionalLines) {
  const auto dir = testing_support::scratch_dir();
  std::string bytes = "SCT1 sino 2 2 f32le\n";
  for (float v : {0.5f, 1.5f, 2.5f, 3.5f}) bytes.append(reinterpret_cast<const char*>(&v), 4);
  spit(dir / "m.sct", bytes);
  const auto s = load_sinogram(dir / "m.sct");
  EXPECT_EQ(s.rows(), 2);
  EXPECT_EQ(s.at(1, 1), 3.5f);
}

TEST(Container, WrongMagic) {
  const auto dir = testing_support::scratch_dir();
  spit(dir / "bad.sct", "XYZ1 sino 2 2 f32le\n0123456789abcdef");
  EXPECT_EQ(code_of(dir / "bad.sct"), ErrorCode::BadMagic);
}

TEST(Container, TruncatedPayload) {
  const auto dir = testing_support::scratch_dir();
  ScanGeometry g;  // 513 rows
  save_container(Sinogram(g, std::vector<float>(513u * 512u, 1.0f)), dir / "full.sct");
  std::string bytes = slurp(dir / "full.sct");
  bytes.resize(bytes.size() - 512 * 4);  // one row short
  spit(dir / "short.sct", bytes);
  EXPECT_EQ(code_of(dir / "short.sct"), ErrorCode::TruncatedPayload);
}

TEST(Container, TrailingBytesAreADimensionMismatch) {
  const auto dir = testing_support::scratch_dir();
  save_container(testing_support::sinogram_from(2, 2, {1, 2, 3, 4}), dir / "t.sct");
  spit(dir / "t.sct", slurp(dir / "t.sct") + "xxxx");
  EXPECT_EQ(code_of(dir / "t.sct"), ErrorCode::DimensionMismatch);
}

TEST(Container, MissingFileIsIoError) {
  EXPECT_EQ(code_of("/nonexistent/dir/file.sct"), ErrorCode::Io);
}

TEST(Container, PgmExport) {
  const auto dir = testing_support::scratch_dir();
  write_pgm(Image(4, testing_support::random_values(16, 1)), dir / "p.pgm");
  const std::string bytes = slurp(dir / "p.pgm");
  EXPECT_EQ(bytes.rfind("P5\n4 4\n255\n", 0), 0u);
  EXPECT_EQ(bytes.size(), std::string("P5\n4 4\n255\n").size() + 16);
}
