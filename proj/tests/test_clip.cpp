#include <doctest.h>

#include "pcl/clip.hpp"
#include "pcl/synthetic.hpp"
#include "test_util.hpp"

using namespace pcl;

namespace {

Video make_counting_video(int frames, int h, int w) {
  // pixel value encodes (frame, y, x) so indexing bugs show up immediately
  Video v;
  v.frames = frames;
  v.height = h;
  v.width = w;
  v.pixels.resize(static_cast<std::size_t>(frames) * h * w * 3);
  for (int t = 0; t < frames; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          v.pixels[((static_cast<std::size_t>(t) * h + y) * w + x) * 3 + c] =
              static_cast<std::uint8_t>((t * 7 + y * 3 + x + c) % 256);
  return v;
}

}  // namespace

TEST_CASE("sample_clip returns the requested consecutive frames") {
  Video v = make_counting_video(100, 8, 8);
  Clip c = sample_clip(v, 10, 16);
  CHECK(c.frames() == 16);
  CHECK(c.domain == ValueDomain::raw);
  for (int t = 0; t < 16; ++t)
    CHECK(c.at(0, t, 2, 3) == doctest::Approx(v.px(10 + t, 2, 3, 0) / 255.0));
}

TEST_CASE("sample_clip rejects out-of-range starts") {
  Video v = make_counting_video(100, 8, 8);
  CHECK_THROWS_AS(sample_clip(v, 90, 16), std::out_of_range);
  CHECK_THROWS_AS(sample_clip(v, -1, 16), std::out_of_range);
  CHECK_NOTHROW(sample_clip(v, 84, 16));
}

TEST_CASE("sample_clip values stay in [0,1] with and without resize") {
  Video v = make_counting_video(10, 9, 11);
  for (const Clip& c : {sample_clip(v, 0, 4), sample_clip(v, 0, 4, 6, 7)}) {
    for (std::size_t i = 0; i < c.data.numel(); ++i) {
      CHECK(c.data[i] >= 0.0);
      CHECK(c.data[i] <= 1.0);
    }
  }
}

TEST_CASE("to_residual of a constant video is all zeros") {
  Clip c{Tensor({3, 5, 4, 4}), ValueDomain::raw};
  c.data.fill(0.37);
  Clip r = to_residual(c);
  CHECK(r.frames() == 4);
  CHECK(r.domain == ValueDomain::residual);
  for (std::size_t i = 0; i < r.data.numel(); ++i) CHECK(r.data[i] == 0.0);
}

TEST_CASE("to_residual subtracts adjacent frames") {
  Clip c{Tensor({3, 3, 1, 1}), ValueDomain::raw};
  double vals[3] = {0.2, 0.5, 0.9};
  for (int ch = 0; ch < 3; ++ch)
    for (int t = 0; t < 3; ++t) c.at(ch, t, 0, 0) = vals[t];
  Clip r = to_residual(c);
  CHECK(r.at(0, 0, 0, 0) == doctest::Approx(0.3));
  CHECK(r.at(1, 1, 0, 0) == doctest::Approx(0.4));
}

TEST_CASE("to_residual matches the frame-shift subtraction oracle exactly") {
  Clip c = pcl::test::random_clip(5, 6, 7, 99);
  Clip r = to_residual(c);
  for (int ch = 0; ch < 3; ++ch)
    for (int t = 0; t < 4; ++t)
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x)
          CHECK(r.at(ch, t, y, x) == c.at(ch, t + 1, y, x) - c.at(ch, t, y, x));
}

TEST_CASE("to_residual refuses residual input") {
  Clip c = pcl::test::random_clip(5, 4, 4, 1);
  Clip r = to_residual(c);
  CHECK_THROWS_AS(to_residual(r), std::domain_error);
}

TEST_CASE("to_residual is invariant to a constant per-clip offset") {
  Clip a = pcl::test::random_clip(5, 4, 4, 7);
  for (std::size_t i = 0; i < a.data.numel(); ++i) a.data[i] *= 0.5;  // leave headroom
  Clip b = a;
  for (std::size_t i = 0; i < b.data.numel(); ++i) b.data[i] += 0.25;
  Clip ra = to_residual(a), rb = to_residual(b);
  for (std::size_t i = 0; i < ra.data.numel(); ++i)
    CHECK(ra.data[i] == doctest::Approx(rb.data[i]).epsilon(1e-12));
}

TEST_CASE("manifest and frame container round-trip through disk") {
  auto dir = std::filesystem::temp_directory_path() / "pcl_clip_io_test";
  std::filesystem::create_directories(dir / "frames");
  Video v = make_counting_video(6, 5, 4);
  RawTensor raw{Dtype::u8, {6, 5, 4, 3}, v.pixels};
  write_raw_tensor(dir / "frames" / "a.vten", raw);
  write_manifest(dir / "manifest.tsv",
                 {{"a", "frames/a.vten", 2, "train"}, {"b", "frames/a.vten", std::nullopt, "val"}});
  auto recs = read_manifest(dir / "manifest.tsv");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].label == 2);
  CHECK_FALSE(recs[1].label.has_value());
  Video back = load_video(dir, recs[0]);
  CHECK(back.pixels == v.pixels);
  std::filesystem::remove_all(dir);
}
