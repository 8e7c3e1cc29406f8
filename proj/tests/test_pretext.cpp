#include <doctest.h>

#include <algorithm>
#include <map>

#include "pcl/pretext.hpp"
#include "test_util.hpp"

using namespace pcl;

TEST_CASE("rotate90 convention and composition") {
  Clip c = pcl::test::random_clip(2, 6, 6, 21);
  Clip r = rotate90(c);
  for (int ch = 0; ch < 3; ++ch)
    for (int t = 0; t < 2; ++t)
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) CHECK(r.at(ch, t, y, x) == c.at(ch, t, x, 5 - y));
  // four quarter turns = identity
  Clip id = rotate90(rotate90(rotate90(rotate90(c))));
  CHECK(id.data.vec() == c.data.vec());
  // two quarter turns = half turn
  Clip half = rotate90(rotate90(c));
  CHECK(half.data.vec() == rotate180(c).data.vec());
}

TEST_CASE("rotate90 requires square frames") {
  Clip c = pcl::test::random_clip(2, 4, 6, 1);
  CHECK_THROWS(rotate90(c));
  CHECK_NOTHROW(rotate180(c));
}

TEST_CASE("apply_rotation angles are the four quarter turns") {
  Clip c = pcl::test::random_clip(2, 5, 5, 3);
  CHECK(apply_rotation(c, 0).data.vec() == c.data.vec());
  CHECK(apply_rotation(c, 1).data.vec() == rotate90(c).data.vec());
  CHECK(apply_rotation(c, 2).data.vec() == rotate180(c).data.vec());
  CHECK(apply_rotation(c, 3).data.vec() == rotate90(rotate180(c)).data.vec());
  CHECK_THROWS(apply_rotation(c, 4));
}

TEST_CASE("rotation instances carry the matching label") {
  Clip c = pcl::test::random_clip(2, 5, 5, 8);
  Rng rng = make_rng(4);
  std::map<int, int> seen;
  for (int i = 0; i < 64; ++i) {
    PretextInstance inst = make_rotation_instance(c, rng);
    REQUIRE(inst.clips.size() == 1);
    CHECK(inst.clips[0].data.vec() == apply_rotation(c, inst.label).data.vec());
    seen[inst.label]++;
  }
  CHECK(seen.size() == 4);  // all four labels show up over 64 draws
}

TEST_CASE("temporal primitives") {
  Clip c = pcl::test::random_clip(5, 3, 3, 9);
  Clip rev = temporal_reverse(c);
  for (int t = 0; t < 5; ++t) CHECK(rev.at(0, t, 1, 1) == c.at(0, 4 - t, 1, 1));
  CHECK(temporal_reverse(rev).data.vec() == c.data.vec());
  Clip sw = temporal_adjacent_swap(c);
  CHECK(sw.at(0, 0, 1, 1) == c.at(0, 1, 1, 1));
  CHECK(sw.at(0, 1, 1, 1) == c.at(0, 0, 1, 1));
  CHECK(sw.at(0, 4, 1, 1) == c.at(0, 4, 1, 1));  // odd tail stays put
  CHECK(temporal_adjacent_swap(sw).data.vec() == c.data.vec());
}

TEST_CASE("permutation label codec is a bijection over S_n") {
  for (int n : {2, 3, 4}) {
    int fact = 1;
    for (int i = 2; i <= n; ++i) fact *= i;
    std::vector<int> ident(n);
    for (int i = 0; i < n; ++i) ident[i] = i;
    std::vector<int> perm = ident;
    int expect = 0;
    do {  // std::next_permutation enumerates in lexicographic order
      CHECK(permutation_to_label(perm) == expect);
      CHECK(label_to_permutation(expect, n) == perm);
      ++expect;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(expect == fact);
    CHECK(permutation_to_label(ident) == 0);
  }
}

TEST_CASE("order instances shuffle the clips consistently with the label") {
  std::vector<Clip> ordered;
  for (int i = 0; i < 3; ++i) ordered.push_back(pcl::test::random_clip(2, 4, 4, 100 + i));
  Rng rng = make_rng(6);
  std::map<int, int> seen;
  for (int i = 0; i < 120; ++i) {
    PretextInstance inst = make_order_instance(ordered, rng);
    std::vector<int> perm = label_to_permutation(inst.label, 3);
    REQUIRE(inst.clips.size() == 3);
    for (int j = 0; j < 3; ++j)
      CHECK(inst.clips[j].data.vec() == ordered[perm[j]].data.vec());
    seen[inst.label]++;
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("plan_order_segments yields in-order non-overlapping starts") {
  Rng rng = make_rng(8);
  for (int i = 0; i < 50; ++i) {
    auto starts = plan_order_segments(40, 3, 8, 4, rng);
    REQUIRE(starts.size() == 3);
    for (int j = 0; j < 3; ++j) {
      CHECK(starts[j] >= 0);
      CHECK(starts[j] + 8 <= 40);
      if (j) {
        CHECK(starts[j] >= starts[j - 1] + 8);
        CHECK(starts[j] <= starts[j - 1] + 8 + 4);
      }
    }
  }
  CHECK_THROWS(plan_order_segments(20, 3, 8, 4, rng));  // cannot fit
}

TEST_CASE("transform set: five distinct members, correct application") {
  Clip c = pcl::test::random_clip(4, 6, 6, 55);
  CHECK(apply_transform(c, 0).data.vec() == c.data.vec());
  CHECK(apply_transform(c, 1).data.vec() == rotate90(c).data.vec());
  CHECK(apply_transform(c, 2).data.vec() == rotate180(c).data.vec());
  CHECK(apply_transform(c, 3).data.vec() == temporal_reverse(c).data.vec());
  CHECK(apply_transform(c, 4).data.vec() == temporal_adjacent_swap(c).data.vec());
  CHECK_THROWS(apply_transform(c, 5));
  // pairwise distinct on a generic clip
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b)
      CHECK(apply_transform(c, a).data.vec() != apply_transform(c, b).data.vec());
}

TEST_CASE("transform instances carry the matching label") {
  Clip c = pcl::test::random_clip(4, 6, 6, 66);
  Rng rng = make_rng(12);
  std::map<int, int> seen;
  for (int i = 0; i < 80; ++i) {
    PretextInstance inst = make_transform_instance(c, rng);
    CHECK(inst.clips[0].data.vec() == apply_transform(c, inst.label).data.vec());
    seen[inst.label]++;
  }
  CHECK(seen.size() == kTransformClasses);
}

TEST_CASE("task info table") {
  CHECK(pretext_task_info(PretextTaskKind::rotation).n_classes == 4);
  CHECK(pretext_task_info(PretextTaskKind::rotation).n_clips == 1);
  CHECK(pretext_task_info(PretextTaskKind::clip_order, 3).n_classes == 6);
  CHECK(pretext_task_info(PretextTaskKind::clip_order, 3).n_clips == 3);
  CHECK(pretext_task_info(PretextTaskKind::clip_order, 4).n_classes == 24);
  CHECK(pretext_task_info(PretextTaskKind::transform).n_classes == 5);
  CHECK(pretext_task_from_string("rotation") == PretextTaskKind::rotation);
  CHECK(to_string(PretextTaskKind::clip_order) == "clip_order");
  CHECK_THROWS(pretext_task_from_string("bogus"));
}

TEST_CASE("rotation and transform refuse residual input") {
  Clip c = pcl::test::random_clip(4, 6, 6, 2);
  Clip r = to_residual(c);
  Rng rng = make_rng(1);
  CHECK_THROWS(make_rotation_instance(r, rng));
  CHECK_THROWS(make_transform_instance(r, rng));
}
