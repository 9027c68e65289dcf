#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "common/binary_io.hpp"
#include "data/episode.hpp"
#include "data/feature_file.hpp"
#include "data/split.hpp"
#include "data/synthetic.hpp"
#include "test_support.hpp"

using namespace tfh;
using namespace tfh::data;

namespace {

LabeledFeatureSet small_set(std::size_t classes, std::size_t per_class, std::uint64_t seed = 0) {
  SyntheticFeatureSpec spec;
  spec.num_classes = classes;
  spec.examples_per_class = per_class;
  spec.shape = {3, 2, 2};
  spec.center_seed = seed;
  return make_synthetic_features(spec);
}

std::vector<std::uint8_t> encode_and_patch(const LabeledFeatureSet& set, std::size_t at, std::uint32_t value) {
  auto bytes = encode_feature_set(set);
  for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<std::uint8_t>(value >> (8 * i));
  return bytes;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("feature set construction") {
  LabeledFeatureSet set({2, 1, 1}, 3);
  set.add(nn::Tensor({2, 1, 1}, 1.0f), 2);
  set.add(nn::Tensor({2, 1, 1}, 2.0f), 0);
  CHECK(set.size() == 2);
  CHECK(set.class_indices(2) == std::vector<std::size_t>{0});
  CHECK(set.class_indices(1).empty());
  CHECK_THROWS_AS(set.add(nn::Tensor({2, 1, 1}), 3), InvalidArgument);
  CHECK_THROWS_AS(set.add(nn::Tensor({1, 2, 1}), 0), ShapeError);

  auto sub = small_set(4, 3).subset_classes(std::vector<std::size_t>{3, 1});
  CHECK(sub.num_classes() == 2);
  CHECK(sub.size() == 6);
  CHECK(sub.label(0) == 0);
}

TEST_CASE("episode sizes") {
  auto set = small_set(6, 20);
  auto ep = sample_episode(set, 5, 1, 15, 7);
  std::size_t support = 0, query = 0;
  for (std::size_t j = 0; j < 5; ++j) {
    support += ep.support[j].size();
    query += ep.query[j].size();
  }
  CHECK(support == 5);
  CHECK(query == 75);

  auto full = sample_episode(set, 1, 20, 0, 3);
  auto members = set.class_indices(full.class_ids[0]);
  auto picked = full.support[0];
  std::sort(picked.begin(), picked.end());
  CHECK(picked == members);
}

TEST_CASE("episode capacity errors") {
  auto set = small_set(4, 5);
  CHECK_THROWS_AS(sample_episode(set, 5, 1, 1, 0), CapacityError);
  CHECK_THROWS_AS(sample_episode(set, 2, 3, 3, 0), CapacityError);
  CHECK_THROWS_AS(sample_episode(set, 2, 0, 3, 0), InvalidArgument);
}

TEST_CASE("support and query are disjoint over 10 000 episodes") {
  auto set = small_set(8, 12);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    auto ep = sample_episode(set, 4, 2, 3, derive_seed(99, s));
    std::set<std::size_t> seen;
    std::size_t count = 0;
    for (std::size_t j = 0; j < ep.n_way; ++j) {
      for (auto i : ep.support[j]) {
        seen.insert(i);
        REQUIRE(set.label(i) == ep.class_ids[j]);
      }
      for (auto i : ep.query[j]) {
        seen.insert(i);
        REQUIRE(set.label(i) == ep.class_ids[j]);
      }
      count += ep.support[j].size() + ep.query[j].size();
    }
    REQUIRE(seen.size() == count);
  }
}

TEST_CASE("class selection frequency is uniform within 5 sigma") {
  auto set = small_set(10, 4);
  const std::size_t episodes = 1000, n_way = 3;
  std::vector<double> hits(10, 0);
  for (std::size_t s = 0; s < episodes; ++s) {
    for (auto c : sample_episode(set, n_way, 1, 1, derive_seed(5, s)).class_ids) hits[c] += 1;
  }
  const double p = static_cast<double>(n_way) / 10.0;
  const double sigma = std::sqrt(episodes * p * (1 - p));
  for (double h : hits) CHECK(std::abs(h - episodes * p) < 5 * sigma);
}

TEST_CASE("episode sampling ignores how classes are interleaved in storage") {
  auto sorted = small_set(5, 6);
  LabeledFeatureSet interleaved(sorted.feature_shape(), sorted.num_classes());
  std::vector<std::size_t> remap;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 5; c-- > 0;) {
      const std::size_t i = sorted.class_indices(c)[r];
      interleaved.add(sorted.feature(i), c);
      remap.push_back(i);
    }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = sample_episode(sorted, 3, 2, 2, seed);
    auto b = sample_episode(interleaved, 3, 2, 2, seed);
    REQUIRE(a.class_ids == b.class_ids);
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(remap[b.support[j][i]] == a.support[j][i]);
        CHECK(remap[b.query[j][i]] == a.query[j][i]);
      }
    }
  }
}

TEST_CASE("synthetic features") {
  SyntheticFeatureSpec spec;
  spec.num_classes = 3;
  spec.examples_per_class = 10;
  spec.shape = {4, 3, 3};

  SUBCASE("near-zero noise reproduces the centers") {
    spec.noise_std = 1e-9f;
    auto set = make_synthetic_features(spec);
    auto centers = synthetic_centers(spec);
    for (std::size_t i = 0; i < set.size(); ++i)
      CHECK(testing::max_abs_diff(set.feature(i), centers[set.label(i)]) < 1e-6);
  }
  SUBCASE("clipping keeps values in the unit interval") {
    spec.noise_std = 2.0f;
    spec.clip_to_unit = true;
    auto set = make_synthetic_features(spec);
    for (std::size_t i = 0; i < set.size(); ++i)
      for (float v : set.feature(i).data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
  }
  SUBCASE("class means concentrate around the centers") {
    spec.examples_per_class = 500;
    spec.noise_std = 0.3f;
    auto set = make_synthetic_features(spec);
    auto centers = synthetic_centers(spec);
    const double bound = 4 * 0.3 / std::sqrt(500.0);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      std::vector<double> mean(centers[c].size(), 0.0);
      for (auto i : set.class_indices(c))
        for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += set.feature(i)[e] / 500.0;
      for (std::size_t e = 0; e < mean.size(); ++e) CHECK(std::abs(mean[e] - centers[c][e]) < bound);
    }
  }
  SUBCASE("centers lie in [0.2, 0.8] for both center models") {
    for (std::size_t rank : {0u, 4u}) {
      spec.center_rank = rank;
      for (const auto& c : synthetic_centers(spec))
        for (float v : c.data()) {
          CHECK(v >= 0.2f);
          CHECK(v <= 0.8f);
        }
    }
  }
  SUBCASE("invalid spec lists every problem") {
    spec.num_classes = 0;
    spec.noise_std = 0;
    try {
      make_synthetic_features(spec);
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.problems().size() == 2);
    }
  }
}

TEST_CASE("feature file round-trip is bit-identical") {
  auto set = small_set(4, 5, 3);
  REQUIRE(set.size() == 20);
  auto bytes = encode_feature_set(set);
  CHECK(bytes.size() == kFeatureFileHeaderBytes + 20 * 4 + 20 * 12 * 4);
  auto back = decode_feature_set(bytes);
  CHECK(encode_feature_set(back) == bytes);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(nn::bit_equal(back.feature(i), set.feature(i)));
    CHECK(back.label(i) == set.label(i));
  }

  testing::TempDir dir("fts");
  save_feature_file(set, dir.file("a.fts"));
  CHECK(testing::read_bytes(dir.file("a.fts")) == bytes);
  CHECK(encode_feature_set(load_feature_file(dir.file("a.fts"))) == bytes);
}

TEST_CASE("feature file validation") {
  auto set = small_set(2, 3);
  auto bytes = encode_feature_set(set);

  SUBCASE("bad magic is reported at offset 0") {
    auto bad = bytes;
    std::copy_n("XXXX", 4, bad.begin());
    try {
      decode_feature_set(bad);
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SUBCASE("truncation reports expected and actual length") {
    auto cut = bytes;
    cut.resize(bytes.size() - 5);
    try {
      decode_feature_set(cut);
      FAIL("no error");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(std::to_string(bytes.size())) != std::string::npos);
      CHECK(msg.find(std::to_string(cut.size())) != std::string::npos);
    }
  }
  SUBCASE("label at or above the class count") {
    CHECK_THROWS_AS(decode_feature_set(encode_and_patch(set, kFeatureFileHeaderBytes, 2)), ParseError);
  }
  SUBCASE("a declared class without examples") {
    CHECK_THROWS_AS(decode_feature_set(encode_and_patch(set, 22, 3)), ParseError);
  }
  SUBCASE("every single header byte corruption is rejected") {
    for (std::size_t at = 0; at < kFeatureFileHeaderBytes; ++at) {
      for (std::uint8_t mask : {0x01, 0x80, 0xFF}) {
        auto bad = bytes;
        bad[at] ^= mask;
        CAPTURE(at);
        CHECK_THROWS_AS(decode_feature_set(bad), ParseError);
      }
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_feature_file("/nonexistent/features.fts"), IoError);
  }
}

TEST_CASE("failed saves leave no partial file") {
  testing::TempDir dir("atomic");
  CHECK_THROWS_AS(save_feature_file(small_set(2, 2), dir.file("missing/sub/x.fts")), IoError);
  CHECK(std::filesystem::is_empty(dir.path()));
}

TEST_CASE("class splits") {
  auto s = split_classes(100, 64, 16, 20, 1);
  CHECK(s.base.size() == 64);
  CHECK(s.val.size() == 16);
  CHECK(s.novel.size() == 20);
  std::set<std::size_t> all(s.base.begin(), s.base.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.novel.begin(), s.novel.end());
  CHECK(all.size() == 100);

  auto again = split_classes(100, 64, 16, 20, 1);
  CHECK(again.base == s.base);
  CHECK(again.novel == s.novel);
  CHECK(split_classes(100, 64, 16, 20, 2).base != s.base);

  ClassSplit lists{{4, 0}, {2}, {1, 3}};
  auto same = split_classes(5, lists);
  CHECK(same.base == lists.base);
  CHECK(same.val == lists.val);
  CHECK(same.novel == lists.novel);

  CHECK_THROWS_AS(split_classes(10, 5, 2, 2, 0), ConfigError);
  try {
    split_classes(5, ClassSplit{{0, 1}, {1}, {7}});
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() == 2);
  }
}

TEST_CASE("min-max normalization") {
  auto set = small_set(2, 4);
  auto norm = minmax_normalize(set);
  float lo = 1, hi = 0;
  for (std::size_t i = 0; i < norm.size(); ++i)
    for (float v : norm.feature(i).data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
  CHECK(fraction_outside_unit(norm) > 0.0);
}

}  // TEST_SUITE
