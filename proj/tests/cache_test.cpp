#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "qfock/cache.hpp"

namespace qfock {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("qfock_cache_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void flip_byte(const fs::path& p, std::streamoff offset_from_end) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(-offset_from_end, std::ios::end);
  char c;
  f.get(c);
  f.seekp(-offset_from_end, std::ios::end);
  f.put(static_cast<char>(c ^ 0x5a));
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(nullptr, 0), 0xcbf29ce484222325ULL);
  const std::string a = "a";
  EXPECT_EQ(fnv1a64(reinterpret_cast<const std::uint8_t*>(a.data()), a.size()), 0xaf63dc4c8601ec8cULL);
  const std::string foobar = "foobar";
  EXPECT_EQ(fnv1a64(reinterpret_cast<const std::uint8_t*>(foobar.data()), foobar.size()),
            0x85944171f73967e8ULL);
}

TEST(LevelRecord, RoundTripIsBitExact) {
  TruncatedFock space(-0.37, 2, 3);
  for (std::size_t n = 0; n <= 3; ++n) {
    const auto bytes = encode_level(-0.37, 2, space.level(n));
    const auto back = decode_level(bytes, -0.37, 2, n);
    EXPECT_EQ(back.gram, space.level(n).gram);
    EXPECT_EQ(back.chol, space.level(n).chol);
  }
}

TEST(LevelRecord, RejectsMismatchAndDamage) {
  TruncatedFock space(0.25, 2, 2);
  auto bytes = encode_level(0.25, 2, space.level(2));
  EXPECT_THROW(decode_level(bytes, std::nextafter(0.25, 1.0), 2, 2), CacheCorrupt);
  EXPECT_THROW(decode_level(bytes, 0.25, 3, 2), CacheCorrupt);
  EXPECT_THROW(decode_level(bytes, 0.25, 2, 1), CacheCorrupt);
  auto damaged = bytes;
  damaged.back() ^= 1;
  EXPECT_THROW(decode_level(damaged, 0.25, 2, 2), CacheCorrupt);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 8);
  EXPECT_THROW(decode_level(truncated, 0.25, 2, 2), CacheCorrupt);
  auto versioned = bytes;
  versioned[4] = 99;
  EXPECT_THROW(decode_level(versioned, 0.25, 2, 2), CacheCorrupt);
}

TEST(LevelCachePath, KeyedByBitPattern) {
  const fs::path dir = "c";
  EXPECT_NE(level_cache_path(dir, 0.0, 2, 1), level_cache_path(dir, -0.0, 2, 1));
  EXPECT_EQ(level_cache_path(dir, 0.5, 2, 1).filename().string(), "level_q3fe0000000000000_d2_n1.qfc");
}

TEST(LevelCache, ColdThenWarm) {
  TempDir tmp;
  LevelCache cold(tmp.path());
  const auto a = cold.load(0.4, 2, 3);
  EXPECT_EQ(cold.stats().misses, 4u);
  EXPECT_EQ(cold.stats().levels_built, 4u);

  LevelCache warm(tmp.path());
  const auto b = warm.load(0.4, 2, 3);
  EXPECT_EQ(warm.stats().hits, 4u);
  EXPECT_EQ(warm.stats().levels_built, 0u);
  EXPECT_EQ(warm.stats().assembly_seconds, 0.0);
  for (std::size_t n = 0; n <= 3; ++n) {
    EXPECT_EQ(a.level(n).gram, b.level(n).gram);
    EXPECT_EQ(a.level(n).chol, TruncatedFock(0.4, 2, 3).level(n).chol);
  }
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    EXPECT_EQ(entry.path().string().find(".tmp."), std::string::npos);
  }
}

TEST(LevelCache, CorruptRecordIsRebuilt) {
  TempDir tmp;
  LevelCache(tmp.path()).load(-0.2, 3, 2);
  flip_byte(level_cache_path(tmp.path(), -0.2, 3, 2), 5);

  LevelCache again(tmp.path());
  const auto space = again.load(-0.2, 3, 2);
  EXPECT_EQ(again.stats().corrupt, 1u);
  EXPECT_EQ(again.stats().hits, 2u);
  EXPECT_EQ(again.stats().levels_built, 1u);
  ASSERT_EQ(again.diagnostics().size(), 1u);
  EXPECT_NE(again.diagnostics()[0].find("checksum"), std::string::npos);
  EXPECT_EQ(space.level(2).gram, TruncatedFock(-0.2, 3, 2).level(2).gram);

  LevelCache healed(tmp.path());
  healed.load(-0.2, 3, 2);
  EXPECT_EQ(healed.stats().corrupt, 0u);
}

TEST(LevelCache, FactoryDrivesSpectralPipeline) {
  TempDir tmp;
  LevelCache cache(tmp.path());
  const auto rows = gap_vs_bound_sweep({0.0}, {2}, {2, 3}, {}, {}, cache.factory());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[1].ok);
  EXPECT_EQ(cache.stats().hits, 3u);  // second point reuses levels 0..2
  EXPECT_EQ(rows[1].report->gap.gap, spectral_report(TruncatedFock(0.0, 2, 3)).gap.gap);
}

TEST(OperatorRecord, RoundTrip) {
  TruncatedFock space(0.3, 2, 3);
  for (const auto& op : {creation_left(1, space), build_m(space), build_S(space)}) {
    const auto rec = decode_operator(encode_operator(op, 0.3));
    EXPECT_EQ(rec.q, 0.3);
    EXPECT_EQ(rec.op.domain(), op.domain());
    EXPECT_EQ(rec.op.codomain(), op.codomain());
    ASSERT_EQ(rec.op.blocks().size(), op.blocks().size());
    for (const auto& [key, m] : op.blocks()) EXPECT_EQ(*rec.op.find(key.first, key.second), m);
  }
}

TEST(OperatorRecord, FileRoundTripAndDamage) {
  TempDir tmp;
  TruncatedFock space(0.0, 2, 2);
  const auto path = tmp.path() / "ops" / "mdag.qfc";
  write_operator(path, build_mdag(space), 0.0);
  EXPECT_EQ(read_operator(path).op.dense(), build_mdag(space).dense());
  flip_byte(path, 1);
  EXPECT_THROW(read_operator(path), CacheCorrupt);
  const auto level_path = tmp.path() / "l.qfc";
  write_level(level_path, 0.0, 2, space.level(1));
  EXPECT_THROW(read_operator(level_path), CacheCorrupt);
}

}  // namespace
}  // namespace qfock
