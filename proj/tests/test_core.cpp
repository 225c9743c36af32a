#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "bagsparse/core.hpp"
#include "bagsparse/rng.hpp"

using namespace bagsparse;

TEST(RngStream, SameSeedAndStreamGiveSameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(42, 1), b(42, 2), c(43, 1);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(RngStream, ChildDoesNotConsumeParent) {
  RngStream a(5), b(5);
  (void)a.child(3);
  (void)a.derive(1, 2, 3);
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DeriveChainsChildren) {
  const RngStream root(9);
  RngStream x = root.derive(1, 2);
  RngStream y = root.child(1).child(2);
  for (int i = 0; i < 10; ++i) ASSERT_EQ(x.next_u64(), y.next_u64());
}

TEST(RngStream, RoleTagIsFnv1a) {
  // FNV-1a of the empty string is the offset basis; "a" is a published vector.
  static_assert(role_tag("") == 0xcbf29ce484222325ULL);
  static_assert(role_tag("a") == 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(role_tag("instance"), role_tag("bootstrap"));
}

TEST(RngStream, UniformRangeAndMoments) {
  RngStream rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(RngStream, IndexIsUniform) {
  RngStream rng(12);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  // chi-square with 6 dof; 22.46 is the 0.999 quantile
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 22.46);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(13);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, fourth = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    fourth += z * z * z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
  EXPECT_NEAR(fourth / n, 3.0, 0.1);
}

TEST(RngStream, SequenceIsIdenticalAcrossThreads) {
  std::vector<std::uint64_t> main_seq, thread_seq;
  auto fill = [](std::vector<std::uint64_t>& out) {
    RngStream rng(77, 3);
    for (int i = 0; i < 100; ++i) out.push_back(rng.next_u64());
  };
  fill(main_seq);
  std::thread t(fill, std::ref(thread_seq));
  t.join();
  EXPECT_EQ(main_seq, thread_seq);
}

TEST(NormalizeColumns, DiagonalScaling) {
  DenseMatrix a(2, 2);
  a << 2, 0, 0, 3;
  const DenseMatrix out = normalize_columns(a);
  EXPECT_TRUE(out.isApprox(DenseMatrix::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(out(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out(1, 1), 1.0);
}

TEST(NormalizeColumns, IdentityUnchanged) {
  const DenseMatrix id = DenseMatrix::Identity(4, 4);
  EXPECT_EQ(normalize_columns(id), id);
}

TEST(NormalizeColumns, RandomColumnsHaveUnitNorm) {
  RngStream rng(3);
  const DenseMatrix a = gaussian_matrix(3, 2, rng);
  const DenseMatrix out = normalize_columns(a);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) sq += out(i, j) * out(i, j);
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
    // direction preserved
    const double scale = a.col(j).norm();
    for (Eigen::Index i = 0; i < out.rows(); ++i) EXPECT_NEAR(out(i, j) * scale, a(i, j), 1e-12);
  }
}

TEST(NormalizeColumns, Idempotent) {
  RngStream rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseMatrix a = gaussian_matrix(1 + rng.index(10), 1 + rng.index(10), rng);
    const DenseMatrix once = normalize_columns(a);
    const DenseMatrix twice = normalize_columns(once);
    EXPECT_LE((once - twice).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NormalizeColumns, ZeroColumnIsNamed) {
  DenseMatrix a(2, 3);
  a << 1, 0, 2, 3, 0, 4;
  try {
    (void)normalize_columns(a);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("column 1"), std::string::npos);
  }
}

TEST(GaussianMatrix, SampleMomentsOfLongColumn) {
  RngStream rng(2024);
  const DenseMatrix a = gaussian_matrix(1000, 1, rng);
  const double mean = a.mean();
  const double var = (a.array() - mean).square().sum() / 999.0;
  EXPECT_NEAR(mean, 0.0, 0.1);
  EXPECT_GE(var, 0.85);
  EXPECT_LE(var, 1.15);
}

TEST(GaussianMatrix, DeterministicForSameStream) {
  RngStream r1(8, 2), r2(8, 2);
  const DenseMatrix a = gaussian_matrix(13, 7, r1);
  const DenseMatrix b = gaussian_matrix(13, 7, r2);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * 13 * 7), 0);
}

TEST(GaussianMatrix, ShapeAndFinite) {
  RngStream rng(1);
  const DenseMatrix a = gaussian_matrix(3, 4, rng);
  EXPECT_EQ(a.rows(), 3);
  EXPECT_EQ(a.cols(), 4);
  EXPECT_TRUE(all_finite(a));
}

TEST(SortedSum, OrderInvariant) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.0, 1e6);
  std::vector<double> v(500);
  for (auto& x : v) x = nd(gen);
  std::vector<double> w = v;
  const double ref = sorted_sum(v);
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(w.begin(), w.end(), gen);
    std::vector<double> copy = w;
    EXPECT_EQ(sorted_sum(copy), ref);
  }
}

TEST(RequireFinite, RejectsNan) {
  RealVector v(3);
  v << 1, std::nan(""), 2;
  EXPECT_THROW(require_finite(v, "v"), DomainError);
}
