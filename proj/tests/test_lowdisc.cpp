#include "hrmsbo/lowdisc.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace hrmsbo;

TEST_CASE("kronecker_sequence shape, range, determinism") {
  Vec shift = Vec::Zero(2);
  const Mat a = kronecker_sequence(100, 2, shift);
  const Mat b = kronecker_sequence(100, 2, shift);
  CHECK(a.rows() == 100);
  CHECK(a.cols() == 2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);

  Vec shifted = Vec::Constant(2, 0.25);
  const Mat c = kronecker_sequence(100, 2, shifted);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("1d Kronecker points have small gaps") {
  const int n = 1024;
  const Mat pts = kronecker_sequence(n, 1, Vec::Zero(1));
  std::vector<double> xs(pts.col(0).data(), pts.col(0).data() + n);
  std::sort(xs.begin(), xs.end());
  double max_gap = xs.front() + (1.0 - xs.back());  // wraparound gap
  for (int i = 1; i < n; ++i) max_gap = std::max(max_gap, xs[i] - xs[i - 1]);
  // The golden-ratio sequence keeps the largest gap near 2/n; random points
  // would show gaps an order of magnitude wider.
  CHECK(max_gap < 4.0 / n);
}

TEST_CASE("2d Kronecker points cover every coarse cell") {
  const int n = 4096, boxes = 16;
  const Mat pts = kronecker_sequence(n, 2, Vec::Zero(2));
  std::vector<int> count(boxes * boxes, 0);
  for (int i = 0; i < n; ++i) {
    const int bx = std::min(boxes - 1, static_cast<int>(pts(i, 0) * boxes));
    const int by = std::min(boxes - 1, static_cast<int>(pts(i, 1) * boxes));
    ++count[bx * boxes + by];
  }
  const int expected = n / (boxes * boxes);
  for (int c : count) {
    CHECK(c > 0);
    CHECK(c < 4 * expected);
  }
}

TEST_CASE("low_discrepancy rotation is stream-deterministic") {
  Rng r1(5), r2(5), r3(6);
  const Mat a = low_discrepancy(64, 3, r1);
  const Mat b = low_discrepancy(64, 3, r2);
  const Mat c = low_discrepancy(64, 3, r3);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);
}

TEST_CASE("low_discrepancy_fixed is deterministic") {
  const Mat a = low_discrepancy_fixed(128, 4);
  const Mat b = low_discrepancy_fixed(128, 4);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.rows() == 128);
  CHECK(a.cols() == 4);
}
