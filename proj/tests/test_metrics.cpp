#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "voxmatch/metrics.hpp"
#include "voxmatch/pardata.hpp"

using voxmatch::MetricKind;
using voxmatch::Template;
using voxmatch::Volume;

namespace {

Template as_template(const Volume& v, double threshold = 0.0) {
  return Template{v, threshold};
}

Volume line_volume(std::vector<double> data) {
  const std::size_t n = data.size();
  return voxmatch::make_volume(n, 1, 1, std::move(data));
}

}  // namespace

TEST_CASE("ssd of [1,2,3] against zeros is 14") {
  const Volume f = line_volume({1.0, 2.0, 3.0});
  const Volume zeros = line_volume({0.0, 0.0, 0.0});
  REQUIRE(voxmatch::ssd(f, as_template(zeros)) == 14.0);
}

TEST_CASE("ssd is zero on identical volumes and positive otherwise") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 64; ++i) {
    const Volume f = fixtures::random_volume(rng, 5, 4, 3);
    REQUIRE(voxmatch::ssd(f, as_template(f)) == 0.0);
    Volume g = f;
    g.data[7] += 1.0;
    REQUIRE(voxmatch::ssd(f, as_template(g)) > 0.0);
  }
}

TEST_CASE("ssd matches the triple-loop oracle") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const Volume f = fixtures::random_volume(rng, 4, 3, 5);
    const Volume t = fixtures::random_volume(rng, 4, 3, 5);
    const double got = voxmatch::ssd(f, as_template(t));
    const double want = oracle::ssd(f, t);
    REQUIRE_THAT(got, Catch::Matchers::WithinRel(want, 1e-12));
  }
}

TEST_CASE("ssd is symmetric bit for bit") {
  std::mt19937_64 rng(13);
  const Volume f = fixtures::random_volume(rng, 6, 6, 6);
  const Volume t = fixtures::random_volume(rng, 6, 6, 6);
  REQUIRE(voxmatch::ssd(f, as_template(t)) == voxmatch::ssd(t, as_template(f)));
}

TEST_CASE("ssd_at_offset at zero offset reproduces ssd exactly") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 50; ++i) {
    const Volume f = fixtures::random_volume(rng, 7, 5, 3);
    const Volume t = fixtures::random_volume(rng, 7, 5, 3);
    REQUIRE(voxmatch::ssd_at_offset(f, as_template(t), {0, 0, 0}) ==
            voxmatch::ssd(f, as_template(t)));
  }
}

TEST_CASE("ssd_at_offset recovers a shifted ramp perfectly") {
  // f(x) = x and t(x) = x + 1, so shifting the template by +1 aligns them
  const Volume f = line_volume({0.0, 1.0, 2.0, 3.0});
  const Volume t = line_volume({1.0, 2.0, 3.0, 4.0});
  REQUIRE(voxmatch::ssd_at_offset(f, as_template(t), {1, 0, 0}) == 0.0);
}

TEST_CASE("ssd_at_offset matches its oracle across offsets") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<std::ptrdiff_t> off(-4, 4);
  for (int i = 0; i < 60; ++i) {
    const Volume f = fixtures::random_volume(rng, 4, 5, 3);
    const Volume t = fixtures::random_volume(rng, 4, 5, 3);
    const voxmatch::Offset o{off(rng), off(rng), off(rng)};
    const double got = voxmatch::ssd_at_offset(f, as_template(t), o);
    const double want = oracle::ssd_at_offset(f, t, o.u, o.v, o.w);
    if (want == 0.0) {
      REQUIRE(got == 0.0);
    } else {
      REQUIRE_THAT(got, Catch::Matchers::WithinRel(want, 1e-12));
    }
  }
}

TEST_CASE("ssd_at_offset with no overlap sums nothing") {
  const Volume f = line_volume({1.0, 2.0});
  const Volume t = line_volume({3.0, 4.0});
  REQUIRE(voxmatch::ssd_at_offset(f, as_template(t), {2, 0, 0}) == 0.0);
  REQUIRE(voxmatch::ssd_at_offset(f, as_template(t), {0, 7, 0}) == 0.0);
}

TEST_CASE("ncc hand-computed fixture") {
  // means 2.5, covariance terms sum to 4, each variance term 5: ncc = 0.8
  const Volume f = line_volume({1.0, 2.0, 3.0, 4.0});
  const Volume t = line_volume({1.0, 3.0, 2.0, 4.0});
  REQUIRE_THAT(voxmatch::ncc(f, as_template(t)),
               Catch::Matchers::WithinAbs(0.8, 1e-12));
}

TEST_CASE("ncc identities") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 100; ++i) {
    const Volume f = fixtures::random_volume(rng, 4, 4, 4);
    REQUIRE_THAT(voxmatch::ncc(f, as_template(f)),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));

    Volume neg = f;
    for (double& x : neg.data) x = -x;
    REQUIRE_THAT(voxmatch::ncc(f, as_template(neg)),
                 Catch::Matchers::WithinAbs(-1.0, 1e-12));

    Volume affine = f;  // positive gain keeps correlation at +1
    for (double& x : affine.data) x = 2.5 * x + 17.0;
    REQUIRE_THAT(voxmatch::ncc(f, as_template(affine)),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("ncc stays within [-1, 1] and matches the oracle") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Volume f = fixtures::random_volume(rng, 3, 4, 2);
    const Volume t = fixtures::random_volume(rng, 3, 4, 2);
    const double got = voxmatch::ncc(f, as_template(t));
    REQUIRE(got >= -1.0 - 1e-12);
    REQUIRE(got <= 1.0 + 1e-12);
    REQUIRE_THAT(got, Catch::Matchers::WithinAbs(oracle::ncc(f, t), 1e-9));
  }
}

TEST_CASE("ncc rejects constant inputs") {
  const Volume flat = line_volume({2.0, 2.0, 2.0});
  const Volume varied = line_volume({1.0, 2.0, 3.0});
  REQUIRE_THROWS_AS(voxmatch::ncc(flat, as_template(varied)), voxmatch::ZeroVariance);
  REQUIRE_THROWS_AS(voxmatch::ncc(varied, as_template(flat)), voxmatch::ZeroVariance);
}

TEST_CASE("dice hand-computed fixture") {
  // masks of size 2 and 2 overlap in one voxel: 2*1/(2+2) = 0.5
  const Volume f = line_volume({1.0, 1.0, 0.0, 0.0});
  const Volume t = line_volume({0.0, 1.0, 1.0, 0.0});
  REQUIRE(voxmatch::dice(f, as_template(t, 0.5), 0.5) == 0.5);
}

TEST_CASE("dice identities and bounds") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 200; ++i) {
    const Volume f = fixtures::random_volume(rng, 4, 3, 3);
    const Volume t = fixtures::random_volume(rng, 4, 3, 3);
    const double d = voxmatch::dice(f, as_template(t), 0.0);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= 1.0);
    REQUIRE(d == oracle::dice(f, t, 0.0, 0.0));
    REQUIRE(voxmatch::dice(f, as_template(f), 0.0) == 1.0);
  }
}

TEST_CASE("dice of two empty masks is a perfect match") {
  const Volume f = line_volume({-1.0, -2.0, -3.0});
  const Volume t = line_volume({-4.0, -5.0, -6.0});
  REQUIRE(voxmatch::dice(f, as_template(t, 0.0), 0.0) == 1.0);
}

TEST_CASE("dice thresholds are strict") {
  const Volume f = line_volume({0.5, 0.5});
  const Volume t = line_volume({0.6, 0.6});
  // 0.5 is not > 0.5, so the candidate mask is empty
  REQUIRE(voxmatch::dice(f, as_template(t, 0.5), 0.5) == 0.0);
}

TEST_CASE("metrics require matching dimensions") {
  const Volume f = line_volume({1.0, 2.0});
  const Volume t = line_volume({1.0, 2.0, 3.0});
  REQUIRE_THROWS_AS(voxmatch::ssd(f, as_template(t)), voxmatch::DimMismatch);
  REQUIRE_THROWS_AS(voxmatch::ncc(f, as_template(t)), voxmatch::DimMismatch);
  REQUIRE_THROWS_AS(voxmatch::dice(f, as_template(t), 0.0), voxmatch::DimMismatch);
  REQUIRE_THROWS_AS(voxmatch::ssd_at_offset(f, as_template(t), {0, 0, 0}),
                    voxmatch::DimMismatch);
}

TEST_CASE("zscore normalizes to mean 0, sd 1") {
  std::mt19937_64 rng(19);
  const Volume v = fixtures::random_volume(rng, 6, 5, 4, 3.0, 9.0);
  const Volume z = voxmatch::zscore(v);
  double mean = 0.0;
  for (double x : z.data) mean += x;
  mean /= static_cast<double>(z.data.size());
  double var = 0.0;
  for (double x : z.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(z.data.size());
  REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(var, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(z.nx == v.nx);
  REQUIRE(z.label == v.label);
}

TEST_CASE("zscore rejects constant volumes") {
  REQUIRE_THROWS_AS(voxmatch::zscore(line_volume({4.0, 4.0, 4.0})),
                    voxmatch::ZeroVariance);
}

TEST_CASE("zscore then ncc equals plain ncc") {
  // ncc is invariant under per-volume affine rescaling
  std::mt19937_64 rng(20);
  const Volume f = fixtures::random_volume(rng, 5, 5, 5);
  const Volume t = fixtures::random_volume(rng, 5, 5, 5);
  const double plain = voxmatch::ncc(f, as_template(t));
  const double scored =
      voxmatch::ncc(voxmatch::zscore(f), as_template(voxmatch::zscore(t)));
  REQUIRE_THAT(scored, Catch::Matchers::WithinAbs(plain, 1e-9));
}

TEST_CASE("evaluate_metric dispatches per kind") {
  std::mt19937_64 rng(21);
  const Volume f = fixtures::random_volume(rng, 3, 3, 3);
  const Volume t = fixtures::random_volume(rng, 3, 3, 3);
  const Template tpl = as_template(t, 0.2);
  REQUIRE(voxmatch::evaluate_metric(MetricKind::ssd, f, tpl) == voxmatch::ssd(f, tpl));
  REQUIRE(voxmatch::evaluate_metric(MetricKind::ncc, f, tpl) == voxmatch::ncc(f, tpl));
  REQUIRE(voxmatch::evaluate_metric(MetricKind::dice, f, tpl, 0.1) ==
          voxmatch::dice(f, tpl, 0.1));
}

TEST_CASE("metric names round-trip") {
  for (MetricKind k : {MetricKind::ssd, MetricKind::ncc, MetricKind::dice})
    REQUIRE(voxmatch::parse_metric(voxmatch::to_string(k)) == k);
  REQUIRE_THROWS_AS(voxmatch::parse_metric("psnr"), voxmatch::Error);
}

TEST_CASE("metric direction: only ssd prefers lower values") {
  REQUIRE(voxmatch::direction(MetricKind::ssd) ==
          voxmatch::MetricDirection::lower_is_better);
  REQUIRE(voxmatch::direction(MetricKind::ncc) ==
          voxmatch::MetricDirection::higher_is_better);
  REQUIRE(voxmatch::direction(MetricKind::dice) ==
          voxmatch::MetricDirection::higher_is_better);
}

TEST_CASE("ssd via the partitioned voxel pipeline agrees with the direct loop") {
  std::mt19937_64 rng(22);
  const Volume f = fixtures::random_volume(rng, 8, 8, 8);
  const Volume t = fixtures::random_volume(rng, 8, 8, 8);

  auto fv = voxmatch::PartitionedDataset<double>::from_items(f.data, 4);
  auto tv = voxmatch::PartitionedDataset<double>::from_items(t.data, 4);
  const double piped =
      fv.zip(tv)
          .map([](const std::pair<double, double>& p) {
            const double d = p.first - p.second;
            return d * d;
          })
          .reduce([](double a, double b) { return a + b; }, 0.0);

  REQUIRE_THAT(piped, Catch::Matchers::WithinRel(
                          voxmatch::ssd(f, as_template(t)), 1e-12));
}
