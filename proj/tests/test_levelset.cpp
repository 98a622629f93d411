#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "maxel/levelset.hpp"
#include "maxel/rng.hpp"
#include "test_support.hpp"

using namespace maxel;

namespace {

ScoreSummary identity_summary(Eigen::VectorXd mean, Eigen::Index n) {
  const auto dim = mean.size();
  return ScoreSummary::from_moments(std::move(mean), Eigen::MatrixXd::Identity(dim, dim), n);
}

ConeSpec random_cone(Eigen::Index dim, std::size_t max_active, RngStream& rng) {
  IndexList active;
  while (active.empty()) {
    active.clear();
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (active.size() < max_active && rng.uniform() < 0.6) active.push_back(j);
    }
  }
  return ConeSpec(active, dim);
}

}  // namespace

TEST_CASE("ConeSpec validates its indices") {
  CHECK_THROWS_AS(ConeSpec({}, 3), std::invalid_argument);
  CHECK_THROWS_AS(ConeSpec({1, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(ConeSpec({2, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(ConeSpec({3}, 3), std::invalid_argument);
  CHECK(ConeSpec({0, 2}, 3).size() == 2);
  CHECK(ConeSpec({1}, 3).is_hyperplane());
}

TEST_CASE("project_onto_face: worked examples") {
  const auto s = identity_summary(Eigen::Vector2d(1, 0), 100);
  const std::vector<Eigen::Index> face0 = {0};
  const auto fp = project_onto_face(s, std::span<const Eigen::Index>(face0), 0.0);
  CHECK(fp.point.norm() < 1e-15);
  CHECK(fp.cost == doctest::Approx(100.0));
  CHECK(fp.feasible);

  // Mean already on the face.
  const auto on = identity_summary(Eigen::Vector3d(0.4, 0.4, -1.0), 30);
  const std::vector<Eigen::Index> face01 = {0, 1};
  const auto fp2 = project_onto_face(on, std::span<const Eigen::Index>(face01), 0.4);
  CHECK(fp2.cost == doctest::Approx(0.0));
  CHECK((fp2.point - on.mean()).norm() < 1e-15);

  const std::vector<Eigen::Index> empty;
  CHECK_THROWS_AS(project_onto_face(s, std::span<const Eigen::Index>(empty), 0.0), std::invalid_argument);
}

TEST_CASE("project_onto_face matches the dense KKT solve") {
  auto rng = derive_stream(31, {});
  for (int rep = 0; rep < 300; ++rep) {
    const Eigen::Index dim = 2 + rep % 5;
    const Eigen::MatrixXd cov = testing::random_spd(dim, rng);
    const Eigen::VectorXd mean = testing::random_vector(dim, rng);
    const auto s = ScoreSummary::from_moments(mean, cov, 80);
    IndexList face;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (rng.uniform() < 0.5) face.push_back(j);
    }
    if (face.empty()) face.push_back(dim - 1);
    const double tau = rng.normal();
    Eigen::VectorXd kkt_point;
    const double kkt = 80.0 * testing::kkt_face_cost(mean, cov, face, tau, &kkt_point);
    const auto fp = project_onto_face(s, std::span<const Eigen::Index>(face), tau);
    CHECK(fp.cost == doctest::Approx(kkt).epsilon(1e-9));
    CHECK((fp.point - kkt_point).norm() <= 1e-9 * (1.0 + kkt_point.norm()));
    for (auto j : face) CHECK(fp.point(j) == tau);
    // Stored cost is the Mahalanobis form of the displacement.
    const double form = 80.0 * (fp.point - mean).dot(cov.inverse() * (fp.point - mean));
    CHECK(fp.cost == doctest::Approx(form).epsilon(1e-9));
  }
}

TEST_CASE("profile_stat_max: worked examples") {
  SUBCASE("mean on the level set") {
    const auto s = identity_summary(Eigen::Vector3d(0.2, 0.5, 0.1), 50);
    const auto r = profile_stat_max(s, 0.5);
    CHECK(r.value == 0.0);
    CHECK(r.face == IndexList{1});
  }
  SUBCASE("tie between a face and its superset resolves to the smaller face") {
    const auto s = identity_summary(Eigen::Vector2d(1, 0), 100);
    for (auto algo : {ProjectionAlgorithm::active_set, ProjectionAlgorithm::enumeration}) {
      const auto r = profile_stat_max(s, 0.0, algo);
      CHECK(r.value == doctest::Approx(100.0));
      CHECK(r.face == IndexList{0});
    }
  }
  SUBCASE("symmetric raise picks the first coordinate") {
    const auto s = identity_summary(Eigen::Vector2d(0, 0), 10);
    const auto r = profile_stat_max(s, 1.0);
    CHECK(r.value == doctest::Approx(10.0));
    CHECK(r.face == IndexList{0});
  }
}

TEST_CASE("profile_stat_max agrees with exhaustive face enumeration") {
  auto rng = derive_stream(41, {});
  for (int rep = 0; rep < 500; ++rep) {
    const Eigen::Index dim = 1 + rep % 4;
    const Eigen::MatrixXd cov = testing::random_spd(dim, rng);
    const Eigen::VectorXd mean = testing::random_vector(dim, rng);
    const auto s = ScoreSummary::from_moments(mean, cov, 100);
    const double tau = mean.maxCoeff() + 0.8 * rng.normal();
    const auto fast = profile_stat_max(s, tau);
    const auto slow = profile_stat_max(s, tau, ProjectionAlgorithm::enumeration);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-8));
    CHECK(fast.face == slow.face);
  }
}

TEST_CASE("profile_stat_max matches enumeration up to twelve policies") {
  auto rng = derive_stream(43, {});
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::Index dim = 5 + rep % 8;
    const Eigen::MatrixXd cov = testing::random_spd(dim, rng);
    const Eigen::VectorXd mean = testing::random_vector(dim, rng, 0.3);
    const auto s = ScoreSummary::from_moments(mean, cov, 200);
    const double tau = mean.maxCoeff() + 0.5 * rng.normal();
    const auto fast = profile_stat_max(s, tau);
    const auto slow = profile_stat_max(s, tau, ProjectionAlgorithm::enumeration);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-8));
    CHECK(fast.face == slow.face);
  }
}

TEST_CASE("profile_stat_max is monotone on both sides of the plug-in maximum") {
  auto rng = derive_stream(47, {});
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index dim = 2 + rep % 4;
    const auto s = ScoreSummary::from_moments(testing::random_vector(dim, rng), testing::random_spd(dim, rng), 100);
    const double top = s.mean().maxCoeff();
    CHECK(profile_stat_max(s, top).value == doctest::Approx(0.0));
    double prev_left = 0.0, prev_right = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double left = profile_stat_max(s, top - 0.05 * k).value;
      const double right = profile_stat_max(s, top + 0.05 * k).value;
      CHECK(left > prev_left);
      CHECK(right > prev_right);
      prev_left = left;
      prev_right = right;
    }
  }
}

TEST_CASE("distance_to_hyperplane") {
  const auto s = identity_summary(Eigen::Vector2d::Zero(), 10);
  CHECK(distance_to_hyperplane(Eigen::Vector2d(2, 7), s, Eigen::Vector2d(1, 0)) == doctest::Approx(4.0));
  CHECK(distance_to_hyperplane(Eigen::Vector2d(0, 7), s, Eigen::Vector2d(1, 0)) == 0.0);
  CHECK_THROWS_AS(distance_to_hyperplane(Eigen::Vector2d(1, 1), s, Eigen::Vector2d(0, 0)), std::invalid_argument);

  auto rng = derive_stream(53, {});
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index dim = 1 + rep % 5;
    const Eigen::MatrixXd cov = testing::random_spd(dim, rng);
    const auto sm = ScoreSummary::from_moments(Eigen::VectorXd::Zero(dim), cov, 10);
    const Eigen::VectorXd z = testing::random_vector(dim, rng);
    const Eigen::VectorXd a = testing::random_vector(dim, rng);
    CHECK(distance_to_hyperplane(z, sm, a) == doctest::Approx(testing::kkt_hyperplane_cost(z, cov, a)).epsilon(1e-9));
  }
}

TEST_CASE("distance_to_cone: worked examples") {
  const auto s3 = identity_summary(Eigen::Vector3d::Zero(), 10);
  const auto r = distance_to_cone(Eigen::Vector3d(3, -1, 5), s3, ConeSpec({0, 1}, 3));
  CHECK(r.value == doctest::Approx(9.0));
  CHECK(r.face == IndexList{0});
  CHECK((r.point - Eigen::Vector3d(0, -1, 5)).norm() < 1e-14);

  const auto s2 = identity_summary(Eigen::Vector2d::Zero(), 10);
  const auto r2 = distance_to_cone(Eigen::Vector2d(3, 4), s2, ConeSpec({0, 1}, 2));
  CHECK(r2.value == doctest::Approx(25.0));
  CHECK(r2.face == IndexList{0, 1});

  CHECK_THROWS_AS(distance_to_cone(Eigen::Vector2d(3, 4), s2, ConeSpec({0}, 3)), std::invalid_argument);
}

TEST_CASE("distance_to_cone agrees with enumeration on random cones") {
  auto rng = derive_stream(59, {});
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::Index dim = 1 + rep % 6;
    const Eigen::MatrixXd cov = testing::random_spd(dim, rng);
    const auto s = ScoreSummary::from_moments(Eigen::VectorXd::Zero(dim), cov, 10);
    const auto cone = random_cone(dim, 4, rng);
    const Eigen::VectorXd z = testing::random_vector(dim, rng, 1.5);
    const auto fast = distance_to_cone(z, s, cone);
    const auto slow = distance_to_cone(z, s, cone, ProjectionAlgorithm::enumeration);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-8));
    CHECK(fast.face == slow.face);

    // Containment: the cone sits inside the union of its coordinate hyperplanes.
    double min_plane = std::numeric_limits<double>::infinity();
    for (auto j : cone.active()) {
      min_plane = std::min(min_plane, distance_to_hyperplane(z, s, Eigen::VectorXd::Unit(dim, j)));
    }
    CHECK(fast.value >= min_plane * (1.0 - 1e-10) - 1e-12);
    if (cone.size() == 1) CHECK(fast.value == doctest::Approx(min_plane).epsilon(1e-10));

    // Scaling the metric by t divides the distance by t.
    const auto scaled = ScoreSummary::from_moments(Eigen::VectorXd::Zero(dim), 3.0 * cov, 10);
    CHECK(distance_to_cone(z, scaled, cone).value == doctest::Approx(fast.value / 3.0).epsilon(1e-10));
  }
}

TEST_CASE("distance_to_cone is zero exactly on the cone") {
  auto rng = derive_stream(61, {});
  const double tol = feasibility_tolerance(0.0);
  for (int rep = 0; rep < 300; ++rep) {
    const Eigen::Index dim = 2 + rep % 4;
    const auto s = ScoreSummary::from_moments(Eigen::VectorXd::Zero(dim), testing::random_spd(dim, rng), 10);
    const auto cone = random_cone(dim, 4, rng);
    Eigen::VectorXd z = testing::random_vector(dim, rng);
    if (rep % 2 == 0) {
      // Push onto the cone: active coordinates <= 0 with one equal to 0.
      for (auto j : cone.active()) z(j) = -std::abs(z(j));
      z(cone.active()[rep % cone.size()]) = 0.0;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (auto j : cone.active()) top = std::max(top, z(j));
    const bool member = std::abs(top) <= tol;
    const double d = distance_to_cone(z, s, cone).value;
    CHECK((d <= 1e-9) == member);
  }
}
