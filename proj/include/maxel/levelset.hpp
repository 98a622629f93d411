#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "maxel/scores.hpp"

namespace maxel {

using IndexList = std::vector<Eigen::Index>;

/// Active policy indices of the max functional together with the ambient
/// dimension. Encodes the level-set limit {v : max_{j in active} v_j = 0}:
/// a hyperplane for one index, a cone otherwise.
class ConeSpec {
 public:
  /// Hyperplane {v_0 = 0} in one dimension.
  ConeSpec() : active_{0}, ambient_dim_(1) {}
  ConeSpec(IndexList active, Eigen::Index ambient_dim) : active_(std::move(active)), ambient_dim_(ambient_dim) {
    if (active_.empty()) throw std::invalid_argument("ConeSpec: active set must be nonempty");
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (active_[i] < 0 || active_[i] >= ambient_dim_) {
        throw std::invalid_argument("ConeSpec: active index out of range");
      }
      if (i > 0 && active_[i] <= active_[i - 1]) {
        throw std::invalid_argument("ConeSpec: active indices must be strictly increasing");
      }
    }
  }

  const IndexList& active() const { return active_; }
  Eigen::Index ambient_dim() const { return ambient_dim_; }
  std::size_t size() const { return active_.size(); }
  bool is_hyperplane() const { return active_.size() == 1; }

  friend bool operator==(const ConeSpec&, const ConeSpec&) = default;

 private:
  IndexList active_;
  Eigen::Index ambient_dim_;
};

/// Projection onto the face {m : m_j = level for j in face}.
template <typename Scalar>
struct BasicFaceProjection {
  IndexList face;
  VectorX<Scalar> point;
  /// Multipliers of the face equalities: point = anchor - cov[:, face] * multipliers.
  VectorX<Scalar> multipliers;
  Scalar cost{};
  bool feasible = false;
};

/// Nearest point of a max-level set and the smallest face that carries it.
template <typename Scalar>
struct BasicLevelProjection {
  Scalar value{};
  IndexList face;
  VectorX<Scalar> point;
};

enum class ProjectionAlgorithm {
  active_set,   ///< two-case convex reduction, polynomial in J
  enumeration,  ///< all 2^J - 1 faces; test oracle, J <= 20
};

template <typename Scalar>
Scalar feasibility_tolerance(Scalar level) {
  return Scalar(1e-9) * (Scalar(1) + std::abs(level));
}

namespace detail {

template <typename Scalar>
BasicFaceProjection<Scalar> face_projection(const VectorX<Scalar>& anchor, const MatrixX<Scalar>& cov,
                                            std::span<const Eigen::Index> face, Scalar level) {
  const auto r = static_cast<Eigen::Index>(face.size());
  MatrixX<Scalar> sub(r, r);
  VectorX<Scalar> resid(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    resid(a) = anchor(face[a]) - level;
    for (Eigen::Index b = 0; b < r; ++b) sub(a, b) = cov(face[a], face[b]);
  }
  BasicFaceProjection<Scalar> out;
  out.face.assign(face.begin(), face.end());
  out.multipliers = Eigen::LLT<MatrixX<Scalar>>(sub).solve(resid);
  out.point = anchor;
  for (Eigen::Index a = 0; a < r; ++a) out.point.noalias() -= cov.col(face[a]) * out.multipliers(a);
  for (Eigen::Index a = 0; a < r; ++a) out.point(face[a]) = level;
  out.cost = resid.dot(out.multipliers);

  const Scalar tol = feasibility_tolerance(level);
  std::vector<char> in_face(anchor.size(), 0);
  for (auto j : face) in_face[j] = 1;
  out.feasible = true;
  for (Eigen::Index k = 0; k < anchor.size(); ++k) {
    if (!in_face[k] && out.point(k) > level + tol) {
      out.feasible = false;
      break;
    }
  }
  return out;
}

/// Ordering used to pick among equally cheap faces: cost, then cardinality,
/// then lexicographic order.
template <typename Scalar>
bool preferred(Scalar cost_a, const IndexList& face_a, Scalar cost_b, const IndexList& face_b) {
  const Scalar tol = Scalar(1e-12) * (Scalar(1) + std::min(std::abs(cost_a), std::abs(cost_b)));
  if (cost_a < cost_b - tol) return true;
  if (cost_b < cost_a - tol) return false;
  if (face_a.size() != face_b.size()) return face_a.size() < face_b.size();
  return face_a < face_b;
}

/// Mahalanobis projection of `anchor` onto {m : m_k <= level for all k},
/// optionally with m_forced = level, by a primal active-set iteration. Each
/// step solves the equality-constrained projection for the current working
/// set; blocking constraints are added and negative multipliers dropped
/// (smallest index first, which rules out cycling on degenerate vertices).
/// The returned face keeps only constraints with positive multipliers, which
/// is the smallest face carrying the projection.
template <typename Scalar>
BasicFaceProjection<Scalar> project_polyhedral(const VectorX<Scalar>& anchor, const MatrixX<Scalar>& cov,
                                               Scalar level, std::optional<Eigen::Index> forced) {
  const Eigen::Index dim = anchor.size();
  std::vector<char> working(dim, 0);
  VectorX<Scalar> m = anchor;
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (forced && *forced == k) {
      m(k) = level;
    } else if (m(k) >= level) {
      m(k) = level;
      working[k] = 1;
    }
  }
  const Scalar scale = Scalar(1) + anchor.cwiseAbs().maxCoeff() + std::abs(level);
  const int max_iter = 200 + 50 * static_cast<int>(dim);

  auto current_face = [&]() {
    IndexList face;
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (working[k] || (forced && *forced == k)) face.push_back(k);
    }
    return face;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    const IndexList face = current_face();
    BasicFaceProjection<Scalar> fp;
    if (face.empty()) {
      fp.point = anchor;
      fp.cost = Scalar(0);
    } else {
      fp = face_projection<Scalar>(anchor, cov, face, level);
    }
    const VectorX<Scalar> step = fp.point - m;

    if (step.cwiseAbs().maxCoeff() <= Scalar(1e-13) * scale) {
      const Scalar lam_tol =
          Scalar(1e-11) * (Scalar(1) + (face.empty() ? Scalar(0) : fp.multipliers.cwiseAbs().maxCoeff()));
      Eigen::Index drop = -1;
      for (std::size_t a = 0; a < face.size(); ++a) {
        if (forced && *forced == face[a]) continue;
        if (fp.multipliers(static_cast<Eigen::Index>(a)) < -lam_tol) {
          drop = face[a];
          break;
        }
      }
      if (drop < 0) {
        IndexList minimal;
        for (std::size_t a = 0; a < face.size(); ++a) {
          const bool keep = (forced && *forced == face[a]) || fp.multipliers(static_cast<Eigen::Index>(a)) > lam_tol;
          if (keep) minimal.push_back(face[a]);
        }
        if (minimal.size() == face.size()) return fp;
        return face_projection<Scalar>(anchor, cov, minimal, level);
      }
      working[drop] = 0;
      continue;
    }

    Scalar alpha = Scalar(1);
    Eigen::Index blocking = -1;
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (working[k] || (forced && *forced == k) || !(step(k) > Scalar(0))) continue;
      const Scalar ak = std::max(Scalar(0), (level - m(k)) / step(k));
      if (ak < alpha) {
        alpha = ak;
        blocking = k;
      }
    }
    m.noalias() += alpha * step;
    if (blocking >= 0) {
      m(blocking) = level;
      working[blocking] = 1;
    }
  }
  throw std::runtime_error("max-level projection: active-set iteration did not terminate");
}

/// Unscaled nearest point of {m : max_j m_j = level} under the metric cov^{-1}.
///
/// If max(anchor) > level the set can be replaced by its convex hull
/// {m <= level}; otherwise some coordinate has to be raised to the level, and
/// each choice is a convex problem with that coordinate forced.
template <typename Scalar>
BasicLevelProjection<Scalar> project_max_level(const VectorX<Scalar>& anchor, const MatrixX<Scalar>& cov, Scalar level) {
  BasicLevelProjection<Scalar> best;
  bool have = false;
  auto offer = [&](BasicFaceProjection<Scalar>&& fp) {
    if (!have || preferred(fp.cost, fp.face, best.value, best.face)) {
      best.value = fp.cost;
      best.face = std::move(fp.face);
      best.point = std::move(fp.point);
      have = true;
    }
  };
  if (anchor.maxCoeff() > level) {
    offer(project_polyhedral<Scalar>(anchor, cov, level, std::nullopt));
  } else {
    for (Eigen::Index j = 0; j < anchor.size(); ++j) offer(project_polyhedral<Scalar>(anchor, cov, level, j));
  }
  return best;
}

template <typename Scalar>
BasicLevelProjection<Scalar> enumerate_max_level(const VectorX<Scalar>& anchor, const MatrixX<Scalar>& cov, Scalar level) {
  const Eigen::Index dim = anchor.size();
  if (dim > 20) throw std::invalid_argument("face enumeration is limited to dimension 20");
  BasicLevelProjection<Scalar> best;
  bool have = false;
  IndexList face;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << dim); ++mask) {
    face.clear();
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (mask & (std::uint64_t{1} << k)) face.push_back(k);
    }
    auto fp = face_projection<Scalar>(anchor, cov, face, level);
    if (!fp.feasible) continue;
    if (!have || preferred(fp.cost, fp.face, best.value, best.face)) {
      best.value = fp.cost;
      best.face = fp.face;
      best.point = std::move(fp.point);
      have = true;
    }
  }
  if (!have) throw std::runtime_error("face enumeration found no feasible face");
  return best;
}

template <typename Scalar>
BasicLevelProjection<Scalar> project_max_level(const VectorX<Scalar>& anchor, const MatrixX<Scalar>& cov, Scalar level,
                                               ProjectionAlgorithm algorithm) {
  return algorithm == ProjectionAlgorithm::enumeration ? enumerate_max_level<Scalar>(anchor, cov, level)
                                                       : project_max_level<Scalar>(anchor, cov, level);
}

inline IndexList normalized_face(std::span<const Eigen::Index> face, Eigen::Index dim) {
  IndexList out(face.begin(), face.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw std::invalid_argument("face must be nonempty");
  if (out.front() < 0 || out.back() >= dim) throw std::invalid_argument("face index out of range");
  return out;
}

}  // namespace detail

/// Projection of the score mean onto the face {m : m_j = tau, j in face}.
/// The cost carries the factor n.
template <typename Scalar>
BasicFaceProjection<Scalar> project_onto_face(const BasicScoreSummary<Scalar>& summary,
                                              std::span<const Eigen::Index> face, Scalar tau) {
  const IndexList f = detail::normalized_face(face, summary.dim());
  auto fp = detail::face_projection<Scalar>(summary.mean(), summary.cov(), f, tau);
  fp.cost *= static_cast<Scalar>(summary.n());
  return fp;
}

/// n times the squared Mahalanobis distance from the score mean to
/// {m : max_j m_j = tau}, with the minimizing face.
template <typename Scalar>
BasicLevelProjection<Scalar> profile_stat_max(const BasicScoreSummary<Scalar>& summary, Scalar tau,
                                              ProjectionAlgorithm algorithm = ProjectionAlgorithm::active_set) {
  auto res = detail::project_max_level<Scalar>(summary.mean(), summary.cov(), tau, algorithm);
  res.value *= static_cast<Scalar>(summary.n());
  return res;
}

/// (a0'z)^2 / (a0' cov a0).
template <typename DerivedZ, typename DerivedA>
typename DerivedZ::Scalar distance_to_hyperplane(const Eigen::MatrixBase<DerivedZ>& z,
                                                 const BasicScoreSummary<typename DerivedZ::Scalar>& summary,
                                                 const Eigen::MatrixBase<DerivedA>& a0) {
  using Scalar = typename DerivedZ::Scalar;
  if (z.size() != summary.dim() || a0.size() != summary.dim()) {
    throw std::invalid_argument("distance_to_hyperplane: dimension mismatch");
  }
  if (a0.isZero(Scalar(0))) throw std::invalid_argument("distance_to_hyperplane: normal vector is zero");
  const Scalar num = a0.dot(z);
  return num * num / a0.dot(summary.cov() * a0);
}

/// Repeated distance computations to one cone. Coordinates outside the
/// active block are free, so only the marginal covariance of the block is
/// needed.
template <typename Scalar>
class BasicConeProjector {
 public:
  BasicConeProjector(const MatrixX<Scalar>& cov, ConeSpec cone) : cone_(std::move(cone)) {
    if (cov.rows() != cone_.ambient_dim() || cov.cols() != cone_.ambient_dim()) {
      throw std::invalid_argument("cone projector: dimension mismatch");
    }
    const auto r = static_cast<Eigen::Index>(cone_.size());
    block_cov_.resize(r, r);
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = 0; b < r; ++b) block_cov_(a, b) = cov(cone_.active()[a], cone_.active()[b]);
    }
  }

  const ConeSpec& cone() const { return cone_; }

  /// Squared distance and minimizing face (ambient indices).
  template <typename Derived>
  std::pair<Scalar, IndexList> operator()(const Eigen::MatrixBase<Derived>& z,
                                          ProjectionAlgorithm algorithm = ProjectionAlgorithm::active_set) const {
    if (z.size() != cone_.ambient_dim()) throw std::invalid_argument("distance_to_cone: dimension mismatch");
    const auto& active = cone_.active();
    if (active.size() == 1) {
      const Scalar v = z(active[0]);
      return {v * v / block_cov_(0, 0), IndexList{active[0]}};
    }
    VectorX<Scalar> sub(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) sub(static_cast<Eigen::Index>(a)) = z(active[a]);
    auto res = detail::project_max_level<Scalar>(sub, block_cov_, Scalar(0), algorithm);
    IndexList face;
    face.reserve(res.face.size());
    for (auto a : res.face) face.push_back(active[a]);
    return {res.value, std::move(face)};
  }

 private:
  ConeSpec cone_;
  MatrixX<Scalar> block_cov_;
};

/// Squared Mahalanobis distance from z to {v : max_{j in active} v_j = 0}.
/// Not scaled by n. The point is the projection in ambient coordinates.
template <typename Derived>
BasicLevelProjection<typename Derived::Scalar> distance_to_cone(
    const Eigen::MatrixBase<Derived>& z, const BasicScoreSummary<typename Derived::Scalar>& summary,
    const ConeSpec& cone, ProjectionAlgorithm algorithm = ProjectionAlgorithm::active_set) {
  using Scalar = typename Derived::Scalar;
  if (cone.ambient_dim() != summary.dim()) throw std::invalid_argument("distance_to_cone: cone dimension mismatch");
  BasicConeProjector<Scalar> projector(summary.cov(), cone);
  auto [value, face] = projector(z, algorithm);
  BasicLevelProjection<Scalar> out;
  out.value = value;
  const VectorX<Scalar> zz = z;
  out.point = detail::face_projection<Scalar>(zz, summary.cov(), face, Scalar(0)).point;
  out.face = std::move(face);
  return out;
}

using FaceProjection = BasicFaceProjection<double>;
using LevelProjection = BasicLevelProjection<double>;
using ConeProjector = BasicConeProjector<double>;

}  // namespace maxel
