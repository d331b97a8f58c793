#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "json.hpp"

#include "ggobs/errors.hpp"
#include "ggobs/quadrature.hpp"

namespace ggobs {

enum class Manifold { circle, sphere2 };

inline std::string to_string(Manifold m) { return m == Manifold::circle ? "circle" : "sphere2"; }

inline Manifold manifold_from_string(const std::string& s) {
  if (s == "circle") return Manifold::circle;
  if (s == "sphere2") return Manifold::sphere2;
  throw ConfigError("manifold must be 'circle' or 'sphere2' (got '" + s + "')");
}

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Laplace-Beltrami eigenfunction label. Circle: degree k, order 0 (constant), +k (cos), -k (sin).
/// Sphere: degree l, order m in [-l, l], m > 0 cos(m phi), m < 0 sin(|m| phi).
struct Mode {
  std::size_t index = 0;
  double eigenvalue = 0.0;
  int degree = 0;
  int order = 0;
};

/// Fully normalized associated Legendre functions Pbar_l^m(z), 0 <= m <= l <= L, with
/// 2 pi int_{-1}^{1} Pbar^2 dz = 1 and no Condon-Shortley phase. Entry (l, m) at l (l + 1) / 2 + m.
template <class Real>
std::vector<Real> normalized_legendre(int L, const Real& z) {
  using std::sqrt;
  const Real one_minus = Real(1) - z * z;
  const Real s = one_minus > 0 ? Real(sqrt(one_minus)) : Real(0);
  std::vector<Real> p(static_cast<std::size_t>((L + 1) * (L + 2) / 2), Real(0));
  auto at = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
  p[0] = 1 / sqrt(4 * boost::math::constants::pi<Real>());
  for (int m = 1; m <= L; ++m) p[at(m, m)] = sqrt(Real(2 * m + 1) / Real(2 * m)) * s * p[at(m - 1, m - 1)];
  for (int m = 0; m < L; ++m) p[at(m + 1, m)] = sqrt(Real(2 * m + 3)) * z * p[at(m, m)];
  for (int m = 0; m <= L; ++m) {
    for (int l = m + 2; l <= L; ++l) {
      const Real a = sqrt(Real(4 * l * l - 1) / Real(l * l - m * m));
      const Real b = sqrt(Real((l - 1) * (l - 1) - m * m) / Real(4 * (l - 1) * (l - 1) - 1));
      p[at(l, m)] = a * (z * p[at(l - 1, m)] - b * p[at(l - 2, m)]);
    }
  }
  return p;
}

struct QuadratureNode {
  Vec3 point;
  double weight = 0.0;
};

/// Eigenbasis of the Laplacian on S^1 or S^2 up to an eigenvalue cutoff.
class TangentialBasis {
 public:
  static constexpr std::size_t kDefaultMaxDimension = 2000;

  TangentialBasis(Manifold manifold, double max_eigenvalue, std::size_t max_dimension = kDefaultMaxDimension)
      : manifold_(manifold), cutoff_(max_eigenvalue) {
    if (!(max_eigenvalue >= 0.0) || !std::isfinite(max_eigenvalue))
      throw ConfigError("build_basis: max_eigenvalue must be >= 0");
    if (manifold == Manifold::circle) {
      bandwidth_ = static_cast<int>(std::floor(std::sqrt(max_eigenvalue) + 1e-12));
      const std::size_t dim = 2 * static_cast<std::size_t>(bandwidth_) + 1;
      if (dim > max_dimension) throw ConfigError("build_basis: dimension " + std::to_string(dim) + " exceeds limit");
      modes_.push_back({0, 0.0, 0, 0});
      for (int k = 1; k <= bandwidth_; ++k) {
        modes_.push_back({modes_.size(), double(k) * k, k, k});
        modes_.push_back({modes_.size(), double(k) * k, k, -k});
      }
    } else {
      int L = 0;
      while (double(L + 1) * (L + 2) <= max_eigenvalue + 1e-12) ++L;
      bandwidth_ = L;
      const std::size_t dim = static_cast<std::size_t>(L + 1) * (L + 1);
      if (dim > max_dimension) throw ConfigError("build_basis: dimension " + std::to_string(dim) + " exceeds limit");
      for (int l = 0; l <= L; ++l) {
        modes_.push_back({modes_.size(), double(l) * (l + 1), l, 0});
        for (int m = 1; m <= l; ++m) {
          modes_.push_back({modes_.size(), double(l) * (l + 1), l, m});
          modes_.push_back({modes_.size(), double(l) * (l + 1), l, -m});
        }
      }
    }
  }

  Manifold manifold() const noexcept { return manifold_; }
  double cutoff() const noexcept { return cutoff_; }
  /// Largest degree present.
  int bandwidth() const noexcept { return bandwidth_; }
  std::size_t dimension() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  const Mode& mode(std::size_t k) const { return modes_.at(k); }

  double total_volume() const noexcept { return manifold_ == Manifold::circle ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

  /// Index of the mode with the given degree and order.
  std::size_t index_of(int degree, int order) const {
    for (const auto& m : modes_)
      if (m.degree == degree && m.order == order) return m.index;
    throw ConfigError("mode (" + std::to_string(degree) + ", " + std::to_string(order) + ") not in basis");
  }

  /// All basis functions at a point of the manifold (circle points are (cos y, sin y, 0)).
  Eigen::VectorXd evaluate_all(const Vec3& p) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(dimension()));
    const double phi = std::atan2(p.y(), p.x());
    if (manifold_ == Manifold::circle) {
      out(0) = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      const double c = 1.0 / std::sqrt(std::numbers::pi);
      for (int k = 1; k <= bandwidth_; ++k) {
        out(2 * k - 1) = c * std::cos(k * phi);
        out(2 * k) = c * std::sin(k * phi);
      }
      return out;
    }
    const double z = std::clamp(p.z() / p.norm(), -1.0, 1.0);
    const auto P = normalized_legendre<double>(bandwidth_, z);
    Eigen::Index i = 0;
    for (int l = 0; l <= bandwidth_; ++l) {
      out(i++) = P[static_cast<std::size_t>(l * (l + 1) / 2)];
      for (int m = 1; m <= l; ++m) {
        const double v = std::numbers::sqrt2 * P[static_cast<std::size_t>(l * (l + 1) / 2 + m)];
        out(i++) = v * std::cos(m * phi);
        out(i++) = v * std::sin(m * phi);
      }
    }
    return out;
  }

  double evaluate(std::size_t k, const Vec3& p) const { return evaluate_all(p)(static_cast<Eigen::Index>(k)); }

  /// Product rule exact for products of two basis elements (and some margin).
  std::vector<QuadratureNode> quadrature() const {
    std::vector<QuadratureNode> nodes;
    const double pi = std::numbers::pi;
    if (manifold_ == Manifold::circle) {
      const int n = 2 * bandwidth_ + 2;
      for (int j = 0; j < n; ++j) {
        const double y = 2.0 * pi * j / n;
        nodes.push_back({Vec3(std::cos(y), std::sin(y), 0.0), 2.0 * pi / n});
      }
      return nodes;
    }
    const int nz = bandwidth_ + 2, nphi = 2 * bandwidth_ + 2;
    const auto gl = gauss_legendre<double>(static_cast<std::size_t>(nz));
    for (int i = 0; i < nz; ++i) {
      const double z = gl.nodes[i], s = std::sqrt(1.0 - z * z);
      for (int j = 0; j < nphi; ++j) {
        const double phi = 2.0 * pi * j / nphi;
        nodes.push_back({Vec3(s * std::cos(phi), s * std::sin(phi), z), gl.weights[i] * 2.0 * pi / nphi});
      }
    }
    return nodes;
  }

 private:
  Manifold manifold_;
  double cutoff_;
  int bandwidth_ = 0;
  std::vector<Mode> modes_;
};

inline TangentialBasis build_basis(Manifold manifold, double max_eigenvalue,
                                   std::size_t max_dimension = TangentialBasis::kDefaultMaxDimension) {
  return TangentialBasis(manifold, max_eigenvalue, max_dimension);
}

/// Geodesic ball: a cap {y : angle(y, center) <= radius} on S^2, an arc of half-width `radius` on S^1.
struct Region {
  Manifold manifold = Manifold::sphere2;
  Vec3 center = Vec3::UnitZ();
  double radius = 0.0;

  static Region cap(const Vec3& center, double angular_radius) {
    if (!(angular_radius > 0.0 && angular_radius <= std::numbers::pi))
      throw ConfigError("cap radius must lie in (0, pi]");
    if (!(center.norm() > 0.0)) throw ConfigError("cap center must be nonzero");
    return {Manifold::sphere2, center.normalized(), angular_radius};
  }
  static Region arc(double center_angle, double half_width) {
    if (!(half_width > 0.0 && half_width <= std::numbers::pi)) throw ConfigError("arc half-width must lie in (0, pi]");
    return {Manifold::circle, Vec3(std::cos(center_angle), std::sin(center_angle), 0.0), half_width};
  }
  static Region full(Manifold m) {
    return m == Manifold::circle ? arc(0.0, std::numbers::pi) : cap(Vec3::UnitZ(), std::numbers::pi);
  }

  /// Normalized volume L.
  double fraction() const {
    return manifold == Manifold::circle ? radius / std::numbers::pi : (1.0 - std::cos(radius)) / 2.0;
  }
  double center_angle() const { return std::atan2(center.y(), center.x()); }
  bool contains(const Vec3& p) const { return center.dot(p.normalized()) >= std::cos(radius); }
};

/// Rotation about the z axis (the circle's rotations).
inline Mat3 planar_rotation(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

/// A rotation taking the north pole to `target`.
inline Mat3 rotation_to(const Vec3& target) {
  const Vec3 t = target.normalized();
  return Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), t).toRotationMatrix();
}

enum class RotationProvenance { grid, spherical_design };

inline std::string to_string(RotationProvenance p) {
  return p == RotationProvenance::grid ? "grid" : "spherical_design";
}

struct RotationSet {
  std::vector<Mat3> rotations;
  RotationProvenance provenance = RotationProvenance::grid;
  /// Strength t of the underlying spherical design.
  int strength = 0;
  std::size_t size() const noexcept { return rotations.size(); }
};

inline void validate_rotation(Manifold m, const Mat3& R) {
  if ((R.transpose() * R - Mat3::Identity()).norm() > 1e-10 || std::abs(R.determinant() - 1.0) > 1e-10)
    throw ConfigError("rotation matrix is not a proper rotation");
  if (m == Manifold::circle && (std::abs(R(2, 2) - 1.0) > 1e-10))
    throw ConfigError("circle rotations must fix the z axis");
}

namespace detail {

/// int_{c-w}^{c+w} of cos(k y) (sin_part false) or sin(k y).
inline double arc_trig_integral(int k, bool sin_part, double c, double w) {
  if (k == 0) return sin_part ? 0.0 : 2.0 * w;
  const double a = c - w, b = c + w;
  return sin_part ? (std::cos(k * a) - std::cos(k * b)) / k : (std::sin(k * b) - std::sin(k * a)) / k;
}

/// Closed-form Gram of the Fourier basis over an arc.
inline Eigen::MatrixXd circle_arc_gram(const TangentialBasis& basis, double c, double w) {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  Eigen::MatrixXd M(d, d);
  // f_a = s_a * trig(k_a y); products via sum-to-product formulas.
  struct F {
    int k;
    bool sine;
    double scale;
  };
  std::vector<F> f;
  for (const auto& m : basis.modes()) {
    if (m.order == 0)
      f.push_back({0, false, 1.0 / std::sqrt(2.0 * std::numbers::pi)});
    else
      f.push_back({m.degree, m.order < 0, 1.0 / std::sqrt(std::numbers::pi)});
  }
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      const auto& fa = f[static_cast<std::size_t>(a)];
      const auto& fb = f[static_cast<std::size_t>(b)];
      const int p = fa.k - fb.k, q = fa.k + fb.k;
      double v;
      if (!fa.sine && !fb.sine) {
        v = 0.5 * (arc_trig_integral(std::abs(p), false, c, w) + arc_trig_integral(q, false, c, w));
      } else if (fa.sine && fb.sine) {
        v = 0.5 * (arc_trig_integral(std::abs(p), false, c, w) - arc_trig_integral(q, false, c, w));
      } else {
        // sin(s y) cos(t y) = (sin((s+t) y) + sin((s-t) y)) / 2
        const int s = fa.sine ? fa.k : fb.k, t = fa.sine ? fb.k : fa.k;
        const int diff = s - t;
        const double sd = diff >= 0 ? arc_trig_integral(diff, true, c, w) : -arc_trig_integral(-diff, true, c, w);
        v = 0.5 * (arc_trig_integral(s + t, true, c, w) + sd);
      }
      M(a, b) = M(b, a) = fa.scale * fb.scale * v;
    }
  }
  return M;
}

}  // namespace detail

/// Quadrature adapted to a cap: Gauss-Legendre in the polar coordinate z in [cos r, 1] of the cap frame,
/// uniform in longitude; exact for polynomials of degree <= 2 * degree on the sphere.
inline std::vector<QuadratureNode> cap_quadrature(const Region& cap, int degree) {
  std::vector<QuadratureNode> nodes;
  const int nz = degree + 2, nphi = 2 * degree + 2;
  const auto gl = gauss_legendre<double>(static_cast<std::size_t>(nz), std::cos(cap.radius), 1.0);
  const Mat3 Q = rotation_to(cap.center);
  for (int i = 0; i < nz; ++i) {
    const double z = gl.nodes[i], s = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / nphi;
      nodes.push_back({Q * Vec3(s * std::cos(phi), s * std::sin(phi), z), gl.weights[i] * 2.0 * std::numbers::pi / nphi});
    }
  }
  return nodes;
}

/// M(R)_{ab} = int over R(region) of e_a e_b.
inline Eigen::MatrixXd restricted_gram(const TangentialBasis& basis, const Region& region, const Mat3& R) {
  if (region.manifold != basis.manifold()) throw ConfigError("restricted_gram: region and basis manifolds differ");
  validate_rotation(basis.manifold(), R);
  const Vec3 center = R * region.center;
  if (basis.manifold() == Manifold::circle)
    return detail::circle_arc_gram(basis, std::atan2(center.y(), center.x()), region.radius);
  const auto nodes = cap_quadrature(Region{region.manifold, center, region.radius}, basis.bandwidth());
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  Eigen::MatrixXd E(d, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i)
    E.col(static_cast<Eigen::Index>(i)) = std::sqrt(nodes[i].weight) * basis.evaluate_all(nodes[i].point);
  Eigen::MatrixXd M = E * E.transpose();
  return 0.5 * (M + M.transpose());
}

inline Eigen::MatrixXd restricted_gram(const TangentialBasis& basis, const Region& region) {
  return restricted_gram(basis, region, Mat3::Identity());
}

/// Index of the sectoral harmonic of degree l (order +l).
inline std::size_t concentrating_mode(const TangentialBasis& basis, int l) {
  if (basis.manifold() != Manifold::sphere2) throw ConfigError("concentrating_mode: sphere2 basis required");
  if (l < 0 || l > basis.bandwidth()) throw ConfigError("concentrating_mode: degree not present in basis");
  return basis.index_of(l, l);
}

/// Axis-angle form (unit axis, angle in [0, pi]).
inline std::pair<Vec3, double> axis_angle(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return {aa.axis(), aa.angle()};
}

/// Uniformly distributed rotation (Haar measure) for the manifold.
template <class Rng>
Mat3 random_rotation(Manifold m, Rng& rng) {
  if (m == Manifold::circle) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    return planar_rotation(u(rng));
  }
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

/// Sum over points of every nonconstant harmonic of degree <= t; zero iff the points form a t-design.
inline Eigen::VectorXd design_moments(const std::vector<Vec3>& points, int t) {
  const TangentialBasis b(Manifold::sphere2, double(t) * (t + 1) + 0.5);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.dimension()) - 1);
  for (const auto& p : points) r += b.evaluate_all(p).tail(r.size());
  return r;
}

namespace detail {

struct DesignResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  int n_points;
  int strength;
  int n_values;

  int inputs() const { return 2 * n_points; }
  int values() const { return n_values; }

  static std::vector<Vec3> points(const Eigen::VectorXd& x) {
    std::vector<Vec3> p;
    for (Eigen::Index j = 0; j + 1 < x.size(); j += 2)
      p.emplace_back(std::sin(x(j)) * std::cos(x(j + 1)), std::sin(x(j)) * std::sin(x(j + 1)), std::cos(x(j)));
    return p;
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    r.setZero();
    const auto m = design_moments(points(x), strength);
    r.head(m.size()) = m;
    return 0;
  }
};

inline std::vector<Vec3> optimize_design(int n_points, int strength) {
  const int moments = (strength + 1) * (strength + 1) - 1;
  DesignResidual f{n_points, strength, std::max(moments, 2 * n_points)};
  Eigen::NumericalDiff<DesignResidual> nd(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<DesignResidual>> lm(nd);
  lm.parameters.maxfev = 200000;
  lm.parameters.ftol = 1e-16;
  lm.parameters.xtol = 1e-16;
  // Fibonacci spiral start.
  Eigen::VectorXd x(2 * n_points);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int j = 0; j < n_points; ++j) {
    x(2 * j) = std::acos(1.0 - (2.0 * j + 1.0) / n_points);
    x(2 * j + 1) = golden * j;
  }
  lm.minimize(x);
  auto pts = DesignResidual::points(x);
  const double res = design_moments(pts, strength).norm() / n_points;
  if (res > 1e-12)
    throw NumericalError("spherical design optimization did not converge (t = " + std::to_string(strength) +
                         ", residual " + std::to_string(res) + ")");
  return pts;
}

}  // namespace detail

/// Points of a spherical t-design on S^2: tetrahedron (t = 2, 4 points), octahedron (t = 3, 6 points),
/// icosahedron (t = 5, 12 points), or a 72-point set optimized for t = 11 (computed once, cached).
inline std::vector<Vec3> spherical_design_points(int t) {
  if (t <= 2) {
    const double s = 1.0 / std::sqrt(3.0);
    return {Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)};
  }
  if (t == 3) return {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
  if (t <= 5) {
    const double ph = std::numbers::phi;
    std::vector<Vec3> p;
    for (double a : {-1.0, 1.0})
      for (double b : {-ph, ph}) {
        p.push_back(Vec3(0, a, b).normalized());
        p.push_back(Vec3(a, b, 0).normalized());
        p.push_back(Vec3(b, 0, a).normalized());
      }
    return p;
  }
  if (t <= 11) {
    static std::once_flag once;
    static std::vector<Vec3> cached;
    std::call_once(once, [] { cached = detail::optimize_design(72, 11); });
    return cached;
  }
  throw ConfigError("spherical designs available for t <= 11 only");
}

/// Rotations carrying the north pole onto each point of a spherical t-design.
inline RotationSet spherical_design_rotations(int t) {
  RotationSet set;
  set.provenance = RotationProvenance::spherical_design;
  set.strength = t <= 2 ? 2 : t == 3 ? 3 : t <= 5 ? 5 : 11;
  for (const auto& p : spherical_design_points(t)) set.rotations.push_back(rotation_to(p));
  return set;
}

/// J equally spaced planar rotations (exact for trigonometric degree < J).
inline RotationSet circle_rotations(std::size_t J) {
  if (J == 0) throw ConfigError("circle_rotations: J must be positive");
  RotationSet set;
  set.provenance = RotationProvenance::grid;
  set.strength = static_cast<int>(J) - 1;
  for (std::size_t j = 0; j < J; ++j) set.rotations.push_back(planar_rotation(2.0 * std::numbers::pi * j / J));
  return set;
}

inline nlohmann::json region_to_json(const Region& r) {
  nlohmann::json j{{"manifold", to_string(r.manifold)}, {"radius", r.radius}, {"fraction", r.fraction()}};
  if (r.manifold == Manifold::circle)
    j["center_angle"] = r.center_angle();
  else
    j["center"] = {r.center.x(), r.center.y(), r.center.z()};
  return j;
}

/// Gram export: {"d", "manifold", "region", "rotation_axis", "rotation_angle", "matrix"}.
inline nlohmann::json gram_to_json(const TangentialBasis& basis, const Region& region, const Mat3& R,
                                   const Eigen::MatrixXd& M) {
  auto [axis, angle] = axis_angle(R);
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return {{"d", basis.dimension()},
          {"manifold", to_string(basis.manifold())},
          {"cutoff", basis.cutoff()},
          {"region", region_to_json(region)},
          {"rotation_axis", {axis.x(), axis.y(), axis.z()}},
          {"rotation_angle", angle},
          {"matrix", rows}};
}

}  // namespace ggobs
