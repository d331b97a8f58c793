#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "ggobs/errors.hpp"

namespace ggobs {

enum class Convention { multidimensional, one_dimensional };

inline std::string to_string(Convention c) {
  return c == Convention::multidimensional ? "multidimensional" : "one_dimensional";
}

/// Parameter bundle (beta, n, alpha) of a gas-giant metric with its derived constants.
/// Immutable; the generating convention is recorded.
class GasGiantParams {
 public:
  /// beta-based constants: nu = 1/2 + beta n / 4, kappa = 2 / (beta + 2).
  static GasGiantParams multidimensional(double beta, long long n) {
    if (!std::isfinite(beta) || beta <= 0.0)
      throw ConfigError("beta must be a finite number > 0 (got " + std::to_string(beta) + ")");
    if (n < 0) throw ConfigError("n must be a nonnegative integer (got " + std::to_string(n) + ")");
    GasGiantParams p;
    p.convention_ = Convention::multidimensional;
    p.beta_ = beta;
    p.n_ = n;
    p.alpha_ = 2.0 * beta / (beta + 2.0);
    p.nu_ = 0.5 + beta * static_cast<double>(n) / 4.0;
    p.kappa_ = 2.0 / (beta + 2.0);
    p.c_beta_ = p.nu_ * p.nu_ - 0.25;
    p.t_star_ = beta + 2.0;
    p.trace_factor_ = (1.0 + beta * static_cast<double>(n) / 2.0) / (p.nu_ + 0.5);
    if (std::abs(p.t_star_ * p.kappa_ - 2.0) > 8.0 * std::numeric_limits<double>::epsilon())
      throw NumericalError("t_star and 2/kappa disagree");
    return p;
  }

  /// alpha-based constants of the 1D operator -x^alpha d^2/dx^2: nu = 1/(2 - alpha), kappa = 1 - alpha/2.
  /// alpha = 0 is admitted as the nondegenerate limit.
  static GasGiantParams one_dimensional(double alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= 2.0)
      throw ConfigError("alpha must lie in [0, 2) (got " + std::to_string(alpha) + ")");
    GasGiantParams p;
    p.convention_ = Convention::one_dimensional;
    p.alpha_ = alpha;
    p.beta_ = 2.0 * alpha / (2.0 - alpha);
    p.n_ = 0;
    p.nu_ = 1.0 / (2.0 - alpha);
    p.kappa_ = 1.0 - alpha / 2.0;
    p.c_beta_ = p.nu_ * p.nu_ - 0.25;
    p.t_star_ = 2.0 / p.kappa_;
    p.trace_factor_ = 1.0;
    return p;
  }

  /// The 1D problem with exponent alpha = 2 beta / (beta + 2).
  GasGiantParams to_one_dimensional() const {
    return convention_ == Convention::one_dimensional ? *this : one_dimensional(alpha_);
  }

  Convention convention() const noexcept { return convention_; }
  double beta() const noexcept { return beta_; }
  long long n() const noexcept { return n_; }
  double alpha() const noexcept { return alpha_; }
  double nu() const noexcept { return nu_; }
  double kappa() const noexcept { return kappa_; }
  double c_beta() const noexcept { return c_beta_; }
  double t_star() const noexcept { return t_star_; }
  double trace_factor() const noexcept { return trace_factor_; }

  friend bool operator==(const GasGiantParams&, const GasGiantParams&) = default;

 private:
  GasGiantParams() = default;

  Convention convention_ = Convention::multidimensional;
  double beta_ = 0.0;
  long long n_ = 0;
  double alpha_ = 0.0;
  double nu_ = 0.0;
  double kappa_ = 0.0;
  double c_beta_ = 0.0;
  double t_star_ = 0.0;
  double trace_factor_ = 0.0;
};

/// Rejects non-integral or negative n given as a real number.
inline GasGiantParams derive_constants(double beta, double n) {
  if (!std::isfinite(n) || n < 0.0 || std::floor(n) != n)
    throw ConfigError("n must be a nonnegative integer (got " + std::to_string(n) + ")");
  return GasGiantParams::multidimensional(beta, static_cast<long long>(n));
}

inline void to_json(nlohmann::json& j, const GasGiantParams& p) {
  j = nlohmann::json{{"convention", to_string(p.convention())},
                     {"beta", p.beta()},
                     {"n", p.n()},
                     {"alpha", p.alpha()},
                     {"nu", p.nu()},
                     {"kappa", p.kappa()},
                     {"c_beta", p.c_beta()},
                     {"t_star", p.t_star()},
                     {"trace_factor", p.trace_factor()}};
}

namespace detail {
inline double json_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}
}  // namespace detail

/// Accepts either {"beta", "n"} or {"alpha"}; an explicit "convention" selects between them when both
/// are present. Derived fields, when supplied, must match the recomputed values.
inline GasGiantParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("params must be a JSON object");
  static const char* known[] = {"convention", "beta", "n", "alpha", "nu", "kappa", "c_beta", "t_star", "trace_factor"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown params field '" + key + "'");
  }
  std::string conv;
  if (j.contains("convention")) {
    conv = j.at("convention").get<std::string>();
    if (conv != "multidimensional" && conv != "one_dimensional")
      throw ConfigError("convention must be 'multidimensional' or 'one_dimensional'");
  } else {
    conv = j.contains("beta") ? "multidimensional" : "one_dimensional";
  }
  GasGiantParams p = [&] {
    if (conv == "multidimensional") {
      if (!j.contains("beta")) throw ConfigError("params: 'beta' is required");
      double n = j.contains("n") ? detail::json_number(j, "n") : 0.0;
      return derive_constants(detail::json_number(j, "beta"), n);
    }
    if (!j.contains("alpha")) throw ConfigError("params: 'alpha' is required");
    return GasGiantParams::one_dimensional(detail::json_number(j, "alpha"));
  }();
  nlohmann::json derived;
  to_json(derived, p);
  for (const char* key : {"beta", "alpha", "nu", "kappa", "c_beta", "t_star", "trace_factor"}) {
    if (!j.contains(key)) continue;
    double given = detail::json_number(j, key);
    double expect = derived.at(key).get<double>();
    if (std::abs(given - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
      throw ConfigError(std::string("params field '") + key + "' inconsistent with the primary parameters");
  }
  if (conv == "one_dimensional" && j.contains("n") && detail::json_number(j, "n") != 0.0)
    throw ConfigError("params: n must be 0 in the one-dimensional convention");
  return p;
}

/// Physical trace from the conjugated trace.
inline double trace_constant_conversion(const GasGiantParams& p, double conjugated_trace) {
  return p.trace_factor() * conjugated_trace;
}

}  // namespace ggobs
