#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "krr/errors.hpp"
#include "krr/matrix.hpp"

namespace krr {

// A training/probe point: coordinates plus the ordinal id it carries in
// its sample. The id is what identity-sensitive kernels compare, so two
// signals with equal coordinates but different ids are distinct points.
struct Signal {
  Vector coords;
  std::size_t id = 0;
};

enum class KernelFamily { Linear, Rbf, Polynomial, Delta, Shifted };

// Value-semantic kernel description. Shifted wraps exactly one non-shifted
// base; deeper nesting is rejected at construction.
class KernelSpec {
 public:
  KernelSpec() = default;  // linear

  static KernelSpec linear() { return KernelSpec(); }

  static KernelSpec rbf(double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw InputError("rbf: bandwidth must be positive and finite");
    KernelSpec s;
    s.family_ = KernelFamily::Rbf;
    s.bandwidth_ = bandwidth;
    return s;
  }

  static KernelSpec polynomial(int degree, double offset) {
    if (degree < 1) throw InputError("polynomial: degree must be positive");
    if (!(offset >= 0.0) || !std::isfinite(offset))
      throw InputError("polynomial: offset must be nonnegative and finite");
    KernelSpec s;
    s.family_ = KernelFamily::Polynomial;
    s.degree_ = degree;
    s.offset_ = offset;
    return s;
  }

  static KernelSpec delta() {
    KernelSpec s;
    s.family_ = KernelFamily::Delta;
    return s;
  }

  static KernelSpec shifted(const KernelSpec& base, double alpha) {
    if (base.family_ == KernelFamily::Shifted)
      throw InputError("shifted: base must not itself be shifted");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw InputError("shifted: alpha must be nonnegative and finite");
    KernelSpec s;
    s.family_ = KernelFamily::Shifted;
    s.alpha_ = alpha;
    s.base_ = std::make_shared<const KernelSpec>(base);
    return s;
  }

  KernelFamily family() const noexcept { return family_; }
  double bandwidth() const noexcept { return bandwidth_; }
  int degree() const noexcept { return degree_; }
  double offset() const noexcept { return offset_; }
  double alpha() const noexcept { return alpha_; }
  const KernelSpec& base() const { return *base_; }

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    if (a.family_ != b.family_) return false;
    switch (a.family_) {
      case KernelFamily::Linear:
      case KernelFamily::Delta:
        return true;
      case KernelFamily::Rbf:
        return a.bandwidth_ == b.bandwidth_;
      case KernelFamily::Polynomial:
        return a.degree_ == b.degree_ && a.offset_ == b.offset_;
      case KernelFamily::Shifted:
        return a.alpha_ == b.alpha_ && *a.base_ == *b.base_;
    }
    return false;
  }

 private:
  KernelFamily family_ = KernelFamily::Linear;
  double bandwidth_ = 0.0;
  int degree_ = 0;
  double offset_ = 0.0;
  double alpha_ = 0.0;
  std::shared_ptr<const KernelSpec> base_;
};

namespace detail {

inline void check_same_dimension(const Signal& x1, const Signal& x2) {
  if (x1.coords.size() != x2.coords.size())
    throw InputError("kernel: signals have different dimensions");
}

// Squared distance accumulated coordinate by coordinate, in order.
inline double squared_distance(const Signal& x1, const Signal& x2) {
  double s = 0.0;
  for (std::size_t i = 0; i < x1.coords.size(); ++i) {
    const double diff = x1.coords[i] - x2.coords[i];
    s += diff * diff;
  }
  return s;
}

inline double integer_power(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

}  // namespace detail

inline double eval_kernel(const KernelSpec& spec, const Signal& x1,
                          const Signal& x2) {
  switch (spec.family()) {
    case KernelFamily::Linear:
      detail::check_same_dimension(x1, x2);
      return dot(x1.coords, x2.coords);
    case KernelFamily::Rbf:
      detail::check_same_dimension(x1, x2);
      return std::exp(-spec.bandwidth() * detail::squared_distance(x1, x2));
    case KernelFamily::Polynomial:
      detail::check_same_dimension(x1, x2);
      return detail::integer_power(dot(x1.coords, x2.coords) + spec.offset(),
                                   spec.degree());
    case KernelFamily::Delta:
      // Compares identities, not coordinates, so no dimension check.
      return x1.id == x2.id ? 1.0 : 0.0;
    case KernelFamily::Shifted:
      return eval_kernel(spec.base(), x1, x2) +
             (x1.id == x2.id ? spec.alpha() : 0.0);
  }
  throw InputError("eval_kernel: unknown kernel family");
}

struct GramMatrix {
  Matrix entries;
  KernelSpec spec;
};

// Upper triangle computed once, lower mirrored, so symmetry is exact.
inline GramMatrix gram(const KernelSpec& spec,
                       const std::vector<Signal>& signals) {
  const std::size_t n = signals.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = eval_kernel(spec, signals[i], signals[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  return GramMatrix{std::move(m), spec};
}

inline Vector cross_vector(const KernelSpec& spec,
                           const std::vector<Signal>& signals,
                           const Signal& x) {
  Vector k(signals.size());
  for (std::size_t i = 0; i < signals.size(); ++i)
    k[i] = eval_kernel(spec, signals[i], x);
  return k;
}

// Text form used by the command line: "linear", "rbf:<b>",
// "poly:<degree>:<offset>", "delta", "shifted:<base>:<alpha>".
KernelSpec parse_kernel(const std::string& text);

namespace detail {

// 17 significant digits round-trip any double through text exactly.
inline std::string real_to_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string format_kernel(const KernelSpec& spec) {
  switch (spec.family()) {
    case KernelFamily::Linear:
      return "linear";
    case KernelFamily::Rbf:
      return "rbf:" + detail::real_to_text(spec.bandwidth());
    case KernelFamily::Polynomial:
      return "poly:" + std::to_string(spec.degree()) + ":" +
             detail::real_to_text(spec.offset());
    case KernelFamily::Delta:
      return "delta";
    case KernelFamily::Shifted:
      return "shifted:" + format_kernel(spec.base()) + ":" +
             detail::real_to_text(spec.alpha());
  }
  throw InputError("format_kernel: unknown kernel family");
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_real(const std::string& token, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw InputError(std::string("kernel: bad ") + what + " '" + token + "'");
  }
  if (used != token.size() || !std::isfinite(v))
    throw InputError(std::string("kernel: bad ") + what + " '" + token + "'");
  return v;
}

inline int parse_int(const std::string& token, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    throw InputError(std::string("kernel: bad ") + what + " '" + token + "'");
  }
  if (used != token.size())
    throw InputError(std::string("kernel: bad ") + what + " '" + token + "'");
  return v;
}

}  // namespace detail

inline KernelSpec parse_kernel(const std::string& text) {
  const auto tokens = detail::split(text, ':');
  const std::string& head = tokens.front();
  if (head == "linear") {
    if (tokens.size() != 1) throw InputError("kernel: linear takes no params");
    return KernelSpec::linear();
  }
  if (head == "rbf") {
    if (tokens.size() != 2) throw InputError("kernel: rbf takes one param");
    return KernelSpec::rbf(detail::parse_real(tokens[1], "bandwidth"));
  }
  if (head == "poly") {
    if (tokens.size() != 3) throw InputError("kernel: poly takes two params");
    return KernelSpec::polynomial(detail::parse_int(tokens[1], "degree"),
                                  detail::parse_real(tokens[2], "offset"));
  }
  if (head == "delta") {
    if (tokens.size() != 1) throw InputError("kernel: delta takes no params");
    return KernelSpec::delta();
  }
  if (head == "shifted") {
    // Base spec is everything between the family tag and the final alpha.
    if (tokens.size() < 3) throw InputError("kernel: shifted takes base:alpha");
    std::string base_text = tokens[1];
    for (std::size_t i = 2; i + 1 < tokens.size(); ++i)
      base_text += ":" + tokens[i];
    return KernelSpec::shifted(parse_kernel(base_text),
                               detail::parse_real(tokens.back(), "alpha"));
  }
  throw InputError("kernel: unknown family '" + head + "'");
}

}  // namespace krr
