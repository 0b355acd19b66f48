#pragma once

// Weighted pure-state ensembles {p_i, input_i, target_i}.
//
// Unlifted ensembles have input_i == target_i. lift_copies() replaces each
// input by its L-fold tensor power while keeping the single-copy target, so
// estimation from L copies reuses the same fidelity machinery.
//
// Continuous ensembles are represented by finite spherical designs: an
// objective that is a polynomial of degree t in (psi, psi^dagger) only sees
// moments up to order t. Single-copy estimation and cloning fidelities need
// order 2 (tetra, equator:M for M >= 3), L-copy estimation needs order L+1
// (octa covers L <= 2).

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qcest/errors.hpp"
#include "qcest/json_io.hpp"
#include "qcest/qmath.hpp"

namespace qcest {

struct EnsembleItem {
  double weight;
  StateVector input;
  StateVector target;
};

class Ensemble {
public:
  Ensemble() = default;

  Ensemble(std::string label, std::vector<EnsembleItem> items) : label_(std::move(label)), items_(std::move(items)) {
    if (items_.empty()) throw InvariantError("ensemble must contain at least one state");
    d_in_ = items_.front().input.dim();
    d_target_ = items_.front().target.dim();
    double total = 0.0;
    for (const auto& it : items_) {
      if (!(it.weight > 0.0) || !std::isfinite(it.weight)) throw InvariantError("ensemble weights must be positive");
      if (it.input.dim() != d_in_ || it.target.dim() != d_target_)
        throw DimensionError("ensemble states have inconsistent dimensions");
      total += it.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvariantError("ensemble weights sum to " + std::to_string(total));
  }

  const std::string& label() const { return label_; }
  int d_in() const { return d_in_; }
  int d_target() const { return d_target_; }
  const std::vector<EnsembleItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  /// True when every input equals its target.
  bool unlifted() const {
    if (d_in_ != d_target_) return false;
    for (const auto& it : items_)
      if (!(it.input == it.target)) return false;
    return true;
  }

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    if (a.label_ != b.label_ || a.items_.size() != b.items_.size()) return false;
    for (std::size_t i = 0; i < a.items_.size(); ++i) {
      const auto& x = a.items_[i];
      const auto& y = b.items_[i];
      if (x.weight != y.weight || !(x.input == y.input) || !(x.target == y.target)) return false;
    }
    return true;
  }

private:
  std::string label_;
  int d_in_ = 0;
  int d_target_ = 0;
  std::vector<EnsembleItem> items_;
};

namespace detail {

inline StateVector qubit_from_bloch(double x, double y, double z) {
  const double theta = std::acos(std::clamp(z, -1.0, 1.0));
  const double phi = std::atan2(y, x);
  ComplexVector v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return StateVector::normalized(v);
}

inline Ensemble uniform(std::string label, const std::vector<StateVector>& states) {
  std::vector<EnsembleItem> items;
  const double p = 1.0 / static_cast<double>(states.size());
  for (const auto& s : states) items.push_back({p, s, s});
  return Ensemble(std::move(label), std::move(items));
}

inline std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

} // namespace detail

using BuiltinParams = std::map<std::string, double>;

/// Built-in qubit ensembles, all with uniform weights:
///   orthogonal  {|0>, |1>}
///   pair        cos(t/2)|0> +- sin(t/2)|1> with overlap cos t = c (param "c", default 0.5)
///   bb84        {|0>, |1>, |+>, |->}
///   tetra       tetrahedron vertices on the Bloch sphere (2-design)
///   octa        eigenstates of X, Y, Z (3-design)
///   equator     (|0> + e^{2 pi i k/M}|1>)/sqrt 2, k < M (param "M", default 4)
inline Ensemble make_builtin(const std::string& name, const BuiltinParams& params = {}) {
  const double r2 = 1.0 / std::sqrt(2.0);
  auto cv = [](cplx a, cplx b) {
    ComplexVector v(2);
    v << a, b;
    return StateVector::normalized(v);
  };
  auto param = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  for (const auto& kv : params)
    if (!((name == "pair" && kv.first == "c") || (name == "equator" && kv.first == "M")))
      throw UsageError("builtin '" + name + "' does not take parameter '" + kv.first + "'");

  if (name == "orthogonal") return detail::uniform("orthogonal", {StateVector::basis(2, 0), StateVector::basis(2, 1)});
  if (name == "bb84")
    return detail::uniform("bb84", {StateVector::basis(2, 0), StateVector::basis(2, 1), cv(r2, r2), cv(r2, -r2)});
  if (name == "tetra") {
    const double s = std::sqrt(2.0);
    return detail::uniform("tetra", {detail::qubit_from_bloch(0, 0, 1), detail::qubit_from_bloch(2 * s / 3, 0, -1.0 / 3),
                                     detail::qubit_from_bloch(-s / 3, std::sqrt(2.0 / 3), -1.0 / 3),
                                     detail::qubit_from_bloch(-s / 3, -std::sqrt(2.0 / 3), -1.0 / 3)});
  }
  if (name == "octa")
    return detail::uniform("octa", {StateVector::basis(2, 0), StateVector::basis(2, 1), cv(r2, r2), cv(r2, -r2),
                                    cv(r2, cplx(0, r2)), cv(r2, cplx(0, -r2))});
  if (name == "pair") {
    const double c = param("c", 0.5);
    if (!(c >= 0.0 && c < 1.0)) throw UsageError("pair overlap c must lie in [0, 1)");
    const double t = std::acos(c);
    return detail::uniform("pair:" + detail::trim_number(c),
                           {cv(std::cos(t / 2), std::sin(t / 2)), cv(std::cos(t / 2), -std::sin(t / 2))});
  }
  if (name == "equator") {
    const double mval = param("M", 4);
    if (mval != std::floor(mval) || mval < 3) throw UsageError("equator needs an integer M >= 3");
    const int m = static_cast<int>(mval);
    std::vector<StateVector> states;
    for (int k = 0; k < m; ++k) states.push_back(cv(r2, std::polar(r2, 2 * std::numbers::pi * k / m)));
    return detail::uniform("equator:" + std::to_string(m), states);
  }
  throw UsageError("unknown builtin '" + name + "'");
}

/// Accepts "name" or "name:param" (pair:0.5, equator:8).
inline Ensemble make_builtin_from_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  BuiltinParams params;
  if (colon != std::string::npos) {
    const std::string arg = spec.substr(colon + 1);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("malformed builtin parameter in '" + spec + "'");
    }
    if (name == "pair")
      params["c"] = v;
    else if (name == "equator")
      params["M"] = v;
    else
      throw UsageError(name == "orthogonal" || name == "bb84" || name == "tetra" || name == "octa"
                           ? "builtin '" + name + "' takes no parameter"
                           : "unknown builtin '" + name + "'");
  }
  return make_builtin(name, params);
}

inline Ensemble lift_copies(const Ensemble& e, int copies) {
  if (!e.unlifted()) throw InvariantError("lift_copies expects an unlifted ensemble");
  if (copies < 1) throw DimensionError("copy count must be >= 1");
  if (copies == 1) return e;
  std::size_t dim = 1;
  for (int k = 0; k < copies; ++k)
    dim = qcest::detail::checked_product(dim, static_cast<std::size_t>(e.d_target()), kDimensionCap);
  std::vector<EnsembleItem> items;
  for (const auto& it : e.items())
    items.push_back({it.weight, StateVector::normalized(kron_power(it.target.amplitudes(), copies)), it.target});
  return Ensemble(e.label() + "^" + std::to_string(copies), std::move(items));
}

/// Omega = sum_i p_i conj(in_i) conj(in_i)^dagger (x) t_i t_i^dagger, so that
/// the fidelity of a channel with normalized Choi state J is d_in tr(Omega J).
inline HermitianOperator fidelity_operator(const Ensemble& e) {
  ComplexMatrix omega = ComplexMatrix::Zero(e.d_in() * e.d_target(), e.d_in() * e.d_target());
  for (const auto& it : e.items()) {
    const ComplexVector in = it.input.amplitudes().conjugate();
    omega += it.weight * kron(ComplexMatrix(in * in.adjoint()), it.target.projector());
  }
  return HermitianOperator::hermitian_part(omega);
}

/// sum_i p_i t_i t_i^dagger.
inline HermitianOperator target_average(const Ensemble& e) {
  ComplexMatrix avg = ComplexMatrix::Zero(e.d_target(), e.d_target());
  for (const auto& it : e.items()) avg += it.weight * it.target.projector();
  return HermitianOperator::hermitian_part(avg);
}

/// Best fidelity reachable by always preparing the same state.
inline double blind_guess_value(const Ensemble& e) {
  return max_eigenvalue(target_average(e).matrix());
}

// ---------------------------------------------------------------------------
// File format

inline io::json to_json(const Ensemble& e) {
  io::json j;
  j["label"] = e.label();
  j["d_in"] = e.d_in();
  j["d_target"] = e.d_target();
  io::json states = io::json::array();
  for (const auto& it : e.items()) {
    io::json s;
    s["p"] = it.weight;
    if (!(it.input == it.target)) s["input"] = io::encode(it.input.amplitudes());
    s["target"] = io::encode(it.target.amplitudes());
    states.push_back(std::move(s));
  }
  j["states"] = std::move(states);
  return j;
}

namespace detail {

inline StateVector checked_state(const ComplexVector& v, int dim, const std::string& what) {
  if (v.size() != dim) throw SchemaError(what + ": expected " + std::to_string(dim) + " amplitudes");
  const double n = v.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9)
    throw SchemaError(what + ": state is not normalized (norm " + std::to_string(n) + ")");
  return std::abs(n - 1.0) <= kNormTol ? StateVector(v) : StateVector::normalized(v);
}

} // namespace detail

inline Ensemble ensemble_from_json(const io::json& j, const std::string& source = "ensemble") {
  if (!j.is_object()) throw SchemaError(source + ": top level must be an object");
  const int d_in = io::require_int(j, "d_in", source);
  const int d_target = io::require_int(j, "d_target", source);
  if (d_in < 1 || d_target < 1) throw SchemaError(source + ": dimensions must be positive");
  std::string label = source;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw SchemaError(source + ": label must be a string");
    label = j["label"].get<std::string>();
  }
  if (!j.contains("states") || !j["states"].is_array() || j["states"].empty())
    throw SchemaError(source + ": missing non-empty \"states\" array");
  std::vector<EnsembleItem> items;
  double total = 0.0;
  std::size_t idx = 0;
  for (const auto& s : j["states"]) {
    const std::string what = source + ": state " + std::to_string(idx++);
    if (!s.is_object() || !s.contains("p") || !s.contains("target"))
      throw SchemaError(what + ": needs \"p\" and \"target\"");
    const double p = io::decode_real(s["p"], what);
    if (!(p > 0.0)) throw SchemaError(what + ": weight must be positive");
    const StateVector target = detail::checked_state(io::decode_vector(s["target"], what), d_target, what);
    StateVector input = target;
    if (s.contains("input")) {
      input = detail::checked_state(io::decode_vector(s["input"], what), d_in, what);
    } else if (d_in != d_target) {
      throw SchemaError(what + ": \"input\" may only be omitted when d_in == d_target");
    }
    total += p;
    items.push_back({p, input, target});
  }
  if (std::abs(total - 1.0) > 1e-9) throw SchemaError(source + ": weights sum to " + io::format_real(total) + ", not 1");
  if (std::abs(total - 1.0) > 1e-12)
    for (auto& it : items) it.weight /= total;
  return Ensemble(std::move(label), std::move(items));
}

inline Ensemble load_ensemble(const std::string& path) {
  return ensemble_from_json(io::read_json_file(path), path);
}

inline void save_ensemble(const Ensemble& e, const std::string& path) {
  io::write_file(path, io::dump(to_json(e)));
}

} // namespace qcest
