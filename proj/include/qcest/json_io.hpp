#pragma once

// JSON helpers shared by the file formats and reports. Parsing goes through
// nlohmann::json; writing uses a small emitter so that every real number is
// rendered with 17 significant digits and identical values always produce
// identical bytes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qcest/errors.hpp"
#include "qcest/qmath.hpp"

namespace qcest::io {

using json = nlohmann::ordered_json;

inline std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  if (v == 0.0 && std::signbit(v)) return "-0.0"; // "-0" would parse back as integer zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void escape(std::ostream& os, const std::string& s) {
  os << '"';
  for (unsigned char ch : s) {
    switch (ch) {
    case '"': os << "\\\""; break;
    case '\\': os << "\\\\"; break;
    case '\n': os << "\\n"; break;
    case '\r': os << "\\r"; break;
    case '\t': os << "\\t"; break;
    default:
      if (ch < 0x20) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\u%04x", ch);
        os << buf;
      } else {
        os << ch;
      }
    }
  }
  os << '"';
}

/// Arrays made only of scalars are kept on one line.
inline bool is_flat(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j)
    if (e.is_structured()) return false;
  return true;
}

inline void emit(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
  case json::value_t::null: os << "null"; break;
  case json::value_t::boolean: os << (j.get<bool>() ? "true" : "false"); break;
  case json::value_t::number_integer: os << j.get<long long>(); break;
  case json::value_t::number_unsigned: os << j.get<unsigned long long>(); break;
  case json::value_t::number_float: os << format_real(j.get<double>()); break;
  case json::value_t::string: escape(os, j.get<std::string>()); break;
  case json::value_t::array: {
    if (j.empty()) {
      os << "[]";
      break;
    }
    const bool flat = is_flat(j) || indent == 0;
    os << '[';
    bool first = true;
    for (const auto& e : j) {
      if (!first) os << ',';
      if (!flat) os << '\n' << pad;
      emit(os, e, flat ? 0 : indent, depth + 1);
      first = false;
    }
    if (!flat) os << '\n' << pad_close;
    os << ']';
    break;
  }
  case json::value_t::object: {
    if (j.empty()) {
      os << "{}";
      break;
    }
    os << '{';
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ',';
      if (indent > 0) os << '\n' << pad;
      escape(os, it.key());
      os << (indent > 0 ? ": " : ":");
      emit(os, it.value(), indent, depth + 1);
      first = false;
    }
    if (indent > 0) os << '\n' << pad_close;
    os << '}';
    break;
  }
  default: os << "null"; break;
  }
}

} // namespace detail

inline std::string dump(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::emit(os, j, indent, 0);
  os << '\n';
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error("failed writing " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
  }
}

// Complex numbers are [re, im]; vectors are arrays of those; matrices are
// row-major arrays of rows.

inline json encode(cplx z) { return json::array({z.real(), z.imag()}); }

inline json encode(const ComplexVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode(v(i)));
  return out;
}

inline json encode(const ComplexMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline double decode_real(const json& j, const std::string& what) {
  if (!j.is_number()) throw SchemaError(what + ": expected a number");
  return j.get<double>();
}

inline cplx decode_complex(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(what + ": complex numbers are [re, im] pairs");
  return {decode_real(j[0], what), decode_real(j[1], what)};
}

inline ComplexVector decode_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + ": expected an array of complex numbers");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = decode_complex(j[i], what);
  return v;
}

inline ComplexMatrix decode_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SchemaError(what + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw SchemaError(what + ": rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError(what + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = decode_complex(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

inline int require_int(const json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    throw SchemaError(what + ": missing integer field \"" + key + "\"");
  return obj[key].get<int>();
}

} // namespace qcest::io
