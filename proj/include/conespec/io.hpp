#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conespec/instances.hpp"
#include "conespec/krt.hpp"

namespace conespec {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "conespec 1.0.0";

/// Malformed input. Line and column are 1-based and 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Complex numbers are [re, im] pairs; vectors and matrices nest them row-major.
Json to_json(Complex z);
Json to_json(const CVector& v);
Json to_json(const CMatrix& m);
Complex complex_from_json(const Json& j);
CVector cvector_from_json(const Json& j);
CMatrix cmatrix_from_json(const Json& j);

Json cone_to_json(const ConeSpec& k);
ConeSpec cone_from_json(const Json& j, const Tolerances& tol = {});

Json instance_to_json(const Instance& inst);
Instance instance_from_json(const Json& j);

/// Parses an instance file; syntax errors carry line and column.
Instance parse_instance(std::string_view text);
/// Pretty form with sorted keys and a trailing newline.
std::string serialize_instance(const Instance& inst);

/// Compact form with sorted keys: the input to digests.
std::string canonical_json(const Json& j);
/// Indented form with sorted keys and a trailing newline.
std::string pretty_json(const Json& j);
std::string sha256_hex(std::string_view data);
std::string instance_digest(const Instance& inst);

Json report_to_json(const CertificationReport& rep);

Json search_record_to_json(const SearchRecord& r);
SearchRecord search_record_from_json(const Json& j);
Json search_report_to_json(const SearchReport& rep);

/// Reads a file, or standard input for "-".
std::string read_input(const std::string& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace conespec
