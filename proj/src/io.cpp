#include "conespec/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

#include "conespec/random.hpp"

namespace conespec {

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw ParseError(what); }

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) schema_error(where + ": unknown key '" + key + "'");
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) schema_error(where + ": missing key '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where + ": expected a number");
  return j.get<double>();
}

Index dimension(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    schema_error(where + ": expected a nonnegative integer");
  return static_cast<Index>(j.get<long long>());
}

RMatrix real_rows(const Json& j, Index n, const std::string& where) {
  if (!j.is_array()) schema_error(where + ": expected an array of vectors");
  RMatrix m(static_cast<Index>(j.size()), n);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& row = j[i];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      schema_error(where + ": every vector needs " + std::to_string(n) + " entries");
    for (Index c = 0; c < n; ++c) m(static_cast<Index>(i), c) = number(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

Json real_rows_to_json(const RMatrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

// NaN and infinities have no JSON form; they are written as null.
Json real_value(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

bool integer_tolerance(const std::string& name) { return name == "arc_grid" || name == "probes"; }

Json tolerances_to_json(const Tolerances& tol) {
  Json out = Json::object();
  for (const auto& [name, value] : tolerance_entries(tol)) {
    if (integer_tolerance(name)) {
      out[name] = static_cast<long long>(value);
    } else {
      out[name] = value;
    }
  }
  return out;
}

Json evidence_to_json(const EvidenceValue& e) {
  switch (e.type) {
    case EvidenceValue::Type::Number: return real_value(e.number);
    case EvidenceValue::Type::Integer: return e.integer;
    case EvidenceValue::Type::Text: return e.text;
    case EvidenceValue::Type::Scalar: return to_json(e.scalar);
    case EvidenceValue::Type::Vector: return to_json(e.vector);
  }
  return nullptr;
}

Json certificate_to_json(const PositivityCertificate& c) {
  Json w = Json::array();
  for (const auto& x : c.witnesses)
    w.push_back({{"input", to_json(x.input)}, {"image", to_json(x.image)}, {"reason", x.reason}});
  return {{"verdict", to_string(c.verdict)},
          {"method", to_string(c.method)},
          {"probes_used", c.probes_used},
          {"witnesses", std::move(w)}};
}

Json pair_to_json(const EigenpairCertificate& p) {
  return {{"r", real_value(p.r)},
          {"r_imag", real_value(p.r_imag)},
          {"w", to_json(p.w)},
          {"residual", real_value(p.residual)},
          {"cone_membership", real_value(p.cone_membership)},
          {"method", to_string(p.method)},
          {"t_final", real_value(p.t_final)}};
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? what + " at line " + std::to_string(line) + ", column " + std::to_string(column)
                                  : what),
      line_(line),
      column_(column) {}

Json to_json(Complex z) { return Json::array({real_value(z.real()), real_value(z.imag())}); }

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

Json to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(CVector(m.row(i).transpose())));
  return out;
}

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    schema_error("complex number must be a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

CVector cvector_from_json(const Json& j) {
  if (!j.is_array()) schema_error("vector must be an array of [re, im] pairs");
  CVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i]);
  return v;
}

CMatrix cmatrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) schema_error("matrix must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  CMatrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) schema_error("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(i), static_cast<Index>(c)) = complex_from_json(j[i][c]);
  }
  if (cols == 0) schema_error("matrix rows must be nonempty");
  return m;
}

Json cone_to_json(const ConeSpec& k) {
  switch (k.kind()) {
    case ConeKind::Orthant: return {{"kind", "orthant"}, {"n", k.dim()}};
    case ConeKind::PolyhedralReal:
      return {{"kind", "polyhedral"},
              {"n", k.dim()},
              {"generators", real_rows_to_json(k.real_generators().transpose())},
              {"facets", real_rows_to_json(k.real_facets())}};
    case ConeKind::Complexified: return {{"kind", "complexified"}, {"base", cone_to_json(k.base())}};
    case ConeKind::Transformed:
      return {{"kind", "transformed"}, {"t", to_json(k.transform())}, {"base", cone_to_json(k.base())}};
    case ConeKind::Restricted:
      return {{"kind", "restricted"}, {"q", to_json(k.transform())}, {"base", cone_to_json(k.base())}};
  }
  throw Error(ErrorCode::InvalidCone, "unknown cone kind");
}

ConeSpec cone_from_json(const Json& j, const Tolerances& tol) {
  if (!j.is_object()) schema_error("cone must be an object");
  const Json& kind_j = field(j, "kind", "cone");
  if (!kind_j.is_string()) schema_error("cone: 'kind' must be a string");
  const std::string kind = kind_j.get<std::string>();
  if (kind == "orthant") {
    reject_unknown(j, {"kind", "n"}, "orthant cone");
    const Index n = dimension(field(j, "n", "orthant cone"), "orthant cone");
    if (n < 1) schema_error("orthant cone: n must be positive");
    return ConeSpec::orthant(n);
  }
  if (kind == "polyhedral") {
    reject_unknown(j, {"kind", "n", "generators", "facets"}, "polyhedral cone");
    const Index n = dimension(field(j, "n", "polyhedral cone"), "polyhedral cone");
    if (n < 1) schema_error("polyhedral cone: n must be positive");
    const RMatrix g = j.contains("generators") ? real_rows(j["generators"], n, "polyhedral generators") : RMatrix(0, n);
    const RMatrix f = j.contains("facets") ? real_rows(j["facets"], n, "polyhedral facets") : RMatrix(0, n);
    return ConeSpec::polyhedral(g.transpose(), f, tol);
  }
  if (kind == "complexified") {
    reject_unknown(j, {"kind", "base"}, "complexified cone");
    return ConeSpec::complexified(cone_from_json(field(j, "base", "complexified cone"), tol));
  }
  if (kind == "transformed") {
    reject_unknown(j, {"kind", "t", "base"}, "transformed cone");
    return ConeSpec::transformed(cmatrix_from_json(field(j, "t", "transformed cone")),
                                 cone_from_json(field(j, "base", "transformed cone"), tol), tol);
  }
  if (kind == "restricted") {
    reject_unknown(j, {"kind", "q", "base"}, "restricted cone");
    return ConeSpec::restricted(cmatrix_from_json(field(j, "q", "restricted cone")),
                                cone_from_json(field(j, "base", "restricted cone"), tol), tol);
  }
  schema_error("cone: unknown kind '" + kind + "'");
}

Json instance_to_json(const Instance& inst) {
  Json out = {{"matrix", to_json(inst.matrix)}, {"cone", cone_to_json(inst.cone)}};
  if (inst.seed) out["seed"] = *inst.seed;
  if (!inst.tolerance_overrides.empty()) {
    Json t = Json::object();
    for (const auto& [name, value] : inst.tolerance_overrides) {
      if (integer_tolerance(name)) {
        t[name] = static_cast<long long>(value);
      } else {
        t[name] = value;
      }
    }
    out["tolerances"] = std::move(t);
  }
  return out;
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object()) schema_error("instance must be a JSON object");
  reject_unknown(j, {"matrix", "cone", "seed", "tolerances"}, "instance");
  CMatrix matrix = cmatrix_from_json(field(j, "matrix", "instance"));
  if (matrix.rows() != matrix.cols())
    schema_error("instance: matrix is " + std::to_string(matrix.rows()) + "x" +
                 std::to_string(matrix.cols()) + ", expected square");
  if (!matrix.allFinite()) schema_error("instance: matrix entries must be finite");
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, double>> overrides;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) schema_error("instance: seed must be a nonnegative integer");
    seed = j["seed"].get<std::uint64_t>();
  }
  Tolerances tol = Tolerances::from_environment();
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) schema_error("instance: tolerances must be an object");
    for (const auto& [name, value] : t.items()) {
      const double v = number(value, "tolerance '" + name + "'");
      try {
        set_tolerance(tol, name, v);
      } catch (const Error& e) {
        schema_error(e.what());
      }
      overrides.emplace_back(name, v);
    }
  }
  std::optional<ConeSpec> cone;
  try {
    cone = cone_from_json(field(j, "cone", "instance"), tol);
  } catch (const Error& e) {
    schema_error(std::string("instance cone: ") + e.what());
  }
  if (cone->dim() != matrix.rows())
    schema_error("instance: cone dimension " + std::to_string(cone->dim()) + " does not match matrix size " +
                 std::to_string(matrix.rows()));
  return Instance{std::move(matrix), *cone, seed, std::move(overrides)};
}

Instance parse_instance(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ParseError("malformed JSON", line, column);
  }
  return instance_from_json(j);
}

std::string serialize_instance(const Instance& inst) { return pretty_json(instance_to_json(inst)); }

std::string canonical_json(const Json& j) { return j.dump(); }

std::string pretty_json(const Json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::NumericalFailure, "sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string instance_digest(const Instance& inst) { return sha256_hex(canonical_json(instance_to_json(inst))); }

Json report_to_json(const CertificationReport& rep) {
  Json assertions = Json::array();
  for (const auto& a : rep.assertions) {
    Json ev = Json::object();
    for (const auto& [key, value] : a.evidence) ev[key] = evidence_to_json(value);
    Json item = {{"name", a.name}, {"verdict", to_string(a.verdict)}, {"asserted", a.asserted}, {"evidence", ev}};
    if (a.witness) item["witness"] = to_json(*a.witness);
    assertions.push_back(std::move(item));
  }
  Json clusters = Json::array();
  for (const auto& c : rep.spectrum.clusters)
    clusters.push_back({{"value", to_json(c.eigenvalue)}, {"algebraic", c.algebraic}, {"geometric", c.geometric}});
  Json out = {{"theorem", rep.theorem},
              {"input_digest", rep.input_digest},
              {"positivity", certificate_to_json(rep.positivity)},
              {"assertions", std::move(assertions)},
              {"spectrum",
               {{"eigenvalues", std::move(clusters)},
                {"spectral_radius", real_value(rep.spectrum.spectral_radius)},
                {"dominant", to_json(rep.spectrum.dominant)}}},
              {"tolerances", tolerances_to_json(rep.tolerances)},
              {"seed", rep.seed},
              {"rng", CounterRng::kAlgorithm},
              {"tool_version", kToolVersion}};
  if (rep.rotational) out["rotational_positivity"] = certificate_to_json(*rep.rotational);
  if (rep.dominant) out["dominant_pair"] = pair_to_json(*rep.dominant);
  if (!rep.extra.empty()) {
    Json extra = Json::object();
    for (const auto& [key, value] : rep.extra) extra[key] = evidence_to_json(value);
    out["extra"] = std::move(extra);
  }
  return out;
}

Json search_record_to_json(const SearchRecord& r) {
  Json out = {{"n", r.n},
              {"seed", r.seed},
              {"status", r.status},
              {"rotational_verdict", r.rotational_verdict},
              {"r_sigma", real_value(r.r_sigma)},
              {"algebraic", r.algebraic},
              {"geometric", r.geometric}};
  if (!r.error.empty()) out["error"] = r.error;
  return out;
}

SearchRecord search_record_from_json(const Json& j) {
  if (!j.is_object()) schema_error("search record must be an object");
  reject_unknown(j, {"n", "seed", "status", "rotational_verdict", "r_sigma", "algebraic", "geometric", "error"},
                 "search record");
  SearchRecord r;
  try {
    r.n = j.at("n").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.status = j.at("status").get<std::string>();
    r.rotational_verdict = j.at("rotational_verdict").get<std::string>();
    r.r_sigma = j.at("r_sigma").is_null() ? std::nan("") : j.at("r_sigma").get<double>();
    r.algebraic = j.at("algebraic").get<int>();
    r.geometric = j.at("geometric").get<int>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
  } catch (const Json::exception& e) {
    schema_error(std::string("search record: ") + e.what());
  }
  return r;
}

Json search_report_to_json(const SearchReport& rep) {
  Json records = Json::array();
  for (const auto& r : rep.records) records.push_back(search_record_to_json(r));
  Json findings = Json::array();
  for (const auto& f : rep.findings)
    findings.push_back({{"record", search_record_to_json(f.record)}, {"instance", instance_to_json(f.instance)}});
  Json hist = Json::object();
  for (const auto& [mult, count] : rep.histogram) hist[std::to_string(mult)] = count;
  const SearchConfig& c = rep.config;
  Json config = {{"family", c.corpus.empty() ? c.family : std::string("corpus")},
                 {"tolerances", tolerances_to_json(c.tol)},
                 {"rng", CounterRng::kAlgorithm}};
  if (c.corpus.empty()) {
    config["n_min"] = c.n_min;
    config["n_max"] = c.n_max;
    config["seed_begin"] = c.seed_begin;
    config["seed_end"] = c.seed_end;
  } else {
    config["corpus_size"] = c.corpus.size();
  }
  return {{"config", std::move(config)},
          {"records", std::move(records)},
          {"findings", std::move(findings)},
          {"histogram", std::move(hist)},
          {"tool_version", kToolVersion}};
}

std::string read_input(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::InvalidArgument, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot rename onto '" + path + "': " + ec.message());
}

}  // namespace conespec
