#include "idesign/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace idesign::io {

json to_json(const Number& v) {
  json j;
  j["value"] = v.value;
  if (v.exact) j["exact"] = v.exact->str();
  return j;
}

Number number_from_json(const json& j) {
  if (j.is_object()) {
    if (j.contains("exact")) return number_from_json(j.at("exact"));
    if (j.contains("value")) return number_from_json(j.at("value"));
    throw FormatError("number: object without \"value\" or \"exact\"");
  }
  if (j.is_string()) {
    try {
      return Number(Rational::parse(j.get<std::string>()));
    } catch (const std::exception& e) {
      throw FormatError(std::string("number: ") + e.what());
    }
  }
  if (j.is_number_integer()) return Number(Rational(j.get<std::int64_t>()));
  if (j.is_number()) return Number::approx(j.get<double>());
  throw FormatError("number: expected a number or a \"num/den\" string");
}

json array_to_json(const BlockArray& s, bool transposed) {
  return transposed ? json(s.transposed().rows()) : json(s.rows());
}

json to_json(const DesignFile& d) {
  const Shape& sh = d.design.shape;
  json j;
  j["a"] = d.transposed ? sh.b : sh.a;
  j["b"] = d.transposed ? sh.a : sh.b;
  j["t"] = sh.t;
  j["n"] = d.design.n();
  j["blocks"] = json::array();
  for (const auto& s : d.design.blocks) j["blocks"].push_back(array_to_json(s, d.transposed));
  return j;
}

namespace {

int get_int(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw FormatError(std::string("field \"") + key + "\" must be an integer");
  return v.get<int>();
}

}  // namespace

DesignFile design_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("design: expected an object");
  const int a = get_int(j, "a"), b = get_int(j, "b"), t = get_int(j, "t");
  IngestedShape in;
  try {
    in = ingest_shape(a, b, t);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  if (!j.contains("blocks") || !j.at("blocks").is_array()) throw FormatError("design: missing \"blocks\" array");
  const auto& blocks = j.at("blocks");
  if (blocks.empty()) throw FormatError("design: empty block list");
  if (j.contains("n") && get_int(j, "n") != static_cast<int>(blocks.size()))
    throw FormatError("design: \"n\" does not match the number of blocks");
  DesignFile d;
  d.transposed = in.transposed;
  d.design.shape = in.shape;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    try {
      d.design.blocks.push_back(ingest_array(a, b, t, blocks[k].get<std::vector<std::vector<int>>>()));
    } catch (const std::exception& e) {
      throw FormatError("design: block " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return d;
}

CovarianceSpec covariance_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw FormatError("covariance: expected an object with \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return CovarianceSpec::identity();
  if (kind == "type-h") {
    if (!j.contains("x")) throw FormatError("covariance: type-h needs \"x\"");
    std::vector<double> y;
    if (j.contains("y")) y = j.at("y").get<std::vector<double>>();
    return CovarianceSpec::type_h(number_from_json(j.at("x")), y);
  }
  if (kind == "dense") {
    if (!j.contains("matrix")) throw FormatError("covariance: dense needs \"matrix\"");
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    const std::size_t n = rows.size();
    Matrix<double> m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw FormatError("covariance: matrix is not square");
      for (std::size_t c = 0; c < n; ++c) m(i, c) = rows[i][c];
    }
    return CovarianceSpec::general(m);
  }
  throw FormatError("covariance: unknown kind \"" + kind + "\"");
}

CovarianceSpec covariance_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    for (char& c : line)
      if (c == ',' || c == ';') c = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw FormatError("covariance: bad entry \"" + tok + "\"");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw FormatError("covariance: empty matrix");
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw FormatError("covariance: matrix is not square");
    for (std::size_t c = 0; c < n; ++c) m(i, c) = rows[i][c];
  }
  return CovarianceSpec::general(m);
}

json to_json(const SolveResult& r, bool transposed) {
  json j;
  j["a"] = transposed ? r.shape.b : r.shape.a;
  j["b"] = transposed ? r.shape.a : r.shape.b;
  j["t"] = r.shape.t;
  j["x_star"] = to_json(r.x_star);
  j["y_star"] = to_json(r.y_star);
  j["regime"] = to_string(r.regime);
  j["crossing_branch"] = r.crossing_branch;
  if (!r.support.sets.empty()) j["support"] = r.support.str();
  j["support_arrays"] = json::array();
  for (const auto& s : r.support_arrays) j["support_arrays"].push_back(array_to_json(s, transposed));
  j["gap"] = r.gap;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  if (r.measure) {
    json m = json::array();
    for (std::size_t k = 0; k < r.measure->orbits.size(); ++k) {
      json o;
      o["rows"] = array_to_json(r.measure->orbits[k], transposed);
      o["weight"] = to_json(r.measure->weights[k]);
      if (const auto size = orbit_size_if_fits(r.measure->orbits[k])) {
        o["orbit_size"] = *size;
      } else {
        o["orbit_size"] = nullptr;
      }
      m.push_back(o);
    }
    j["measure"] = m;
  }
  return j;
}

json to_json(const VerificationReport& r) {
  json j;
  j["residual_eq10"] = r.residual_eq10;
  j["residual_eq11"] = r.residual_eq11;
  j["support_violation"] = r.support_violation;
  j["info_residual"] = r.info_residual;
  j["exact"] = r.exact;
  j["optimal"] = r.optimal;
  return j;
}

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

json to_json(const EfficiencyReport& r) {
  json j;
  j["eff_a"] = round6(r.eff_a);
  j["eff_d"] = round6(r.eff_d);
  j["eff_e"] = round6(r.eff_e);
  j["eff_t"] = round6(r.eff_t);
  j["eigenvalues"] = r.eigenvalues;
  j["y_star"] = to_json(r.y_star);
  if (r.n == std::floor(r.n) && r.n < 9e15) {
    j["n"] = static_cast<std::int64_t>(r.n);
  } else {
    j["n"] = r.n;
  }
  j["connected"] = r.connected;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace idesign::io
