#pragma once

#include <string>

#include <json.hpp>

#include "idesign/designs.hpp"
#include "idesign/model.hpp"
#include "idesign/optimality.hpp"

namespace idesign::io {

using nlohmann::json;

/// Malformed or inconsistent input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"value": decimal, "exact": "num/den"}; "exact" only when known.
json to_json(const Number& v);
Number number_from_json(const json& j);

/// Row-major nested rows, in the file orientation.
json array_to_json(const BlockArray& s, bool transposed);

/// A design together with the orientation it was written in. Internally the
/// shape always has a <= b.
struct DesignFile {
  ExactDesign design;
  bool transposed = false;
};

/// {"a","b","t","n","blocks"}.
json to_json(const DesignFile& d);
DesignFile design_from_json(const json& j);

/// {"kind": "identity"} | {"kind": "type-h", "x": .., "y": [..]} |
/// {"kind": "dense", "matrix": [[..], ..]}.
CovarianceSpec covariance_from_json(const json& j);
/// Comma or whitespace separated p x p matrix.
CovarianceSpec covariance_from_csv(const std::string& text);

json to_json(const SolveResult& r, bool transposed);
json to_json(const VerificationReport& r);
/// Efficiencies rounded to 6 decimals.
json to_json(const EfficiencyReport& r);

/// Two-space indented dump with a trailing newline; keys are sorted, so equal
/// values always serialise to the same bytes.
std::string dump(const json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace idesign::io
