#pragma once

#include <stdexcept>
#include <string>

#include "vdi/scenario.hpp"

namespace vdi {

/// Parse or validation failure, located in the source text when possible.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string source, int line, int column, std::string field, const std::string& message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }  ///< 1-based; 0 when unknown
  int column() const { return column_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  int line_;
  int column_;
  std::string field_;
};

/// Parses and validates a scenario document. Unknown keys are errors.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");

/// Loads a scenario file, or a built-in scenario when `path_or_name` names one
/// and no such file exists.
Scenario load_scenario(const std::string& path_or_name);

/// Serializes a scenario; parse_scenario(dump_scenario(s)) reproduces s.
std::string dump_scenario(const Scenario& scenario);

/// Returns a copy of `scenario` with the dotted field `path` (for example
/// "optimizer.d" or "visibility.dropout_prob") set to the YAML value `value`.
/// The result is fully re-validated.
Scenario with_setting(const Scenario& scenario, const std::string& path, const std::string& value);

}  // namespace vdi
