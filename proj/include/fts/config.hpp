#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fts::config {

// Parse failure with the 1-based line that caused it.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Ordered key-value document with named sections:
//
//   # comment
//   [section]
//   key = value
//
// Values are kept verbatim (trimmed); typed accessors parse on demand.
// Keys before any section header belong to the unnamed section "".
struct Document {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
    int line = 0;
  };

  std::vector<Section> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;

  // Typed accessors; `require_*` throw std::invalid_argument naming
  // section.key when the entry is missing or malformed.
  std::string require_string(const std::string& section, const std::string& key) const;
  std::string string_or(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
  double require_number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key, double fallback) const;
  bool bool_or(const std::string& section, const std::string& key, bool fallback) const;
  // Comma-separated list of numbers, e.g. "0.5, 2, 0".
  Eigen::VectorXd require_vector(const std::string& section, const std::string& key) const;
  Eigen::VectorXd vector_or(const std::string& section, const std::string& key,
                            const Eigen::VectorXd& fallback) const;
  // Semicolon-separated rows of comma-separated numbers, e.g. "0, 1; 0, 0".
  Eigen::MatrixXd require_matrix(const std::string& section, const std::string& key) const;

  // Sets (or appends) an entry, creating the section when absent.
  void set(const std::string& section, const std::string& key, const std::string& value);
  void set_number(const std::string& section, const std::string& key, double value);

  std::string serialize() const;
};

Document parse(const std::string& text);
Document parse_file(const std::string& path);

// %.17g rendering used everywhere a number is serialized, so that documents
// and traces round-trip bit-exactly.
std::string format_number(double value);

}  // namespace fts::config
