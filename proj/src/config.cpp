#include "fts/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fts::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": '" + text + "' is not a number");
  }
  if (trim(text.substr(consumed)) != "") {
    throw std::invalid_argument(where + ": trailing characters in '" + text + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current, sep)) parts.push_back(current);
  if (!text.empty() && text.back() == sep) parts.push_back("");
  return parts;
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& where) {
  const auto parts = split(text, ',');
  Eigen::VectorXd out(Eigen::Index(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out[Eigen::Index(i)] = parse_number(trim(parts[i]), where);
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

bool Document::has(const std::string& section, const std::string& key) const {
  return find(section, key).has_value();
}

std::optional<std::string> Document::find(const std::string& section,
                                          const std::string& key) const {
  for (const Section& s : sections) {
    if (s.name != section) continue;
    for (const Entry& e : s.entries) {
      if (e.key == key) return e.value;
    }
  }
  return std::nullopt;
}

std::string Document::require_string(const std::string& section, const std::string& key) const {
  auto value = find(section, key);
  if (!value) {
    throw std::invalid_argument("missing required field " + section + "." + key);
  }
  return *value;
}

std::string Document::string_or(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  return find(section, key).value_or(fallback);
}

double Document::require_number(const std::string& section, const std::string& key) const {
  return parse_number(require_string(section, key), section + "." + key);
}

double Document::number_or(const std::string& section, const std::string& key,
                           double fallback) const {
  auto value = find(section, key);
  return value ? parse_number(*value, section + "." + key) : fallback;
}

bool Document::bool_or(const std::string& section, const std::string& key, bool fallback) const {
  auto value = find(section, key);
  if (!value) return fallback;
  if (*value == "true") return true;
  if (*value == "false") return false;
  throw std::invalid_argument(section + "." + key + ": expected true or false, got '" + *value +
                              "'");
}

Eigen::VectorXd Document::require_vector(const std::string& section,
                                         const std::string& key) const {
  return parse_vector(require_string(section, key), section + "." + key);
}

Eigen::VectorXd Document::vector_or(const std::string& section, const std::string& key,
                                    const Eigen::VectorXd& fallback) const {
  auto value = find(section, key);
  return value ? parse_vector(*value, section + "." + key) : fallback;
}

Eigen::MatrixXd Document::require_matrix(const std::string& section,
                                         const std::string& key) const {
  const std::string where = section + "." + key;
  const auto rows = split(require_string(section, key), ';');
  Eigen::MatrixXd out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::VectorXd row = parse_vector(rows[r], where);
    if (r == 0) {
      out.resize(Eigen::Index(rows.size()), row.size());
    } else if (row.size() != out.cols()) {
      throw std::invalid_argument(where + ": ragged rows in matrix");
    }
    out.row(Eigen::Index(r)) = row.transpose();
  }
  if (out.size() == 0) {
    throw std::invalid_argument(where + ": empty matrix");
  }
  return out;
}

void Document::set(const std::string& section, const std::string& key,
                   const std::string& value) {
  for (Section& s : sections) {
    if (s.name != section) continue;
    for (Entry& e : s.entries) {
      if (e.key == key) {
        e.value = value;
        return;
      }
    }
    s.entries.push_back({key, value, 0});
    return;
  }
  sections.push_back({section, {{key, value, 0}}, 0});
}

void Document::set_number(const std::string& section, const std::string& key, double value) {
  set(section, key, format_number(value));
}

std::string Document::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const Section& s : sections) {
    if (s.entries.empty() && s.name.empty()) continue;
    if (!first) out << "\n";
    first = false;
    if (!s.name.empty()) out << "[" << s.name << "]\n";
    for (const Entry& e : s.entries) out << e.key << " = " << e.value << "\n";
  }
  return out.str();
}

Document parse(const std::string& text) {
  Document doc;
  doc.sections.push_back({"", {}, 0});
  Document::Section* current = &doc.sections.back();
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError(lineno, "malformed section header '" + line + "'");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ParseError(lineno, "empty section name");
      doc.sections.push_back({name, {}, lineno});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(lineno, "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(lineno, "empty key");
    for (const auto& e : current->entries) {
      if (e.key == key) {
        throw ParseError(lineno, "duplicate key '" + key + "' in section [" + current->name +
                                     "] (first at line " + std::to_string(e.line) + ")");
      }
    }
    current->entries.push_back({key, trim(line.substr(eq + 1)), lineno});
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

}  // namespace fts::config
