#include "isac/textdoc.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace isac {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

std::string field_name(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

std::string format_bound(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string Diagnostic::to_string() const {
  std::ostringstream os;
  os << origin;
  if (line > 0) os << ":" << line;
  os << ": ";
  if (!field.empty()) os << field << ": ";
  os << message;
  return os.str();
}

DiagnosticError::DiagnosticError(const std::string& kind, std::vector<Diagnostic> issues)
    : Error([&] {
        std::ostringstream os;
        os << kind << " (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << ")";
        for (const auto& d : issues) os << "\n  " << d.to_string();
        return os.str();
      }()),
      issues_(std::move(issues)) {}

TextDoc TextDoc::parse(std::string_view text, std::string origin) {
  TextDoc doc;
  doc.origin_ = std::move(origin);
  std::vector<Diagnostic> errors;
  std::string section;
  int lineNo = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineNo;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || !valid_name(trim(line.substr(1, line.size() - 2)))) {
        errors.push_back({doc.origin_, lineNo, "", "malformed section header '" + std::string(line) + "'"});
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      doc.sections_.emplace_back(section, lineNo);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back({doc.origin_, lineNo, "", "expected 'key = value', got '" + std::string(line) + "'"});
      continue;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!valid_name(key)) {
      errors.push_back({doc.origin_, lineNo, "", "invalid key '" + std::string(key) + "'"});
      continue;
    }
    doc.entries_.push_back({section, std::string(key), std::string(value), lineNo});
  }
  if (!errors.empty()) throw ParseError(std::move(errors));
  return doc;
}

TextDoc TextDoc::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool TextDoc::has_section(std::string_view name) const {
  return std::any_of(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == name; });
}

void DocReader::declare(const std::string& section, std::initializer_list<std::string_view> keys,
                        std::initializer_list<std::string_view> repeatable) {
  auto& d = declared_[section];
  for (auto k : keys) d.emplace(k);
  auto& r = repeatable_[section];
  for (auto k : repeatable) {
    d.emplace(k);
    r.emplace(k);
  }
}

const Entry* DocReader::entry(const std::string& section, const std::string& key) const {
  const Entry* found = nullptr;
  for (const auto& e : doc_->entries())
    if (e.section == section && e.key == key) found = &e;
  return found;
}

std::vector<const Entry*> DocReader::rows(const std::string& section, const std::string& key) const {
  std::vector<const Entry*> out;
  for (const auto& e : doc_->entries())
    if (e.section == section && e.key == key) out.push_back(&e);
  return out;
}

void DocReader::fail(const std::string& section, const std::string& key, const std::string& message,
                     int line) {
  if (line < 0) {
    const Entry* e = entry(section, key);
    line = e ? e->line : 0;
  }
  diags_.push_back({doc_->origin(), line, field_name(section, key), message});
}

std::optional<std::string> DocReader::text(const std::string& section, const std::string& key,
                                           bool required) {
  const Entry* e = entry(section, key);
  if (!e) {
    if (required) fail(section, key, "missing required field", 0);
    return std::nullopt;
  }
  return e->value;
}

std::optional<double> DocReader::number(const std::string& section, const std::string& key,
                                        bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  auto v = parse_double(*t);
  if (!v) {
    fail(section, key, "expected a finite number, got '" + *t + "'");
    return std::nullopt;
  }
  return v;
}

std::optional<std::int64_t> DocReader::integer(const std::string& section, const std::string& key,
                                               bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t->c_str(), &end, 10);
  if (t->empty() || *end != '\0' || errno == ERANGE) {
    fail(section, key, "expected an integer, got '" + *t + "'");
    return std::nullopt;
  }
  return v;
}

std::optional<std::uint64_t> DocReader::unsigned_integer(const std::string& section,
                                                         const std::string& key, bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t->c_str(), &end, 10);
  if (t->empty() || t->front() == '-' || *end != '\0' || errno == ERANGE) {
    fail(section, key, "expected a non-negative integer, got '" + *t + "'");
    return std::nullopt;
  }
  return v;
}

std::optional<bool> DocReader::boolean(const std::string& section, const std::string& key,
                                       bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  if (*t == "true" || *t == "on" || *t == "yes" || *t == "1") return true;
  if (*t == "false" || *t == "off" || *t == "no" || *t == "0") return false;
  fail(section, key, "expected true/false, got '" + *t + "'");
  return std::nullopt;
}

std::optional<std::vector<double>> DocReader::numbers(const std::string& section,
                                                      const std::string& key, bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  std::vector<double> out;
  for (const auto& w : split_words(*t)) {
    auto v = parse_double(w);
    if (!v) {
      fail(section, key, "expected a list of numbers, got '" + *t + "'");
      return std::nullopt;
    }
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<std::string>> DocReader::words(const std::string& section,
                                                         const std::string& key, bool required) {
  auto t = text(section, key, required);
  if (!t) return std::nullopt;
  return split_words(*t);
}

void DocReader::require_range(const std::string& section, const std::string& key, double value,
                              double lo, double hi, bool loInclusive, bool hiInclusive) {
  const bool okLo = loInclusive ? value >= lo : value > lo;
  const bool okHi = hiInclusive ? value <= hi : value < hi;
  if (okLo && okHi) return;
  std::string range = std::string(loInclusive ? "[" : "(") + format_bound(lo) + ", " +
                      (std::isinf(hi) ? std::string("inf") : format_bound(hi)) + (hiInclusive ? "]" : ")");
  fail(section, key, "value " + format_bound(value) + " out of range " + range);
}

void DocReader::finish() {
  for (const auto& [name, line] : doc_->sections()) {
    if (!declared_.contains(name))
      diags_.push_back({doc_->origin(), line, name, "unknown section [" + name + "]"});
  }
  std::map<std::pair<std::string, std::string>, int> seen;
  for (const auto& e : doc_->entries()) {
    auto sec = declared_.find(e.section);
    if (sec == declared_.end()) continue;  // already reported as unknown section
    if (!sec->second.contains(e.key)) {
      diags_.push_back({doc_->origin(), e.line, field_name(e.section, e.key), "unknown key"});
      continue;
    }
    const bool repeatable = repeatable_[e.section].contains(e.key);
    if (!repeatable && seen[{e.section, e.key}]++ > 0)
      diags_.push_back({doc_->origin(), e.line, field_name(e.section, e.key), "duplicate key"});
  }
  if (!diags_.empty()) {
    std::stable_sort(diags_.begin(), diags_.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    throw ValidationError(diags_);
  }
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  std::string buf(trim(s));
  if (buf.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (*end != '\0' || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::vector<std::size_t>> parse_index_set(std::string_view s) {
  std::vector<std::size_t> out;
  for (const auto& w : split_words(s)) {
    const auto dash = w.find('-');
    char* end = nullptr;
    if (dash == std::string::npos) {
      const auto v = std::strtoull(w.c_str(), &end, 10);
      if (*end != '\0' || w.empty()) return std::nullopt;
      out.push_back(v);
    } else {
      const std::string a = w.substr(0, dash), b = w.substr(dash + 1);
      if (a.empty() || b.empty()) return std::nullopt;
      const auto lo = std::strtoull(a.c_str(), &end, 10);
      if (*end != '\0') return std::nullopt;
      const auto hi = std::strtoull(b.c_str(), &end, 10);
      if (*end != '\0' || hi < lo) return std::nullopt;
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace isac
