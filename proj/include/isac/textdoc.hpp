#pragma once

// Sectioned key = value text used by scene files, network scenario files and
// experiment configs. Syntax:
//
//   # comment
//   key = value            (top-level, section "")
//   [section]
//   key = value
//
// The reader collects every diagnostic before throwing so a file with several
// problems reports all of them in one pass.

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "isac/common.hpp"

namespace isac {

struct Diagnostic {
  std::string origin;
  int line = 0;  // 0 when the problem is a missing field
  std::string field;  // "section.key"
  std::string message;
  std::string to_string() const;
};

class DiagnosticError : public Error {
 public:
  DiagnosticError(const std::string& kind, std::vector<Diagnostic> issues);
  const std::vector<Diagnostic>& issues() const { return issues_; }

 private:
  std::vector<Diagnostic> issues_;
};

/// Malformed syntax (line-level).
class ParseError : public DiagnosticError {
 public:
  explicit ParseError(std::vector<Diagnostic> issues) : DiagnosticError("parse error", std::move(issues)) {}
};

/// Well-formed text whose values violate a contract.
class ValidationError : public DiagnosticError {
 public:
  explicit ValidationError(std::vector<Diagnostic> issues)
      : DiagnosticError("validation error", std::move(issues)) {}
};

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

class TextDoc {
 public:
  /// Throws ParseError listing every malformed line.
  static TextDoc parse(std::string_view text, std::string origin);
  static TextDoc load(const std::string& path);

  const std::string& origin() const { return origin_; }
  const std::vector<Entry>& entries() const { return entries_; }
  /// Sections in order of first appearance (including empty ones).
  const std::vector<std::pair<std::string, int>>& sections() const { return sections_; }
  bool has_section(std::string_view name) const;

 private:
  std::string origin_;
  std::vector<Entry> entries_;
  std::vector<std::pair<std::string, int>> sections_;
};

/// Typed, validating accessor. Every getter records a diagnostic instead of
/// throwing; call finish() to throw ValidationError if anything went wrong.
class DocReader {
 public:
  explicit DocReader(const TextDoc& doc) : doc_(&doc) {}

  /// Declares the keys a section accepts; keys in `repeatable` may occur more
  /// than once. Sections or keys never declared are reported by finish().
  void declare(const std::string& section, std::initializer_list<std::string_view> keys,
               std::initializer_list<std::string_view> repeatable = {});

  const Entry* entry(const std::string& section, const std::string& key) const;
  std::vector<const Entry*> rows(const std::string& section, const std::string& key) const;

  std::optional<std::string> text(const std::string& section, const std::string& key, bool required = false);
  std::optional<double> number(const std::string& section, const std::string& key, bool required = false);
  std::optional<std::int64_t> integer(const std::string& section, const std::string& key, bool required = false);
  std::optional<std::uint64_t> unsigned_integer(const std::string& section, const std::string& key,
                                                bool required = false);
  std::optional<bool> boolean(const std::string& section, const std::string& key, bool required = false);
  std::optional<std::vector<double>> numbers(const std::string& section, const std::string& key,
                                             bool required = false);
  std::optional<std::vector<std::string>> words(const std::string& section, const std::string& key,
                                                bool required = false);

  /// Bound checks that record "<field> must be ..." diagnostics.
  void require_range(const std::string& section, const std::string& key, double value, double lo,
                     double hi, bool loInclusive = true, bool hiInclusive = true);

  void fail(const std::string& section, const std::string& key, const std::string& message, int line = -1);

  std::vector<Diagnostic>& diagnostics() { return diags_; }
  /// Reports undeclared sections/keys and duplicate non-repeatable keys, then
  /// throws ValidationError if any diagnostic was recorded.
  void finish();

 private:
  const TextDoc* doc_;
  std::map<std::string, std::set<std::string, std::less<>>, std::less<>> declared_;
  std::map<std::string, std::set<std::string, std::less<>>, std::less<>> repeatable_;
  std::vector<Diagnostic> diags_;
};

/// Splits on whitespace and commas.
std::vector<std::string> split_words(std::string_view s);
/// strtod with full-string consumption.
std::optional<double> parse_double(std::string_view s);
/// Index set syntax "1,3,5-10".
std::optional<std::vector<std::size_t>> parse_index_set(std::string_view s);

}  // namespace isac
