#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "isac/harness.hpp"
#include "isac/textdoc.hpp"

namespace isac {
namespace {

constexpr std::string_view kCsvHeader = "trial,scenario,estimator,metric,value,units,seed";
constexpr std::string_view kSummaryHeader = "scenario,estimator,metric,units,count,mean,std,min,max";

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 record split; nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_record(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) return std::nullopt;
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "summary") return ReportFormat::Summary;
  throw InvalidArgument("unknown report format '" + std::string(name) + "' (csv, summary)");
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) groups[{r.scenario, r.estimator, r.metric}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    std::tie(s.scenario, s.estimator, s.metric) = key;
    s.units = g.front()->units;
    s.count = g.size();
    s.min = s.max = g.front()->value;
    double sum = 0.0;
    for (const auto* r : g) {
      sum += r->value;
      s.min = std::min(s.min, r->value);
      s.max = std::max(s.max, r->value);
    }
    const double n = static_cast<double>(g.size());
    if (s.min == s.max) {
      s.mean = s.min;
      s.stddev = 0.0;
    } else {
      s.mean = sum / n;
      double ss = 0.0;
      for (const auto* r : g) ss += (r->value - s.mean) * (r->value - s.mean);
      s.stddev = std::sqrt(ss / n);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, std::ostream& out) {
  if (rows.empty()) throw InvalidArgument("no rows to report");
  if (format == ReportFormat::Csv) {
    out << kCsvHeader << "\n";
    for (const auto& r : rows)
      out << r.trial << "," << field(r.scenario) << "," << field(r.estimator) << "," << field(r.metric) << ","
          << g17(r.value) << "," << field(r.units) << "," << r.seed << "\n";
  } else {
    out << kSummaryHeader << "\n";
    for (const auto& s : summarize(rows))
      out << field(s.scenario) << "," << field(s.estimator) << "," << field(s.metric) << "," << field(s.units) << ","
          << s.count << "," << g17(s.mean) << "," << g17(s.stddev) << "," << g17(s.min) << "," << g17(s.max) << "\n";
  }
}

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  std::ostringstream os;
  emit_report(rows, format, os);
  return os.str();
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format_report(rows, format);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<ResultRow> parse_csv(std::string_view text, const std::string& origin) {
  std::vector<ResultRow> rows;
  std::vector<Diagnostic> issues;
  std::size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view l = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (line == 1) {
      if (l != kCsvHeader) issues.push_back({origin, line, "", "expected header '" + std::string(kCsvHeader) + "'"});
      continue;
    }
    if (l.empty()) continue;
    const auto f = split_record(l);
    if (!f || f->size() != 7) {
      issues.push_back({origin, line, "", "expected 7 fields"});
      continue;
    }
    const auto trial = parse_double((*f)[0]);
    // Values may be nan (undefined metric) or subnormal; strtod takes both.
    char* endv = nullptr;
    const double value = std::strtod((*f)[4].c_str(), &endv);
    char* endp = nullptr;
    const unsigned long long seed = std::strtoull((*f)[6].c_str(), &endp, 10);
    if (!trial || *trial < 0 || *trial != std::floor(*trial) || (*f)[4].empty() || *endv != '\0' || (*f)[6].empty() || *endp != '\0') {
      issues.push_back({origin, line, "", "malformed number"});
      continue;
    }
    rows.push_back({static_cast<std::size_t>(*trial), (*f)[1], (*f)[2], (*f)[3], value, (*f)[5], seed});
  }
  if (line == 0) issues.push_back({origin, 0, "", "empty file"});
  if (!issues.empty()) throw ParseError(std::move(issues));
  return rows;
}

std::vector<ResultRow> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

}  // namespace isac
