#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bma/errors.hpp"
#include "bma/models/model.hpp"

namespace bma::io {

/// A case-count series with its date labels (ISO dates or integer steps).
struct ObservationSeries {
  std::vector<std::string> dates;
  std::vector<Observation> counts;

  [[nodiscard]] std::size_t size() const noexcept { return counts.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc{} && r.ptr == end;
}

/// Day number of an ISO date (YYYY-MM-DD) or the value of an integer label.
inline std::optional<std::int64_t> date_ordinal(std::string_view s) {
  std::int64_t v = 0;
  if (parse_number(s, v)) return v;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), m) || !parse_number(s.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Parses `date,count` text. An empty count is a missing observation. Dates
/// must increase at a uniform cadence.
inline ObservationSeries parse_observations(std::string_view text, std::string_view source = "input") {
  const auto rows = detail::lines(text);
  const std::string where(source);
  auto fail = [&](std::size_t line, const std::string& what) -> DataError {
    return DataError(where + ":" + std::to_string(line) + ": " + what);
  };

  std::size_t header_line = 0;
  while (header_line < rows.size() && detail::trim(rows[header_line]).empty()) ++header_line;
  if (header_line == rows.size()) throw DataError(where + ": empty file");
  const auto header = detail::split(rows[header_line]);
  if (header.size() != 2 || header[0] != "date" || header[1] != "count")
    throw fail(header_line + 1, "expected header 'date,count'");

  ObservationSeries out;
  std::optional<std::int64_t> prev;
  std::optional<std::int64_t> cadence;
  for (std::size_t r = header_line + 1; r < rows.size(); ++r) {
    const std::size_t line = r + 1;
    if (detail::trim(rows[r]).empty()) continue;
    const auto fields = detail::split(rows[r]);
    if (fields.size() != 2) throw fail(line, "expected 2 fields, found " + std::to_string(fields.size()));
    const auto ordinal = detail::date_ordinal(fields[0]);
    if (!ordinal) throw fail(line, "malformed date '" + std::string(fields[0]) + "'");
    if (prev) {
      if (*ordinal <= *prev) throw fail(line, "dates must be strictly increasing");
      const auto step = *ordinal - *prev;
      if (cadence && step != *cadence) throw fail(line, "dates are not at a uniform cadence");
      cadence = step;
    }
    prev = ordinal;

    Observation y;
    if (!fields[1].empty()) {
      std::int64_t v = 0;
      if (!detail::parse_number(fields[1], v)) throw fail(line, "malformed count '" + std::string(fields[1]) + "'");
      if (v < 0) throw fail(line, "negative count");
      y = v;
    }
    out.dates.emplace_back(fields[0]);
    out.counts.push_back(y);
  }
  if (out.counts.empty()) throw DataError(where + ": no data rows");
  return out;
}

inline ObservationSeries ingest_csv(const std::string& path) {
  return parse_observations(detail::read_file(path), path);
}

/// Writes a series in the format read by ingest_csv.
inline std::string format_observations(const ObservationSeries& series) {
  std::string out = "date,count\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out += series.dates[t];
    out += ',';
    if (series.counts[t]) out += std::to_string(*series.counts[t]);
    out += '\n';
  }
  return out;
}

/// Text for a double with 10 significant digits; nan and inf spelled out.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// A generic comma-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    return std::nullopt;
  }

  [[nodiscard]] std::size_t require(std::string_view name, std::string_view source) const {
    const auto j = column(name);
    if (!j) throw DataError(std::string(source) + ": missing column '" + std::string(name) + "'");
    return *j;
  }
};

inline Table read_table(const std::string& path) {
  const auto text = detail::read_file(path);
  const auto rows = detail::lines(text);
  Table t;
  std::size_t r = 0;
  while (r < rows.size() && detail::trim(rows[r]).empty()) ++r;
  if (r == rows.size()) throw DataError(path + ": empty file");
  for (auto f : detail::split(rows[r])) t.header.emplace_back(f);
  for (++r; r < rows.size(); ++r) {
    if (detail::trim(rows[r]).empty()) continue;
    const auto fields = detail::split(rows[r]);
    if (fields.size() != t.header.size())
      throw DataError(path + ":" + std::to_string(r + 1) + ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    t.rows.emplace_back(fields.begin(), fields.end());
  }
  return t;
}

inline std::optional<double> parse_optional_double(std::string_view s) {
  s = detail::trim(s);
  if (s.empty() || s == "nan") return std::nullopt;
  double v = 0.0;
  if (!detail::parse_number(s, v)) throw DataError("malformed number '" + std::string(s) + "'");
  return v;
}

}  // namespace bma::io
