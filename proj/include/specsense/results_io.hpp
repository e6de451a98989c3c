#pragma once

// CSV/JSON serialization of sweep results.

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "specsense/errors.hpp"
#include "specsense/experiment.hpp"

namespace specsense {

enum class ResultsFormat { CSV, JSON };

inline ResultsFormat parse_results_format(std::string_view s) {
  if (s == "csv") return ResultsFormat::CSV;
  if (s == "json") return ResultsFormat::JSON;
  throw InvalidArgument("unknown results format: " + std::string(s));
}

inline constexpr std::string_view kResultsHeader =
    "snr_db,n_sus,n_clusters,compression_ratio,pd,pfa,pmd,pe_raw,pe_avg,t_acquire_ms,t_recover_ms,"
    "t_detect_ms,t_fuse_ms,t_total_ms,n_trials,base_seed";

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_csv_row(const ResultsRow& r) {
  std::string out;
  auto d = [&](double v) {
    out += format_double(v);
    out += ',';
  };
  d(r.snr_db);
  out += std::to_string(r.n_sus) + ',' + std::to_string(r.n_clusters) + ',';
  d(r.compression_ratio);
  d(r.pd);
  d(r.pfa);
  d(r.pmd);
  d(r.pe_raw);
  d(r.pe_avg);
  d(r.t_acquire_ms);
  d(r.t_recover_ms);
  d(r.t_detect_ms);
  d(r.t_fuse_ms);
  d(r.t_total_ms);
  out += std::to_string(r.n_trials) + ',' + std::to_string(r.base_seed);
  return out;
}

inline std::string to_csv(const ResultsTable& table) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& row : table.rows) {
    out += format_csv_row(row);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ResultsRow& r) {
  nlohmann::ordered_json j;
  j["snr_db"] = r.snr_db;
  j["n_sus"] = r.n_sus;
  j["n_clusters"] = r.n_clusters;
  j["compression_ratio"] = r.compression_ratio;
  j["pd"] = r.pd;
  j["pfa"] = r.pfa;
  j["pmd"] = r.pmd;
  j["pe_raw"] = r.pe_raw;
  j["pe_avg"] = r.pe_avg;
  j["t_acquire_ms"] = r.t_acquire_ms;
  j["t_recover_ms"] = r.t_recover_ms;
  j["t_detect_ms"] = r.t_detect_ms;
  j["t_fuse_ms"] = r.t_fuse_ms;
  j["t_total_ms"] = r.t_total_ms;
  j["n_trials"] = r.n_trials;
  j["base_seed"] = r.base_seed;
  return j;
}

inline std::string to_json_text(const ResultsTable& table) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) arr.push_back(to_json(row));
  return arr.dump(2) + "\n";
}

inline void emit_results(const ResultsTable& table, ResultsFormat format, const std::string& path) {
  const std::string text = format == ResultsFormat::CSV ? to_csv(table) : to_json_text(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

namespace detail {

template <typename T>
T parse_field(std::string_view s, std::string_view name) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidArgument("results: bad value '" + std::string(s) + "' for " + std::string(name));
  return v;
}

}  // namespace detail

inline ResultsTable parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  detail::require(!lines.empty() && lines.front() == kResultsHeader, "results: missing or unexpected CSV header");
  ResultsTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    detail::require(f.size() == 16, "results: expected 16 CSV fields");
    using detail::parse_field;
    ResultsRow r;
    r.snr_db = parse_field<double>(f[0], "snr_db");
    r.n_sus = parse_field<std::size_t>(f[1], "n_sus");
    r.n_clusters = parse_field<std::size_t>(f[2], "n_clusters");
    r.compression_ratio = parse_field<double>(f[3], "compression_ratio");
    r.pd = parse_field<double>(f[4], "pd");
    r.pfa = parse_field<double>(f[5], "pfa");
    r.pmd = parse_field<double>(f[6], "pmd");
    r.pe_raw = parse_field<double>(f[7], "pe_raw");
    r.pe_avg = parse_field<double>(f[8], "pe_avg");
    r.t_acquire_ms = parse_field<double>(f[9], "t_acquire_ms");
    r.t_recover_ms = parse_field<double>(f[10], "t_recover_ms");
    r.t_detect_ms = parse_field<double>(f[11], "t_detect_ms");
    r.t_fuse_ms = parse_field<double>(f[12], "t_fuse_ms");
    r.t_total_ms = parse_field<double>(f[13], "t_total_ms");
    r.n_trials = parse_field<std::size_t>(f[14], "n_trials");
    r.base_seed = parse_field<std::uint64_t>(f[15], "base_seed");
    table.rows.push_back(r);
  }
  return table;
}

inline ResultsTable parse_results_json(const std::string& text) {
  const auto arr = nlohmann::json::parse(text);
  detail::require(arr.is_array(), "results: JSON root must be an array");
  ResultsTable table;
  for (const auto& j : arr) {
    ResultsRow r;
    r.snr_db = j.at("snr_db").get<double>();
    r.n_sus = j.at("n_sus").get<std::size_t>();
    r.n_clusters = j.at("n_clusters").get<std::size_t>();
    r.compression_ratio = j.at("compression_ratio").get<double>();
    r.pd = j.at("pd").get<double>();
    r.pfa = j.at("pfa").get<double>();
    r.pmd = j.at("pmd").get<double>();
    r.pe_raw = j.at("pe_raw").get<double>();
    r.pe_avg = j.at("pe_avg").get<double>();
    r.t_acquire_ms = j.at("t_acquire_ms").get<double>();
    r.t_recover_ms = j.at("t_recover_ms").get<double>();
    r.t_detect_ms = j.at("t_detect_ms").get<double>();
    r.t_fuse_ms = j.at("t_fuse_ms").get<double>();
    r.t_total_ms = j.at("t_total_ms").get<double>();
    r.n_trials = j.at("n_trials").get<std::size_t>();
    r.base_seed = j.at("base_seed").get<std::uint64_t>();
    table.rows.push_back(r);
  }
  return table;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace specsense
