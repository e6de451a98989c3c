#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "specsense/results_io.hpp"

using namespace specsense;

namespace {

ResultsRow known_row() {
  ResultsRow r;
  r.snr_db = -2.5;
  r.n_sus = 10;
  r.n_clusters = 5;
  r.compression_ratio = 0.1;
  r.pd = 0.97;
  r.pfa = 0.1;
  r.pmd = 0.03;
  r.pe_raw = 0.13;
  r.pe_avg = 0.065;
  r.t_acquire_ms = 0.25;
  r.t_recover_ms = 1.0 / 3.0;
  r.t_detect_ms = 0.0;
  r.t_fuse_ms = 1e-6;
  r.t_total_ms = 2.0;
  r.n_trials = 2000;
  r.base_seed = 18446744073709551615ULL;
  return r;
}

ResultsTable random_table(std::size_t rows) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  ResultsTable t;
  for (std::size_t i = 0; i < rows; ++i) {
    ResultsRow r;
    r.snr_db = u(gen);
    r.n_sus = gen() % 100;
    r.n_clusters = gen() % 10;
    r.compression_ratio = std::abs(u(gen)) / 50.0;
    r.pd = u(gen);
    r.pfa = u(gen);
    r.pmd = u(gen) * 1e-300;
    r.pe_raw = u(gen) * 1e300;
    r.pe_avg = u(gen);
    r.t_acquire_ms = u(gen);
    r.t_recover_ms = u(gen);
    r.t_detect_ms = u(gen);
    r.t_fuse_ms = u(gen);
    r.t_total_ms = u(gen);
    r.n_trials = gen();
    r.base_seed = gen();
    t.rows.push_back(r);
  }
  return t;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string("specsense_") + name);
}

}  // namespace

TEST(Results, EmptyTable) {
  const ResultsTable empty;
  EXPECT_EQ(to_csv(empty), std::string(kResultsHeader) + "\n");
  EXPECT_EQ(nlohmann::json::parse(to_json_text(empty)), nlohmann::json::array());
  EXPECT_TRUE(parse_csv(to_csv(empty)).rows.empty());
}

TEST(Results, GoldenCsvLine) {
  EXPECT_EQ(format_csv_row(known_row()),
            "-2.5,10,5,0.1,0.97,0.1,0.03,0.13,0.065,0.25,0.3333333333333333,0,1e-06,2,2000,"
            "18446744073709551615");
}

TEST(Results, JsonKeysMatchHeader) {
  const auto j = to_json(known_row());
  std::string keys;
  for (const auto& [k, v] : j.items()) keys += (keys.empty() ? "" : ",") + k;
  EXPECT_EQ(keys, kResultsHeader);
}

TEST(Results, CsvRoundTrip) {
  const auto table = random_table(50);
  const auto path = temp_file("roundtrip.csv");
  emit_results(table, ResultsFormat::CSV, path.string());
  const auto back = parse_csv(read_text_file(path.string()));
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(back.rows[i], table.rows[i]) << i;
  std::filesystem::remove(path);
}

TEST(Results, JsonRoundTrip) {
  const auto table = random_table(50);
  const auto path = temp_file("roundtrip.json");
  emit_results(table, ResultsFormat::JSON, path.string());
  const auto back = parse_results_json(read_text_file(path.string()));
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(back.rows[i], table.rows[i]) << i;
  std::filesystem::remove(path);
}

TEST(Results, UnwritablePathCarriesPath) {
  try {
    emit_results(ResultsTable{}, ResultsFormat::CSV, "/nonexistent-dir/out.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
}

TEST(Results, MalformedCsvRejected) {
  EXPECT_THROW(parse_csv("a,b\n"), InvalidArgument);
  EXPECT_THROW(parse_csv(std::string(kResultsHeader) + "\n1,2,3\n"), InvalidArgument);
  std::string bad = format_csv_row(known_row());
  bad[0] = 'x';
  EXPECT_THROW(parse_csv(std::string(kResultsHeader) + "\n" + bad + "\n"), InvalidArgument);
  EXPECT_THROW(parse_results_format("xml"), InvalidArgument);
}
