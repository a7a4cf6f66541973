#include <gtest/gtest.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <unistd.h>

#include "qsf/errors.hpp"
#include "qsf/pulse_io.hpp"
#include "qsf/qubit.hpp"
#include "qsf/units.hpp"

using namespace qsf;
namespace fs = std::filesystem;

namespace {

const double kOmega = units::mhz_to_rad_per_s(20.0);

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("qsf_io_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

PulseSequence random_pulse(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double dmax = 1.7 * kOmega;
  std::vector<double> d(n);
  for (double& x : d) x = u(rng) * dmax;
  return PulseSequence(ControlField(kOmega * (1.0 + 0.1 * u(rng)), dmax), 60.6e-9 / n, d);
}

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

void expect_bit_identical(const PulseSequence& a, const PulseSequence& b) {
  EXPECT_TRUE(bit_equal(a.field().omega(), b.field().omega()));
  EXPECT_TRUE(bit_equal(a.field().delta_max(), b.field().delta_max()));
  EXPECT_TRUE(bit_equal(a.dt(), b.dt()));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_TRUE(bit_equal(a.deltas()[k], b.deltas()[k]));
}

}  // namespace

TEST(PulseJson, Layout) {
  const PulseSequence p(ControlField(kOmega, 1.5 * kOmega), 3e-9, {0.0, 1.0, -2.0});
  const Json j = pulse_to_json(p, {{"source", "test"}});
  EXPECT_EQ(j.at("omega_rad_per_s").get<double>(), kOmega);
  EXPECT_EQ(j.at("delta_max_rad_per_s").get<double>(), 1.5 * kOmega);
  EXPECT_EQ(j.at("dt_s").get<double>(), 3e-9);
  EXPECT_EQ(j.at("deltas_rad_per_s").size(), 3u);
  EXPECT_EQ(j.at("meta").at("source"), "test");
  EXPECT_TRUE(pulse_to_json(p).at("meta").is_object());
}

TEST(PulseJson, FileRoundTripIsBitIdentical) {
  TempDir dir;
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 2u, 20u, 2000u}) {
    const auto p = random_pulse(rng, n);
    const Json meta = {{"n", n}, {"nested", {{"a", 0.1}}}};
    const auto path = dir.path() / ("p" + std::to_string(n) + ".json");
    write_pulse_file(path, p, meta);
    const auto back = read_pulse_file(path);
    expect_bit_identical(p, back.pulse);
    EXPECT_EQ(back.pulse, p);
    EXPECT_EQ(back.meta, meta);
  }
}

TEST(PulseJson, SecondWriteIsByteIdentical) {
  TempDir dir;
  std::mt19937_64 rng(2);
  const auto p = random_pulse(rng, 50);
  write_pulse_file(dir.path() / "a.json", p);
  write_pulse_file(dir.path() / "b.json", read_pulse_file(dir.path() / "a.json").pulse);
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir.path() / "a.json"), slurp(dir.path() / "b.json"));
}

TEST(PulseJson, MissingFieldsAreNamed) {
  const PulseSequence p(ControlField(kOmega, kOmega), 1e-9, {0.5});
  for (const char* key : {"omega_rad_per_s", "delta_max_rad_per_s", "dt_s", "deltas_rad_per_s"}) {
    Json j = pulse_to_json(p);
    j.erase(key);
    try {
      pulse_from_json(j);
      ADD_FAILURE() << "accepted a pulse without " << key;
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
  Json j = pulse_to_json(p);
  j.erase("meta");
  EXPECT_TRUE(pulse_from_json(j).meta.is_object());
}

TEST(PulseJson, RejectsMistypedAndInvalidContent) {
  const PulseSequence p(ControlField(kOmega, kOmega), 1e-9, {0.5});
  Json j = pulse_to_json(p);
  j["dt_s"] = "one nanosecond";
  EXPECT_THROW(pulse_from_json(j), DomainError);
  j = pulse_to_json(p);
  j["deltas_rad_per_s"] = 3.0;
  EXPECT_THROW(pulse_from_json(j), DomainError);
  j = pulse_to_json(p);
  j["deltas_rad_per_s"] = Json::array({1.0, "x"});
  EXPECT_THROW(pulse_from_json(j), DomainError);
  j = pulse_to_json(p);
  j["deltas_rad_per_s"] = Json::array();
  EXPECT_THROW(pulse_from_json(j), DomainError);
  j = pulse_to_json(p);
  j["dt_s"] = -1e-9;
  EXPECT_THROW(pulse_from_json(j), DomainError);
  j = pulse_to_json(p);
  j["deltas_rad_per_s"] = Json::array({2.0 * kOmega});
  EXPECT_THROW(pulse_from_json(j), DomainError);
  EXPECT_THROW(pulse_from_json(Json::array()), DomainError);
}

TEST(PulseJson, FileErrors) {
  TempDir dir;
  EXPECT_THROW(read_pulse_file(dir.path() / "absent.json"), DomainError);
  {
    std::ofstream(dir.path() / "bad.json") << "{\"omega_rad_per_s\": ";
  }
  EXPECT_THROW(read_pulse_file(dir.path() / "bad.json"), DomainError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const double v = std::bit_cast<double>(bits(rng));
    if (!std::isfinite(v)) continue;
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    ASSERT_TRUE(bit_equal(v, back)) << s;
    std::string mantissa;
    for (char c : s) {
      if (c == 'e') break;
      if (c >= '0' && c <= '9' && !(mantissa.empty() && c == '0')) mantissa += c;
    }
    EXPECT_LE(mantissa.size(), 17u) << s;
    ++checked;
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ScanCsv, HeaderAndRows) {
  const double dmax = 1.5 * kOmega;
  const PulseSequence p(ControlField(kOmega, dmax), 3.14159265358979 / kOmega / 4,
                        {0.0, 0.0, 0.0, 0.0});
  const auto grid = relative_error_grid(dmax, AxisSpec{-0.1, 0.1, 3}, AxisSpec{-0.2, 0.2, 5});
  const auto table = scan_robustness(p, grid);
  std::ostringstream os;
  write_scan_csv(os, table);

  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "delta_err_rel,omega_err_rel,population");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(rows, table.size());
    std::vector<double> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      ASSERT_EQ(ec, std::errc()) << cell;
      ASSERT_EQ(ptr, cell.data() + cell.size()) << cell;
      cells.push_back(v);
    }
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_TRUE(bit_equal(cells[0], table[rows].delta_err_rel));
    EXPECT_TRUE(bit_equal(cells[1], table[rows].delta_omega));
    EXPECT_TRUE(bit_equal(cells[2], table[rows].population));
    ++rows;
  }
  EXPECT_EQ(rows, 15u);
  EXPECT_NEAR(table.front().delta_err_rel, -0.1, 1e-15);
  EXPECT_NEAR(table.front().delta_omega, -0.2, 1e-15);
}
