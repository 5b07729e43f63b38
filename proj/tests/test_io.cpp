// Copyright 2026 The catchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "catchain/errors.hpp"
#include "catchain/io.hpp"
#include "catchain/observables.hpp"
#include "test_support.hpp"

namespace catchain {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("catchain_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  template <typename F>
  static std::string error_of(F&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  }

  fs::path dir_;
};

TEST(Format, RoundTripsDoubles) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST_F(IoTest, ControlsRoundTrip) {
  const TimeGrid grid(1.0, 7);
  const std::vector<std::string> labels{"omega_1", "k_1"};
  Eigen::MatrixXd v = Eigen::MatrixXd::Random(2, 7) / 3.0;
  const ControlSet c(grid, labels, v);
  write_controls_csv(dir_ / "c.csv", c);
  const std::string text = slurp(dir_ / "c.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,omega_1,k_1");
  const ControlSet back = read_controls_csv(dir_ / "c.csv", grid, labels);
  EXPECT_EQ(back.values(), v);
}

TEST_F(IoTest, ControlsErrors) {
  const TimeGrid grid(1.0, 2);
  const std::vector<std::string> labels{"omega_1"};
  auto header = write("h.csv", "t,omega_2\n0,0\n0.5,0\n");
  EXPECT_NE(error_of([&] { read_controls_csv(header, grid, labels); }).find("does not match expected 't,omega_1'"),
            std::string::npos);
  auto rows = write("r.csv", "t,omega_1\n0,0\n");
  EXPECT_NE(error_of([&] { read_controls_csv(rows, grid, labels); }).find("expected nt = 2 rows, found 1"),
            std::string::npos);
  auto times = write("t.csv", "t,omega_1\n0,0\n0.4,0\n");
  EXPECT_NE(error_of([&] { read_controls_csv(times, grid, labels); }).find("has t = 0.4"), std::string::npos);
  auto text = write("x.csv", "t,omega_1\n0,abc\n0.5,0\n");
  EXPECT_NE(error_of([&] { read_controls_csv(text, grid, labels); }).find("not a number"), std::string::npos);
  auto width = write("w.csv", "t,omega_1\n0,0,1\n0.5,0\n");
  EXPECT_NE(error_of([&] { read_controls_csv(width, grid, labels); }).find("expected 2 fields"), std::string::npos);
  EXPECT_THROW(read_controls_csv(dir_ / "missing.csv", grid, labels), ConfigError);
}

TEST_F(IoTest, HistoryTable) {
  std::vector<IterationRecord> h(2);
  h[0].iteration = 0;
  h[0].j_t = 0.5;
  h[1].iteration = 1;
  h[1].j_t = 0.25;
  h[1].running_cost = 1e-3;
  write_history_csv(dir_ / "h.csv", h);
  EXPECT_EQ(slurp(dir_ / "h.csv"), "iteration,J_T,running_cost\n0,0.5,0\n1,0.25,0.001\n");
}

TEST_F(IoTest, DensityRoundTrip) {
  std::mt19937_64 rng(61);
  const DensityMatrix rho(FockSpace(1, 5), testing::random_density(5, rng));
  write_density_csv(dir_ / "rho.csv", rho);
  const DensityMatrix back = read_density_csv(dir_ / "rho.csv");
  EXPECT_EQ(back.entries(), rho.entries());
  auto bad = write("bad.csv", "m,n,re\n");
  EXPECT_THROW(read_density_csv(bad), ConfigError);
  auto neg = write("neg.csv", "m,n,re,im\n-1,0,1,0\n");
  EXPECT_THROW(read_density_csv(neg), ConfigError);
}

TEST_F(IoTest, WignerSidecar) {
  const DensityMatrix vac = DensityMatrix::pure(StateVector::basis(FockSpace(1, 3), 0));
  WignerOptions o;
  o.n_points = 11;
  const WignerGrid g = wigner(vac, o, 1, 2.5);
  write_wigner(dir_ / "w.csv", g, "unit");
  const std::string csv = slurp(dir_ / "w.csv");
  EXPECT_EQ(csv.substr(0, 6), "x,p,W\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 122);
  const std::string meta = slurp(dir_ / "w.json");
  EXPECT_NE(meta.find("\"mode\": 2"), std::string::npos);
  EXPECT_NE(meta.find("\"time\": 2.5"), std::string::npos);
  EXPECT_NE(meta.find("\"csv\": \"w.csv\""), std::string::npos);
}

}  // namespace
}  // namespace catchain
