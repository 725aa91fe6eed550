#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "inout/config.hpp"
#include "inout/errors.hpp"

using namespace inout;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("inout_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, ParseBodySpecs) {
  EXPECT_EQ(parse_body("ball(3)").describe(), "ball(3,1)");
  EXPECT_EQ(parse_body("ball(2, 1.5)").radius(), 1.5);
  EXPECT_EQ(parse_body("box(3)").describe(), "box(3,-1,1)");
  const auto box = parse_body("box(2,0,3)");
  EXPECT_EQ(box.lower()(1), 0.0);
  EXPECT_EQ(box.upper()(0), 3.0);
  EXPECT_EQ(parse_body("simplex(4)").dim(), 4);
  EXPECT_EQ(parse_body("simplex(2,10)").scale(), 10.0);
  const auto ell = parse_body("ellipsoid(3,1,2,3)");
  EXPECT_EQ(ell.semi_axes()(2), 3.0);
  EXPECT_EQ(parse_body("ellipsoid(4,2)").semi_axes(), Eigen::VectorXd::Constant(4, 2.0));
  EXPECT_EQ(parse_body("box", 7).dim(), 7);
}

TEST(Config, ParseBodyErrors) {
  EXPECT_THROW(parse_body("box"), ConfigError);
  EXPECT_THROW(parse_body("cube(3)"), ConfigError);
  EXPECT_THROW(parse_body("ball(3"), ConfigError);
  EXPECT_THROW(parse_body("ball(0)"), ConfigError);
  EXPECT_THROW(parse_body("ball(2,0.5)"), ConfigError);
  EXPECT_THROW(parse_body("box(2,1)"), ConfigError);
  EXPECT_THROW(parse_body("ellipsoid(3,1,2)"), ConfigError);
  EXPECT_THROW(parse_body("ball(x)"), ConfigError);
  EXPECT_THROW(parse_body("polytope(/nonexistent/file.txt)"), ConfigError);
}

TEST(Config, PolytopeFile) {
  const auto dir = scratch_dir("polytope");
  {
    std::ofstream f(dir / "square.txt");
    f << "# unit square scaled by 2\n1 0 2\n-1 0 2\n0 1 2\n0 -1 2\n";
  }
  const auto body = parse_body("polytope(square.txt)", std::nullopt, dir);
  EXPECT_EQ(body.kind(), BodyKind::Polytope);
  EXPECT_EQ(body.dim(), 2);
  EXPECT_NEAR(body.circumradius(), std::sqrt(8.0), 1e-12);
  EXPECT_TRUE(body.contains(Eigen::Vector2d(1.9, -1.9)));

  std::istringstream shifted("center 5 5\nradius 3\n1 0 7\n-1 0 -3\n0 1 7\n0 -1 -3\n");
  const auto s = read_polytope(shifted);
  EXPECT_EQ(s.center(), Eigen::Vector2d(5, 5));
  EXPECT_EQ(s.circumradius(), 3.0);

  std::istringstream ragged("1 0 1\n0 1\n");
  EXPECT_THROW(read_polytope(ragged), ConfigError);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(read_polytope(empty), ConfigError);
}

TEST(Config, ConfigFileSections) {
  std::istringstream in("label = top\n; comment\n[body]\nspec = ball(3)\n[chain]\nm = 20  # trailing\neta=0.2\n");
  const auto f = ConfigFile::parse(in);
  EXPECT_EQ(f.get("label"), "top");
  EXPECT_EQ(f.get("spec", "body"), "ball(3)");
  EXPECT_EQ(f.get("m"), "20");
  EXPECT_FALSE(f.get("missing").has_value());

  ExperimentConfig c;
  c.apply(f);
  EXPECT_EQ(c.label, "top");
  EXPECT_EQ(c.body, "ball(3)");
  EXPECT_EQ(c.m, 20u);
  EXPECT_EQ(c.eta, 0.2);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.make_body().describe(), "ball(3,1)");
}

TEST(Config, ConfigFileErrors) {
  std::istringstream no_eq("just words\n");
  EXPECT_THROW(ConfigFile::parse(no_eq), ConfigError);
  std::istringstream bad_header("[open\n");
  EXPECT_THROW(ConfigFile::parse(bad_header), ConfigError);
  EXPECT_THROW(ConfigFile::load("/nonexistent/x.cfg"), ConfigError);
  std::istringstream bad_value("m = ten\n");
  ExperimentConfig c;
  EXPECT_THROW(c.apply(ConfigFile::parse(bad_value)), ConfigError);
}

TEST(Config, Validate) {
  ExperimentConfig c;
  c.d = 3;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.eta = 0.7;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.checkpoints = {5, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.checkpoints = {1, c.m + 1};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.chains = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.h = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, Walks) {
  EXPECT_EQ(parse_walk("inout"), Walk::InOut);
  EXPECT_EQ(parse_walk("speedy"), Walk::Speedy);
  EXPECT_EQ(to_string(Walk::Ball), "ball");
  EXPECT_THROW(parse_walk("hit-and-run"), ConfigError);
}
