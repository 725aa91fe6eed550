#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inout/geometry.hpp"

namespace inout {

/// Parses "ball(d[,R])", "box(d[,a,b])", "simplex(d)", "polytope(path)" and
/// "ellipsoid(d,a1,...,ad)" (a single axis is broadcast). A bare kind name such as "box"
/// takes its dimension from `default_d`. Polytope files hold one facet per line as
/// "n1 ... nd b", with optional "center c1 ... cd" and "radius D" lines and '#' comments;
/// relative paths resolve against `base_dir`.
ConvexBody<double> parse_body(std::string_view spec, std::optional<Eigen::Index> default_d = std::nullopt,
                              const std::filesystem::path& base_dir = {});

ConvexBody<double> read_polytope(std::istream& in, const std::string& origin = "<stream>");

/// Line-oriented "key = value" text with "[section]" headers. '#' or ';' at the start of a
/// line or after whitespace begins a comment.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin = "<stream>");
  static ConfigFile load(const std::filesystem::path& path);

  /// Looks in `section` first, then in every section in file order.
  std::optional<std::string> get(const std::string& key, const std::string& section = "") const;
  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return sections_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::vector<std::string> order_;
  std::filesystem::path base_dir_;
};

enum class Walk { InOut, Ball, Speedy };

std::string_view to_string(Walk walk);
Walk parse_walk(std::string_view name);

struct ExperimentConfig {
  std::string label;
  std::string body = "box";
  std::optional<Eigen::Index> d;
  Walk walk = Walk::InOut;
  std::uint64_t m = 50;
  double warmness = 1.0;
  double eta = 0.1;
  double eps = 0.1;
  double q = 2.0;
  std::optional<double> h;
  std::optional<std::uint64_t> N;
  std::optional<double> delta;
  std::uint64_t chains = 100;
  std::uint64_t seed = 0;
  bool restart = false;
  /// Write x1..xd columns in the trace CSV.
  bool coords = true;
  std::vector<std::uint64_t> checkpoints;
  std::optional<std::filesystem::path> out;
  unsigned threads = 0;
  std::filesystem::path base_dir;

  /// Throws ConfigError when fields are inconsistent.
  void validate() const;
  ConvexBody<double> make_body() const;

  /// Fills fields present in `file`; absent keys keep their current value.
  void apply(const ConfigFile& file);
};

}  // namespace inout
