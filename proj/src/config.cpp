#include "inout/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "inout/errors.hpp"

namespace inout {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(std::string(what) + ": '" + std::string(s) + "' is not a number");
  return value;
}

std::uint64_t to_count(std::string_view s, std::string_view what) {
  s = trim(s);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(std::string(what) + ": '" + std::string(s) + "' is not a non-negative integer");
  return value;
}

bool to_bool(std::string_view s, std::string_view what) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(std::string(what) + ": '" + std::string(s) + "' is not a boolean");
}

Eigen::Index to_dim(std::string_view s) {
  const auto d = to_count(s, "body dimension");
  if (d < 1) throw ConfigError("body dimension must be >= 1");
  return static_cast<Eigen::Index>(d);
}

// Rethrow geometry validation failures as configuration errors.
template <typename Make>
ConvexBody<double> build(std::string_view spec, Make&& make) {
  try {
    return make();
  } catch (const ParameterError& e) {
    throw ConfigError("body '" + std::string(spec) + "': " + e.what());
  }
}

}  // namespace

ConvexBody<double> read_polytope(std::istream& in, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::optional<std::vector<double>> center;
  std::optional<double> radius;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    std::istringstream fields{std::string(text)};
    std::string head;
    fields >> head;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::vector<double> values;
    const bool keyword = head == "center" || head == "radius";
    if (!keyword) values.push_back(to_double(head, where));
    for (std::string tok; fields >> tok;) values.push_back(to_double(tok, where));
    if (head == "center") {
      center = values;
    } else if (head == "radius") {
      if (values.size() != 1) throw ConfigError(where + ": radius takes one value");
      radius = values.front();
    } else {
      if (values.size() < 2) throw ConfigError(where + ": facet rows need d normal entries and an offset");
      if (!rows.empty() && values.size() != rows.front().size())
        throw ConfigError(where + ": facet rows differ in length");
      rows.push_back(std::move(values));
    }
  }
  if (rows.empty()) throw ConfigError(origin + ": no facet rows");
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), d);
  Eigen::VectorXd b(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = row[static_cast<std::size_t>(j)];
    b(i) = row.back();
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  if (center) {
    if (static_cast<Eigen::Index>(center->size()) != d) throw ConfigError(origin + ": center has the wrong dimension");
    c = Eigen::Map<const Eigen::VectorXd>(center->data(), d);
  }
  return build(origin, [&] { return ConvexBody<double>::polytope(A, b, c, radius); });
}

ConvexBody<double> parse_body(std::string_view spec, std::optional<Eigen::Index> default_d,
                              const std::filesystem::path& base_dir) {
  const std::string_view text = trim(spec);
  const auto open = text.find('(');
  const std::string_view name = trim(text.substr(0, open));
  std::vector<std::string_view> args;
  if (open != std::string_view::npos) {
    if (text.back() != ')') throw ConfigError("body '" + std::string(spec) + "': missing ')'");
    const auto inner = trim(text.substr(open + 1, text.size() - open - 2));
    if (!inner.empty()) args = split(inner, ',');
  }

  if (name == "polytope") {
    if (args.size() != 1 || args[0].empty()) throw ConfigError("polytope(file): expected one path");
    std::filesystem::path path{std::string(args[0])};
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("polytope: cannot open '" + path.string() + "'");
    return read_polytope(in, path.string());
  }

  Eigen::Index d = 0;
  if (!args.empty()) {
    d = to_dim(args[0]);
  } else if (default_d) {
    d = *default_d;
  } else {
    throw ConfigError("body '" + std::string(spec) + "': dimension missing (use e.g. " + std::string(name) +
                      "(3) or --d)");
  }
  auto num = [&](std::size_t i) { return to_double(args[i], "body '" + std::string(spec) + "'"); };

  if (name == "ball") {
    if (args.size() > 2) throw ConfigError("ball(d[,R]): too many arguments");
    const double R = args.size() == 2 ? num(1) : 1.0;
    return build(spec, [&] { return ConvexBody<double>::ball(d, R); });
  }
  if (name == "box") {
    if (args.size() != 0 && args.size() != 1 && args.size() != 3) throw ConfigError("box(d[,a,b]): expected 1 or 3 arguments");
    const double a = args.size() == 3 ? num(1) : -1.0;
    const double b = args.size() == 3 ? num(2) : 1.0;
    return build(spec, [&] { return ConvexBody<double>::box(d, a, b); });
  }
  if (name == "simplex") {
    if (args.size() > 2) throw ConfigError("simplex(d[,scale]): too many arguments");
    if (args.size() == 2) return build(spec, [&] { return ConvexBody<double>::simplex(d, num(1)); });
    return build(spec, [&] { return ConvexBody<double>::simplex(d); });
  }
  if (name == "ellipsoid") {
    Eigen::VectorXd axes(d);
    if (args.size() == 2) {
      axes.setConstant(num(1));
    } else if (args.size() == static_cast<std::size_t>(d) + 1) {
      for (Eigen::Index i = 0; i < d; ++i) axes(i) = num(static_cast<std::size_t>(i) + 1);
    } else {
      throw ConfigError("ellipsoid(d,a1,...,ad): expected 1 or d semi-axes");
    }
    return build(spec, [&] { return ConvexBody<double>::ellipsoid(axes); });
  }
  throw ConfigError("unknown body '" + std::string(name) + "' (ball, box, simplex, polytope, ellipsoid)");
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& origin) {
  ConfigFile cfg;
  std::string section;
  cfg.order_.push_back(section);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string_view text = line;
    // Comments start at '#' or ';' at the line start or after whitespace.
    for (std::size_t i = 0; i < text.size(); ++i)
      if ((text[i] == '#' || text[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])))) {
        text = text.substr(0, i);
        break;
      }
    text = trim(text);
    if (text.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      if (std::find(cfg.order_.begin(), cfg.order_.end(), section) == cfg.order_.end()) cfg.order_.push_back(section);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const auto key = std::string(trim(text.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    cfg.sections_[section][key] = std::string(trim(text.substr(eq + 1)));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  ConfigFile cfg = parse(in, path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

std::optional<std::string> ConfigFile::get(const std::string& key, const std::string& section) const {
  if (const auto s = sections_.find(section); s != sections_.end())
    if (const auto v = s->second.find(key); v != s->second.end()) return v->second;
  for (const auto& name : order_) {
    const auto s = sections_.find(name);
    if (s == sections_.end()) continue;
    if (const auto v = s->second.find(key); v != s->second.end()) return v->second;
  }
  return std::nullopt;
}

std::string_view to_string(Walk walk) {
  switch (walk) {
    case Walk::InOut: return "inout";
    case Walk::Ball: return "ball";
    case Walk::Speedy: return "speedy";
  }
  return "?";
}

Walk parse_walk(std::string_view name) {
  name = trim(name);
  if (name == "inout") return Walk::InOut;
  if (name == "ball") return Walk::Ball;
  if (name == "speedy") return Walk::Speedy;
  throw ConfigError("unknown walk '" + std::string(name) + "' (inout, ball, speedy)");
}

void ExperimentConfig::validate() const {
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 1/2)");
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("eps must lie in (0, 1/2)");
  if (!(q >= 1.0)) throw ConfigError("q must be >= 1");
  if (!(warmness >= 1.0)) throw ConfigError("M must be >= 1");
  if (h && !(*h > 0.0)) throw ConfigError("h must be > 0");
  if (N && *N < 1) throw ConfigError("N must be >= 1");
  if (delta && !(*delta > 0.0)) throw ConfigError("delta must be > 0");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) throw ConfigError("checkpoints must be sorted");
  if (!checkpoints.empty() && checkpoints.back() > m) throw ConfigError("checkpoints must not exceed m");
}

ConvexBody<double> ExperimentConfig::make_body() const { return parse_body(body, d, base_dir); }

void ExperimentConfig::apply(const ConfigFile& file) {
  if (auto v = file.get("label")) label = *v;
  if (auto v = file.get("body")) body = *v;
  if (auto v = file.get("spec", "body")) body = *v;
  if (auto v = file.get("d")) d = to_dim(*v);
  if (auto v = file.get("walk")) walk = parse_walk(*v);
  if (auto v = file.get("m")) m = to_count(*v, "m");
  if (auto v = file.get("M")) warmness = to_double(*v, "M");
  if (auto v = file.get("eta")) eta = to_double(*v, "eta");
  if (auto v = file.get("eps")) eps = to_double(*v, "eps");
  if (auto v = file.get("q")) q = to_double(*v, "q");
  if (auto v = file.get("h")) h = to_double(*v, "h");
  if (auto v = file.get("N")) N = to_count(*v, "N");
  if (auto v = file.get("delta")) delta = to_double(*v, "delta");
  if (auto v = file.get("chains")) chains = to_count(*v, "chains");
  if (auto v = file.get("seed")) seed = to_count(*v, "seed");
  if (auto v = file.get("restart")) restart = to_bool(*v, "restart");
  if (auto v = file.get("coords")) coords = to_bool(*v, "coords");
  if (auto v = file.get("threads")) threads = static_cast<unsigned>(to_count(*v, "threads"));
  if (auto v = file.get("out")) out = std::filesystem::path(*v);
  if (auto v = file.get("checkpoints")) {
    checkpoints.clear();
    for (auto part : split(*v, ','))
      if (!part.empty()) checkpoints.push_back(to_count(part, "checkpoints"));
  }
  if (!file.base_dir().empty()) base_dir = file.base_dir();
}

}  // namespace inout
