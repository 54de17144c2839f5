#include "satconv/train_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <string_view>

#include "satconv/errors.hpp"

namespace satconv {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  const std::string& source;
  std::size_t line;
  std::string_view key;
  std::string_view value;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(source + ":" + std::to_string(line) + ": field '" + std::string(key) +
                      "': " + why);
  }

  template <typename T>
  T number() const {
    T v{};
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) {
      fail("expected a number, got '" + std::string(value) + "'");
    }
    return v;
  }

  std::size_t count(std::size_t min) const {
    const auto v = number<std::size_t>();
    if (v < min) fail("must be at least " + std::to_string(min));
    return v;
  }
};

void check_odd_kernel(const Field& f, int k) {
  if (k < 3 || k % 2 == 0) f.fail("kernel size must be odd and >= 3, got " + std::to_string(k));
}

std::vector<int> parse_box_target(std::string_view spec) {
  std::vector<int> v;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const std::string_view part = trim(spec.substr(0, comma));
    int x = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (ec != std::errc{} || p != part.data() + part.size()) return {};
    v.push_back(x);
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  return v;
}

}  // namespace

TrainConfig parse_train_config(std::istream& in, const std::string& source) {
  TrainConfig c;
  std::set<std::string, std::less<>> seen;
  bool have_task = false;
  std::size_t target_line = 0;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value'");
    }
    const Field f{source, line, trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (f.value.empty()) f.fail("empty value");
    if (!seen.emplace(f.key).second) f.fail("given more than once");

    if (f.key == "task") {
      if (f.value == "kernel_approx") c.task = TaskKind::KernelApprox;
      else if (f.value == "keypoints") c.task = TaskKind::Keypoints;
      else f.fail("unknown task '" + std::string(f.value) + "'");
      have_task = true;
    } else if (f.key == "steps") {
      c.steps = f.count(0);
    } else if (f.key == "lr") {
      c.lr = f.number<double>();
      if (!(c.lr > 0.0) || !std::isfinite(c.lr)) f.fail("must be positive");
    } else if (f.key == "seed") {
      c.seed = f.number<std::uint64_t>();
    } else if (f.key == "output") {
      c.output = std::string(f.value);
    } else if (f.key == "log") {
      c.log = std::string(f.value);
    } else if (f.key == "box_variant") {
      try {
        c.box_variant = parse_variant(f.value);
      } catch (const std::exception& e) {
        f.fail(e.what());
      }
    } else if (f.key == "k") {
      c.k = f.number<int>();
      check_odd_kernel(f, c.k);
    } else if (f.key == "n_boxes") {
      c.n_boxes = f.count(0);
    } else if (f.key == "target") {
      c.target = std::string(f.value);
      target_line = line;
      if (c.target != "log") {
        if (!c.target.starts_with("box:") || parse_box_target(f.value.substr(4)).size() != 4) {
          f.fail("expected 'log' or 'box:xl,xh,yl,yh'");
        }
      }
    } else if (f.key == "sigma") {
      c.sigma = f.number<double>();
      if (!(c.sigma > 0.0)) f.fail("must be positive");
    } else if (f.key == "target_size") {
      c.target_size = f.number<int>();
      check_odd_kernel(f, c.target_size);
    } else if (f.key == "image_size") {
      c.image_size = f.count(12);
    } else if (f.key == "channels") {
      c.channels = f.count(2);
      if (c.channels % 2 != 0) f.fail("must be even");
    } else if (f.key == "blocks") {
      c.blocks.clear();
      std::string_view rest = f.value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        try {
          c.blocks.push_back(parse_block(item));
        } catch (const ConfigError& e) {
          f.fail(e.what());
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else if (f.key == "batch") {
      c.batch = f.count(1);
    } else if (f.key == "eval_samples") {
      c.eval_samples = f.count(0);
    } else {
      f.fail("unknown key");
    }
  }
  if (!have_task) throw ConfigError(source + ": missing required field 'task'");
  if (c.task == TaskKind::KernelApprox) {
    if (!seen.contains("lr")) c.lr = KernelApproxOptions{}.lr;
    if (c.target == "log" && c.target_size > c.k) {
      throw ConfigError(source + ": field 'target_size': " + std::to_string(c.target_size) +
                        " exceeds window k = " + std::to_string(c.k));
    }
    try {
      config_target(c);
    } catch (const std::exception& e) {
      throw ConfigError(source + ":" + std::to_string(target_line) + ": field 'target': " + e.what());
    }
  } else if (c.blocks.empty()) {
    c.blocks = default_keypoint_network().blocks;
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_train_config(in, path.string());
}

DenseKernel config_target(const TrainConfig& c) {
  if (c.target == "log") return laplacian_of_gaussian(c.target_size, c.sigma);
  const std::vector<int> e = parse_box_target(std::string_view(c.target).substr(4));
  const int half = (c.k - 1) / 2;
  if (e.size() != 4 || e[0] > e[1] || e[2] > e[3] || e[0] < -half || e[1] > half || e[2] < -half ||
      e[3] > half) {
    throw ConfigError("box target must satisfy -" + std::to_string(half) + " <= lo <= hi <= " +
                      std::to_string(half));
  }
  DenseKernel t(c.k);
  for (int y = e[2]; y <= e[3]; ++y) {
    for (int x = e[0]; x <= e[1]; ++x) t.at(y + half, x + half) = 1.0;
  }
  return t;
}

KernelApproxOptions kernel_approx_options(const TrainConfig& c) {
  KernelApproxOptions o;
  o.k = c.k;
  o.n_boxes = c.n_boxes;
  o.steps = c.steps;
  o.lr = c.lr;
  o.seed = c.seed;
  o.variant = c.box_variant;
  return o;
}

KeypointOptions keypoint_options(const TrainConfig& c) {
  KeypointOptions o;
  o.image_size = c.image_size;
  o.network.width = c.channels;
  o.network.blocks = c.blocks;
  o.network.box_variant = c.box_variant;
  o.steps = c.steps;
  o.batch = c.batch;
  o.lr = c.lr;
  o.seed = c.seed;
  o.eval_samples = c.eval_samples;
  return o;
}

}  // namespace satconv
