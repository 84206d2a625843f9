#include "hpshield/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hpshield/crossing_env.hpp"

namespace hpshield {

namespace {

// Summed-area table with a zero first row and column.
std::vector<double> integral(const Frame& f, bool squared) {
  const std::size_t H = f.height(), W = f.width();
  std::vector<double> s((H + 1) * (W + 1), 0.0);
  for (std::size_t r = 0; r < H; ++r) {
    double row = 0;
    for (std::size_t c = 0; c < W; ++c) {
      double v = f(r, c);
      row += squared ? v * v : v;
      s[(r + 1) * (W + 1) + c + 1] = s[r * (W + 1) + c + 1] + row;
    }
  }
  return s;
}

double box(const std::vector<double>& s, std::size_t W, std::size_t r, std::size_t c, std::size_t h, std::size_t w) {
  const std::size_t stride = W + 1;
  return s[(r + h) * stride + c + w] - s[r * stride + c + w] - s[(r + h) * stride + c] + s[r * stride + c];
}

bool before(const Match& a, const Match& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.row != b.row) return a.row < b.row;
  return a.col < b.col;
}

}  // namespace

std::vector<double> score_map(const Frame& f, const Frame& patch) {
  const std::size_t h = patch.height(), w = patch.width();
  if (h == 0 || w == 0 || h > f.height() || w > f.width()) {
    throw PerceptionError(PerceptionError::Kind::TemplateTooLarge, "template does not fit in the frame");
  }
  const double n = static_cast<double>(h * w);
  double mean = 0;
  for (double v : patch.data()) mean += v;
  mean /= n;
  std::vector<double> centered(patch.data().size());
  double tnorm2 = 0;
  for (std::size_t i = 0; i < centered.size(); ++i) {
    centered[i] = patch.data()[i] - mean;
    tnorm2 += centered[i] * centered[i];
  }
  if (!(tnorm2 > 1e-12)) throw PerceptionError(PerceptionError::Kind::ConstantTemplate, "template has zero variance");
  const double tnorm = std::sqrt(tnorm2);

  const std::vector<double> s1 = integral(f, false), s2 = integral(f, true);
  const std::size_t rows = f.height() - h + 1, cols = f.width() - w + 1, W = f.width();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(rows * cols, nan);
  const double* fd = f.data().data();
  std::vector<double> cross(cols), var(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t live = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      double sum = box(s1, W, r, c, h, w);
      var[c] = box(s2, W, r, c, h, w) - sum * sum / n;  // n times the window variance
      live += var[c] > 1e-10;
    }
    if (live == 0) continue;
    // the centered patch sums to zero, so correlating with raw window values suffices
    std::fill(cross.begin(), cross.end(), 0.0);
    if (live * 4 >= cols) {
      for (std::size_t i = 0; i < h; ++i) {
        const double* frow = fd + (r + i) * W;
        for (std::size_t j = 0; j < w; ++j) {
          const double t = centered[i * w + j];
          const double* src = frow + j;
          for (std::size_t c = 0; c < cols; ++c) cross[c] += t * src[c];
        }
      }
    } else {
      for (std::size_t c = 0; c < cols; ++c) {
        if (!(var[c] > 1e-10)) continue;
        double acc = 0;
        for (std::size_t i = 0; i < h; ++i) {
          const double* frow = fd + (r + i) * W + c;
          for (std::size_t j = 0; j < w; ++j) acc += centered[i * w + j] * frow[j];
        }
        cross[c] = acc;
      }
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (var[c] > 1e-10) out[r * cols + c] = std::clamp(cross[c] / (tnorm * std::sqrt(var[c])), -1.0, 1.0);
    }
  }
  return out;
}

Match match_template(const Frame& f, const Template& t) {
  std::vector<double> scores = score_map(f, t.patch);
  const std::size_t cols = f.width() - t.patch.width() + 1;
  Match best{t.label, 0, 0, -std::numeric_limits<double>::infinity()};
  bool found = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i]) || scores[i] <= best.score) continue;
    best.row = i / cols;
    best.col = i % cols;
    best.score = scores[i];
    found = true;
  }
  if (!found) throw PerceptionError(PerceptionError::Kind::DegenerateWindow, "every window has zero variance");
  return best;
}

std::vector<Match> match_all(const Frame& f, const Template& t, double quality) {
  std::vector<double> scores = score_map(f, t.patch);
  const std::size_t cols = f.width() - t.patch.width() + 1;
  if (std::all_of(scores.begin(), scores.end(), [](double s) { return std::isnan(s); })) {
    throw PerceptionError(PerceptionError::Kind::DegenerateWindow, "every window has zero variance");
  }
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= quality) candidates.push_back({t.label, i / cols, i % cols, scores[i]});
  }
  std::sort(candidates.begin(), candidates.end(), before);
  std::vector<Match> accepted;
  const auto h = static_cast<std::ptrdiff_t>(t.patch.height()), w = static_cast<std::ptrdiff_t>(t.patch.width());
  for (const Match& m : candidates) {
    bool suppressed = std::any_of(accepted.begin(), accepted.end(), [&](const Match& a) {
      auto dr = static_cast<std::ptrdiff_t>(m.row) - static_cast<std::ptrdiff_t>(a.row);
      auto dc = static_cast<std::ptrdiff_t>(m.col) - static_cast<std::ptrdiff_t>(a.col);
      return std::abs(dr) < h && std::abs(dc) < w;
    });
    if (!suppressed) accepted.push_back(m);
  }
  return accepted;
}

void SymbolMap::add(const std::string& label, AxisMap map) {
  if (!std::isfinite(map.scale) || map.scale == 0 || !std::isfinite(map.offset)) {
    throw std::invalid_argument("symbol map for '" + map.var + "' needs a finite nonzero scale");
  }
  maps_[label].push_back(std::move(map));
}

const std::vector<AxisMap>& SymbolMap::maps(const std::string& label) const {
  static const std::vector<AxisMap> none;
  auto it = maps_.find(label);
  return it == maps_.end() ? none : it->second;
}

Perceived extract_symbols(const Frame& f, const std::vector<Template>& templates, const SymbolMap& map) {
  State out;
  for (const Template& t : templates) {
    std::vector<Match> found;
    try {
      found = match_all(f, t, t.quality);
    } catch (const PerceptionError& e) {
      if (e.kind() != PerceptionError::Kind::DegenerateWindow) throw;
    }
    if (found.empty() && t.required) return PerceptionFailure{t.label};
    out.set(t.label + "_count", static_cast<double>(found.size()));
    if (found.empty()) continue;
    for (const AxisMap& m : map.maps(t.label)) {
      double coord = static_cast<double>(m.axis == AxisMap::Axis::Row ? found.front().row : found.front().col);
      out.set(m.var, m.scale * coord + m.offset);
    }
  }
  return out;
}

PerceptionSetup crossing_perception(const CrossingEnvConfig& cfg, double quality) {
  PerceptionSetup p;
  const double inv = 1.0 / cfg.sprite;
  p.templates.push_back({"agent", crossing_sprite("agent", cfg.sprite), quality, true});
  p.templates.push_back({"car", crossing_sprite("car", cfg.sprite), quality, true});
  p.templates.push_back({"seed", crossing_sprite("seed", cfg.sprite), quality, false});
  p.map.add("agent", {"agent_row", AxisMap::Axis::Row, inv, 0});
  p.map.add("agent", {"agent_col", AxisMap::Axis::Col, inv, 0});
  p.map.add("car", {"car_col", AxisMap::Axis::Col, inv, 0});
  return p;
}

PerceptionSetup load_templates(const Config& config, const std::filesystem::path& base) {
  auto bad = [](const std::string& label, const std::string& why) {
    return PerceptionError(PerceptionError::Kind::BadManifest, "template." + label + ": " + why);
  };
  PerceptionSetup p;
  for (const auto& [label, line] : config.with_prefix("template.")) {
    std::istringstream in(line);
    std::string path, q, req;
    if (!(in >> path >> q >> req)) throw bad(label, "expected '<pgm path> <quality> required|optional ...'");
    Template t;
    t.label = label;
    try {
      t.quality = parse_number(q, "quality");
    } catch (const ConfigError& e) {
      throw bad(label, e.what());
    }
    if (!(t.quality > 0 && t.quality <= 1)) throw bad(label, "quality must be in (0, 1]");
    if (req != "required" && req != "optional") throw bad(label, "expected required or optional, got '" + req + "'");
    t.required = req == "required";
    std::filesystem::path file(path);
    if (file.is_relative()) file = base / file;
    try {
      t.patch = read_pgm(file);
    } catch (const std::runtime_error& e) {
      throw bad(label, e.what());
    }
    std::string spec;
    while (in >> spec) {
      std::vector<std::string> parts;
      std::istringstream fields(spec);
      for (std::string part; std::getline(fields, part, ':');) parts.push_back(part);
      if (parts.size() != 4 || (parts[1] != "row" && parts[1] != "col") || parts[0].empty()) {
        throw bad(label, "map '" + spec + "' is not <var>:row|col:<scale>:<offset>");
      }
      try {
        p.map.add(label, {parts[0], parts[1] == "row" ? AxisMap::Axis::Row : AxisMap::Axis::Col,
                          parse_number(parts[2], "scale"), parse_number(parts[3], "offset")});
      } catch (const std::exception& e) {
        throw bad(label, e.what());
      }
    }
    p.templates.push_back(std::move(t));
  }
  return p;
}

}  // namespace hpshield
