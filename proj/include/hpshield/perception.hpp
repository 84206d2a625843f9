#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hpshield/config.hpp"
#include "hpshield/frame.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

struct CrossingEnvConfig;

class PerceptionError : public std::runtime_error {
 public:
  enum class Kind { DegenerateWindow, TemplateTooLarge, ConstantTemplate, BadManifest };
  PerceptionError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reference patch for one object class. `quality` is the minimum accepted
/// match score in (0, 1]. Required classes must be found in every frame.
struct Template {
  std::string label;
  Frame patch;
  double quality = 0.85;
  bool required = false;
};

struct Match {
  std::string label;
  std::size_t row = 0;  // top-left corner of the patch
  std::size_t col = 0;
  double score = 0;
  bool operator==(const Match&) const = default;
};

/// Zero-normalized cross-correlation of the patch against every window it
/// fits in. Entry (r, c) is the score with the patch's top-left at (r, c);
/// windows with zero variance hold NaN. Throws PerceptionError for a
/// template larger than the frame or with constant intensity.
std::vector<double> score_map(const Frame& f, const Frame& patch);

/// Best-scoring position; ties go to the smallest (row, col). Throws
/// PerceptionError(DegenerateWindow) when every window has zero variance.
Match match_template(const Frame& f, const Template& t);

/// Positions scoring at least `quality`, greedily suppressed: a candidate is
/// dropped when it lies less than a patch height and a patch width away from
/// an accepted one. Sorted by descending score, then (row, col).
std::vector<Match> match_all(const Frame& f, const Template& t, double quality);

/// var = scale * coordinate + offset for the best match of a class.
struct AxisMap {
  enum class Axis { Row, Col };
  std::string var;
  Axis axis = Axis::Row;
  double scale = 1;
  double offset = 0;
};

/// Per-class affine maps. Throws std::invalid_argument for a zero or
/// non-finite scale.
class SymbolMap {
 public:
  void add(const std::string& label, AxisMap map);
  const std::vector<AxisMap>& maps(const std::string& label) const;
  const std::map<std::string, std::vector<AxisMap>>& all() const { return maps_; }

 private:
  std::map<std::string, std::vector<AxisMap>> maps_;
};

struct PerceptionFailure {
  std::string label;  // the required class that was not found
};

using Perceived = std::variant<State, PerceptionFailure>;

/// Matches every template, binds `<label>_count` to the number of accepted
/// matches and the class's mapped variables from its best match. A required
/// class without matches yields PerceptionFailure rather than an exception.
Perceived extract_symbols(const Frame& f, const std::vector<Template>& templates, const SymbolMap& map);

struct PerceptionSetup {
  std::vector<Template> templates;
  SymbolMap map;
};

/// Templates and maps for crossing-world frames: agent (agent_row,
/// agent_col), car (car_col) and seeds, at cell resolution.
PerceptionSetup crossing_perception(const CrossingEnvConfig& cfg, double quality = 0.85);

/// Reads `template.<label>` entries from a config:
///   template.<label> = <pgm path> <quality> required|optional [<var>:row|col:<scale>:<offset>]...
/// Relative paths are resolved against `base`. Throws PerceptionError(BadManifest).
PerceptionSetup load_templates(const Config& config, const std::filesystem::path& base);

}  // namespace hpshield
