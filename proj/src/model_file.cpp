#include "hpshield/model_file.hpp"

#include <array>
#include <fstream>
#include <optional>
#include <sstream>

#include "hpshield/parser.hpp"
#include "hpshield/printer.hpp"

namespace hpshield {

namespace {

constexpr std::array<std::string_view, 3> kLabels = {"init", "program", "safe"};

struct Section {
  std::size_t label_start = 0;
  std::size_t body_start = 0;
  std::size_t body_end = 0;
  bool present = false;
};

template <class Parse>
auto parse_section(std::string_view text, const Section& s, Parse parse) {
  try {
    return parse(text.substr(s.body_start, s.body_end - s.body_start));
  } catch (const ParseError& e) {
    SourceSpan span{e.span().start + s.body_start, e.span().end + s.body_start};
    throw ParseError(span, e.what());
  }
}

std::size_t line_of(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace

SafetyModel parse_model(std::string_view text) {
  std::array<Section, 3> sections{};
  std::optional<std::size_t> open;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::size_t i = pos;
    while (i < eol && (text[i] == ' ' || text[i] == '\t')) ++i;
    for (std::size_t k = 0; k < kLabels.size(); ++k) {
      auto label = kLabels[k];
      std::size_t after = i + label.size();
      if (text.substr(i, label.size()) != label || after >= eol || text[after] != ':') continue;
      if (after + 1 < eol && text[after + 1] == '=') continue;  // an assignment, not a label
      if (sections[k].present) {
        throw ParseError({i, after + 1}, "duplicate '" + std::string(label) + ":' section");
      }
      if (open) sections[*open].body_end = i;
      sections[k] = {i, after + 1, text.size(), true};
      open = k;
      break;
    }
    if (!open) {
      // Only blank and comment lines may precede the first section.
      std::string_view rest = text.substr(i, eol - i);
      if (!rest.empty() && rest.rfind("//", 0) != 0 && rest != "\r") {
        throw ParseError({i, eol}, "expected 'init:', 'program:' or 'safe:'");
      }
    }
    pos = eol + 1;
  }
  for (std::size_t k = 0; k < kLabels.size(); ++k) {
    if (!sections[k].present) {
      throw ParseError({text.size(), text.size()}, "missing '" + std::string(kLabels[k]) + ":' section");
    }
  }
  SafetyModel model{
      parse_section(text, sections[0], parse_formula),
      parse_section(text, sections[1], parse_program),
      parse_section(text, sections[2], parse_formula),
  };
  return model;
}

SafetyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  try {
    return parse_model(text);
  } catch (const ParseError& e) {
    throw ParseError(e.span(), path.string() + ":" + std::to_string(line_of(text, e.span().start)) + ": " +
                                   e.what());
  }
}

std::string print_model(const SafetyModel& model) {
  return "init: " + print_formula(model.init) + "\nprogram: " + print_program(model.program) +
         "\nsafe: " + print_formula(model.safe) + "\n";
}

}  // namespace hpshield
