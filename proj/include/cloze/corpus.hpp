#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cloze/detail/text.hpp"
#include "cloze/error.hpp"

namespace cloze {

/// Ordinal plausibility class. Underlying values give the total order.
enum class Label : int { Implausible = 0, Neutral = 1, Plausible = 2 };

inline constexpr std::array<Label, 3> kAllLabels{Label::Implausible, Label::Neutral,
                                                  Label::Plausible};
inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::string_view kPlaceholder = "______";
inline constexpr std::size_t kCandidatesPerInstance = 5;

constexpr std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }
constexpr Label label_from_index(std::size_t i) { return static_cast<Label>(static_cast<int>(i)); }

/// Implausible -> 1, Neutral -> 3, Plausible -> 5.
constexpr double label_to_score(Label l) { return 1.0 + 2.0 * static_cast<double>(label_index(l)); }

constexpr std::string_view label_name(Label l) {
  switch (l) {
    case Label::Implausible: return "IMPLAUSIBLE";
    case Label::Neutral: return "NEUTRAL";
    case Label::Plausible: return "PLAUSIBLE";
  }
  return "";
}

inline std::optional<Label> parse_label(std::string_view s) {
  s = detail::trim(s);
  for (Label l : kAllLabels)
    if (s == label_name(l)) return l;
  return std::nullopt;
}

struct FillerCandidate {
  int candidate_id = 0;
  std::string text;
  std::optional<Label> gold_label;
  std::optional<double> gold_score;

  bool operator==(const FillerCandidate&) const = default;
};

struct ClozeInstance {
  std::string id;
  std::string title;
  std::string section_header;
  std::string prev_context;
  std::string masked_sentence;
  std::string next_context;
  std::array<FillerCandidate, kCandidatesPerInstance> candidates;

  bool operator==(const ClozeInstance&) const = default;
};

struct Dataset {
  std::vector<ClozeInstance> instances;
  std::array<std::size_t, kNumClasses> label_counts{};

  std::size_t num_pairs() const { return instances.size() * kCandidatesPerInstance; }
  std::size_t num_labeled() const { return label_counts[0] + label_counts[1] + label_counts[2]; }
  bool fully_labeled() const { return num_labeled() == num_pairs(); }

  /// Gold labels in (instance, candidate) order; throws Parse if any pair is unlabeled.
  std::vector<Label> gold_labels() const {
    std::vector<Label> out;
    out.reserve(num_pairs());
    for (const auto& inst : instances)
      for (const auto& c : inst.candidates) {
        if (!c.gold_label)
          throw Error(Errc::Parse, "instance '" + inst.id + "' candidate " +
                                       std::to_string(c.candidate_id) + " has no gold label");
        out.push_back(*c.gold_label);
      }
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline bool has_control_ws(std::string_view s) {
  return s.find('\t') != std::string_view::npos || s.find('\n') != std::string_view::npos ||
         s.find('\r') != std::string_view::npos;
}

}  // namespace detail

/// Checks every ClozeInstance invariant; throws on the first violation.
inline void validate_instance(const ClozeInstance& inst) {
  if (detail::count_occurrences(inst.masked_sentence, kPlaceholder) != 1)
    throw Error(Errc::MissingPlaceholder, inst.id);
  std::array<bool, kCandidatesPerInstance + 1> seen{};
  for (const auto& c : inst.candidates) {
    if (c.candidate_id < 1 || c.candidate_id > static_cast<int>(kCandidatesPerInstance) ||
        seen[static_cast<std::size_t>(c.candidate_id)])
      throw Error(Errc::WrongCandidateCount, inst.id);
    seen[static_cast<std::size_t>(c.candidate_id)] = true;
    const auto words = detail::split_ws(c.text);
    if (words.empty()) throw Error(Errc::WrongCandidateCount, inst.id);
    if (words.size() > 2 || detail::has_control_ws(c.text))
      throw Error(Errc::MalformedRow,
                  inst.id + ": filler " + std::to_string(c.candidate_id) + " '" + c.text +
                      "' must be one or two words without tabs or newlines");
    if (c.gold_score && !(*c.gold_score >= 1.0 && *c.gold_score <= 5.0))
      throw Error(Errc::BadScore, inst.id + ": " + detail::format_double(*c.gold_score));
  }
}

/// Parses the dataset TSV format from memory. Columns are located by header
/// name; label and score columns are optional.
inline Dataset parse_dataset(std::string_view content, bool labeled) {
  const auto rows = detail::lines(content);
  if (rows.empty()) throw Error(Errc::MalformedRow, "line 1: missing header");

  const auto header = detail::split(rows[0], '\t');
  auto find_col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    return std::nullopt;
  };
  auto require_col = [&](const std::string& name) {
    const auto c = find_col(name);
    if (!c) throw Error(Errc::MalformedRow, "line 1: missing column '" + name + "'");
    return *c;
  };

  const std::size_t c_id = require_col("id");
  const std::size_t c_title = require_col("title");
  const std::size_t c_section = require_col("section_header");
  const std::size_t c_prev = require_col("prev_context");
  const std::size_t c_sent = require_col("sentence");
  const std::size_t c_next = require_col("next_context");
  std::array<std::size_t, kCandidatesPerInstance> c_filler{};
  std::array<std::optional<std::size_t>, kCandidatesPerInstance> c_label{}, c_score{};
  for (std::size_t k = 0; k < kCandidatesPerInstance; ++k) {
    const auto n = std::to_string(k + 1);
    c_filler[k] = require_col("filler" + n);
    c_label[k] = find_col("label" + n);
    c_score[k] = find_col("score" + n);
    if (labeled && !c_label[k])
      throw Error(Errc::MalformedRow, "line 1: labeled dataset lacks column 'label" + n + "'");
  }

  Dataset ds;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t line_no = r + 1;
    if (detail::trim(rows[r]).empty()) continue;
    const auto cells = detail::split(rows[r], '\t');
    if (cells.size() != header.size())
      throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(header.size()) + " fields, got " +
                                          std::to_string(cells.size()));
    ClozeInstance inst;
    inst.id = std::string(detail::trim(cells[c_id]));
    if (inst.id.empty())
      throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": empty id");
    inst.title = std::string(cells[c_title]);
    inst.section_header = std::string(cells[c_section]);
    inst.prev_context = std::string(cells[c_prev]);
    inst.masked_sentence = std::string(cells[c_sent]);
    inst.next_context = std::string(cells[c_next]);
    if (detail::count_occurrences(inst.masked_sentence, kPlaceholder) != 1)
      throw Error(Errc::MissingPlaceholder, inst.id);

    for (std::size_t k = 0; k < kCandidatesPerInstance; ++k) {
      auto& cand = inst.candidates[k];
      cand.candidate_id = static_cast<int>(k + 1);
      cand.text = std::string(detail::trim(cells[c_filler[k]]));
      if (cand.text.empty()) throw Error(Errc::WrongCandidateCount, inst.id);
      if (c_label[k]) {
        const auto raw = detail::trim(cells[*c_label[k]]);
        if (!raw.empty()) {
          const auto l = parse_label(raw);
          if (!l) throw Error(Errc::BadLabel, inst.id + ": '" + std::string(raw) + "'");
          cand.gold_label = *l;
        } else if (labeled) {
          throw Error(Errc::BadLabel, inst.id + ": ''");
        }
      }
      if (c_score[k]) {
        const auto raw = detail::trim(cells[*c_score[k]]);
        if (!raw.empty()) {
          const auto v = detail::parse_double(raw);
          if (!v || !(*v >= 1.0 && *v <= 5.0))
            throw Error(Errc::BadScore, inst.id + ": '" + std::string(raw) + "'");
          cand.gold_score = *v;
        }
      }
      if (cand.gold_label) ++ds.label_counts[label_index(*cand.gold_label)];
    }
    validate_instance(inst);
    if (!ids.insert(inst.id).second) throw Error(Errc::DuplicateId, inst.id);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, bool labeled) {
  return parse_dataset(detail::read_file(path), labeled);
}

/// Inverse of parse_dataset. Label/score columns are written when any
/// candidate carries them.
inline std::string serialize_dataset(const Dataset& ds) {
  bool any_label = false, any_score = false;
  for (const auto& inst : ds.instances)
    for (const auto& c : inst.candidates) {
      any_label |= c.gold_label.has_value();
      any_score |= c.gold_score.has_value();
    }
  std::string out = "id\ttitle\tsection_header\tprev_context\tsentence\tnext_context";
  for (int k = 1; k <= 5; ++k) out += "\tfiller" + std::to_string(k);
  if (any_label)
    for (int k = 1; k <= 5; ++k) out += "\tlabel" + std::to_string(k);
  if (any_score)
    for (int k = 1; k <= 5; ++k) out += "\tscore" + std::to_string(k);
  out += '\n';
  for (const auto& inst : ds.instances) {
    out += inst.id + '\t' + inst.title + '\t' + inst.section_header + '\t' + inst.prev_context +
           '\t' + inst.masked_sentence + '\t' + inst.next_context;
    for (const auto& c : inst.candidates) out += '\t' + c.text;
    if (any_label)
      for (const auto& c : inst.candidates)
        out += '\t' + (c.gold_label ? std::string(label_name(*c.gold_label)) : std::string());
    if (any_score)
      for (const auto& c : inst.candidates)
        out += '\t' + (c.gold_score ? detail::format_double(*c.gold_score) : std::string());
    out += '\n';
  }
  return out;
}

}  // namespace cloze
