#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/detail/text.hpp"
#include "cloze/error.hpp"

namespace cloze {

/// Which parts of an instance make up the model input.
enum class ContextMethod {
  Full,         // title, section header, previous, masked sentence, next
  ContextOnly,  // previous, masked sentence, next
  SentenceOnly  // masked sentence alone
};

constexpr std::string_view context_method_name(ContextMethod m) {
  switch (m) {
    case ContextMethod::Full: return "full";
    case ContextMethod::ContextOnly: return "context_only";
    case ContextMethod::SentenceOnly: return "sentence_only";
  }
  return "";
}

inline std::optional<ContextMethod> parse_context_method(std::string_view s) {
  for (auto m : {ContextMethod::Full, ContextMethod::ContextOnly, ContextMethod::SentenceOnly})
    if (s == context_method_name(m)) return m;
  return std::nullopt;
}

namespace detail {

inline bool ends_sentence(std::string_view s) {
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

inline bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

}  // namespace detail

/// Joins the parts selected by `method` into one string. Parts are separated
/// by ". ", or by a single space when the left side already ends in . ! or ?.
/// Empty parts are skipped.
inline std::string render_context(const ClozeInstance& inst, ContextMethod method) {
  std::vector<std::string_view> parts;
  if (method == ContextMethod::Full) {
    parts.push_back(inst.title);
    parts.push_back(inst.section_header);
  }
  if (method != ContextMethod::SentenceOnly) parts.push_back(inst.prev_context);
  parts.push_back(inst.masked_sentence);
  if (method != ContextMethod::SentenceOnly) parts.push_back(inst.next_context);

  if (method == ContextMethod::SentenceOnly) return inst.masked_sentence;

  std::string out;
  for (auto part : parts) {
    part = detail::trim(part);
    if (part.empty()) continue;
    if (!out.empty()) out += detail::ends_sentence(out) ? " " : ". ";
    out += part;
  }
  return out;
}

inline std::string fill_placeholder(std::string_view masked_text, std::string_view filler) {
  if (filler.empty()) throw Error(Errc::Empty, "empty filler");
  const auto n = detail::count_occurrences(masked_text, kPlaceholder);
  if (n == 0) throw Error(Errc::NoPlaceholder, std::string(masked_text));
  if (n > 1) throw Error(Errc::MultiplePlaceholders, std::string(masked_text));
  const auto pos = masked_text.find(kPlaceholder);
  std::string out;
  out.reserve(masked_text.size() + filler.size());
  out.append(masked_text.substr(0, pos));
  out.append(filler);
  out.append(masked_text.substr(pos + kPlaceholder.size()));
  return out;
}

/// Two-word fillers keep only their second word, since a masked LM predicts a
/// single token per slot.
inline std::string mlm_adjust_filler(std::string_view filler) {
  const auto words = detail::split_ws(filler);
  if (words.empty()) throw Error(Errc::Empty, "empty filler");
  if (words.size() > 2) throw Error(Errc::TooManyWords, std::string(filler));
  return std::string(words.back());
}

/// Lowercases (ASCII), splits on whitespace and strips punctuation from token
/// edges. The placeholder survives as its own token.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto word : detail::split_ws(text)) {
    auto core = word;
    while (!core.empty() && core.front() != '_' && detail::is_ascii_punct(core.front()))
      core.remove_prefix(1);
    while (!core.empty() && core.back() != '_' && detail::is_ascii_punct(core.back()))
      core.remove_suffix(1);
    if (core.find(kPlaceholder) == std::string_view::npos) {
      while (!core.empty() && detail::is_ascii_punct(core.front())) core.remove_prefix(1);
      while (!core.empty() && detail::is_ascii_punct(core.back())) core.remove_suffix(1);
    }
    if (core.empty()) continue;
    std::string tok(core);
    for (auto& c : tok)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(std::move(tok));
  }
  return out;
}

}  // namespace cloze
