#include "da/persuasion.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace da {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 6> kStrategyNames = {
    "StatusFeedback", "EmphasizeRisk",    "DefaultConcern",
    "ReliableAdvice", "SocialConnection", "SocialInteraction"};

constexpr std::array<std::string_view, 6> kDescriptions = {
    "Timely reminders and environmental hazard feedback to attract attention (UI).",
    "Enhance driver alertness and improve response time between action and readiness.",
    "Simplify task steps to facilitate decision-making.",
    "Guide the driver to focus on risky matters based on the scenario and driver condition.",
    "Establish connections, evoke a sense of communication to maintain safety jointly.",
    "Emotional expression, intuitive reflection; Give encouragement and reward.",
};

constexpr std::array<std::string_view, 4> kPrinciples = {
    "Keep it simple and crisp.",
    "Provide direct, reliable advice without resorting to commands or demands.",
    "Avoid emphasizing bad consequences.",
    "Be colloquial, avoiding seriousness, like people's everyday conversations.",
};

// Rows follow Strategy order, columns RiskLevel order (none, low, medium, high).
const std::array<std::array<std::string_view, 4>, 6> kDefaultTemplates = {{
    {"Road's quiet with {weather} out here. Just a heads-up, a look ahead now and then keeps it easy.",
     "Heads-up: with {weather} the road's a bit slick. How about a quick glance up front?",
     "Quick status check: work zone ahead and lanes are narrowing. Maybe glance at the road for a bit?",
     "Traffic's packed and it's getting dark. Might be a good moment to look up and check the road."},
    {"Things look calm, but staying ready helps you react faster if anything pops up. Eyes up for a sec?",
     "Slippery road with {weather} means longer stopping. Want to keep an eye out so you're ready to take over?",
     "Construction ahead can change fast. Keeping your eyes up now makes taking over a lot smoother.",
     "Heavy traffic in the dark needs quick reactions. How about setting that aside and watching the road?"},
    {"I can hold your messages for a bit so you can enjoy the drive. Sound good?",
     "I'll pause your notifications while the road's wet. You can pick them up once it clears.",
     "I've queued your notifications until we're past the work zone. Just the road for now, okay?",
     "I'll hold everything else until traffic eases up. For now, just the road, okay?"},
    {"Road's clear, so a short break is fine. Maybe glance up between messages?",
     "With {weather} and a wet road, try wrapping up and checking the mirrors every few seconds.",
     "Lanes merge near the work zone. A good plan is to wrap up your task and watch the cones.",
     "Cars are bunching up ahead. Best move right now is to put the task down and follow the traffic."},
    {"Let's keep each other company on this stretch. I'll watch the sensors, you keep an eye on the road?",
     "We make a good team with {weather} like this. Mind watching the road with me for a bit?",
     "Let's get through this work zone together. You watch the lane, I'll watch the rest.",
     "Busy evening out there. Let's take this stretch together, eyes on the road with me?"},
    {"Nice job staying focused! Enjoy the {weather} and keep it up.",
     "Great focus with {weather} like this. You're doing really well!",
     "Smooth handling through the work zone. Nicely done, keep it going!",
     "You're staying sharp in heavy traffic. Really nice work!"},
}};

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || u >= 0x80;
}

bool contains_word(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]) || !is_word_char(needle.front());
    const auto end = pos + needle.size();
    const bool right_ok =
        end == haystack.size() || !is_word_char(haystack[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) return true;
  }
  return false;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (const char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::size_t idx(Strategy s) { return static_cast<std::size_t>(s); }
std::size_t idx(RiskLevel r) { return static_cast<std::size_t>(r); }

}  // namespace

PersuasionElement element_of(Strategy s) {
  switch (s) {
    case Strategy::status_feedback:
    case Strategy::emphasize_risk:
      return PersuasionElement::remind_unreasonable;
    case Strategy::default_concern:
    case Strategy::reliable_advice:
      return PersuasionElement::improve_execution;
    case Strategy::social_connection:
    case Strategy::social_interaction:
      return PersuasionElement::increase_motivation;
  }
  throw std::invalid_argument("bad strategy");
}

Strategy sibling_of(Strategy s) {
  switch (s) {
    case Strategy::status_feedback:
      return Strategy::emphasize_risk;
    case Strategy::emphasize_risk:
      return Strategy::status_feedback;
    case Strategy::default_concern:
      return Strategy::reliable_advice;
    case Strategy::reliable_advice:
      return Strategy::default_concern;
    case Strategy::social_connection:
      return Strategy::social_interaction;
    case Strategy::social_interaction:
      return Strategy::social_connection;
  }
  throw std::invalid_argument("bad strategy");
}

std::string_view to_string(Strategy s) { return kStrategyNames.at(idx(s)); }

Strategy strategy_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (kStrategyNames[i] == s) return static_cast<Strategy>(i);
  }
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

std::string_view to_string(PersuasionElement e) {
  switch (e) {
    case PersuasionElement::remind_unreasonable:
      return "RemindUnreasonable";
    case PersuasionElement::improve_execution:
      return "ImproveExecution";
    case PersuasionElement::increase_motivation:
      return "IncreaseMotivation";
  }
  return "?";
}

std::string_view strategy_description(Strategy s) { return kDescriptions.at(idx(s)); }

const std::array<std::string_view, 4>& persuasion_principles() { return kPrinciples; }

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::visual:
      return "visual";
    case Channel::audio:
      return "audio";
    case Channel::both:
      return "both";
  }
  return "?";
}

std::string_view to_string(MessageSource s) {
  switch (s) {
    case MessageSource::llm:
      return "llm";
    case MessageSource::template_table:
      return "template";
    case MessageSource::baseline:
      return "baseline";
  }
  return "?";
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

PersuasionMessage::PersuasionMessage(std::string text_, Channel channel_, Strategy strategy_,
                                     double t_, MessageSource source_)
    : text(std::move(text_)), channel(channel_), strategy(strategy_), t(t_), source(source_) {
  if (text.empty()) throw std::length_error("persuasion message text is empty");
  if (utf8_length(text) > kMaxMessageChars) {
    throw std::length_error("persuasion message exceeds " + std::to_string(kMaxMessageChars) +
                            " characters");
  }
}

json to_json(const PersuasionMessage& m) {
  return {{"t", m.t},
          {"text", m.text},
          {"channel", to_string(m.channel)},
          {"strategy", to_string(m.strategy)},
          {"source", to_string(m.source)}};
}

Strategy select_strategy(RiskLevel risk, double score, std::span<const Strategy> history,
                         double focused_streak_s, const SelectionConfig& config) {
  Strategy chosen;
  if (focused_streak_s >= config.focus_streak_s && score == 0.0) {
    chosen = Strategy::social_interaction;
  } else {
    switch (risk) {
      case RiskLevel::high:
        chosen = Strategy::emphasize_risk;
        break;
      case RiskLevel::medium:
        chosen = Strategy::reliable_advice;
        break;
      case RiskLevel::low:
        chosen = Strategy::status_feedback;
        break;
      case RiskLevel::none:
      default:
        chosen = score >= config.threshold_none ? Strategy::default_concern
                                                : Strategy::social_connection;
        break;
    }
  }
  if (!history.empty() && history.back() == chosen) chosen = sibling_of(chosen);
  return chosen;
}

std::string build_prompt(const RiskFactorState& state, double t, std::string_view driver_text,
                         Strategy strategy) {
  std::string p;
  p += "You are a friendly driving assistant riding along in a Level 3 automated car. ";
  p += "The car drives itself, but the driver should keep an appropriate eye on the road.\n";
  p += "Follow these principles:\n";
  for (std::size_t i = 0; i < kPrinciples.size(); ++i) {
    p += std::to_string(i + 1) + ". " + std::string(kPrinciples[i]) + "\n";
  }
  p += "Persuasion strategy: " + std::string(to_string(strategy)) + " - ";
  p += std::string(strategy_description(strategy)) + "\n";
  p += "Road state: " + serialize_timestamped(state, t) + "\n";
  p += "Driver state: " + std::string(driver_text) + "\n";
  p += "Reply with one short sentence of advice to the driver, under 25 words.";
  return p;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::empty:
      return "empty";
    case ViolationKind::too_long:
      return "too_long";
    case ViolationKind::too_many_words:
      return "too_many_words";
    case ViolationKind::blacklisted:
      return "blacklisted";
  }
  return "?";
}

MessageRules message_rules_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("message rules: expected object");
  MessageRules r;
  r.max_chars = doc.value("max_chars", r.max_chars);
  r.max_words = doc.value("max_words", r.max_words);
  if (r.max_chars > kMaxMessageChars) {
    throw std::invalid_argument("max_chars cannot exceed " + std::to_string(kMaxMessageChars));
  }
  if (doc.contains("blacklist")) {
    const auto& bl = doc.at("blacklist");
    if (!bl.is_array()) throw std::invalid_argument("blacklist: expected array of strings");
    r.blacklist.clear();
    for (const auto& tok : bl) {
      if (!tok.is_string()) throw std::invalid_argument("blacklist: expected array of strings");
      r.blacklist.push_back(tok.get<std::string>());
    }
  }
  return r;
}

json to_json(const MessageRules& r) {
  return {{"max_chars", r.max_chars}, {"max_words", r.max_words}, {"blacklist", r.blacklist}};
}

std::vector<Violation> validate_message(std::string_view text, const MessageRules& rules) {
  std::vector<Violation> out;
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) {
    out.push_back({ViolationKind::empty, "message is empty"});
    return out;
  }
  if (const auto n = utf8_length(text); n > rules.max_chars) {
    out.push_back({ViolationKind::too_long,
                   std::to_string(n) + " characters > " + std::to_string(rules.max_chars)});
  }
  if (const auto n = word_count(text); n > rules.max_words) {
    out.push_back({ViolationKind::too_many_words,
                   std::to_string(n) + " words > " + std::to_string(rules.max_words)});
  }
  const std::string lower = lowercase(text);
  for (const auto& token : rules.blacklist) {
    if (contains_word(lower, lowercase(token))) out.push_back({ViolationKind::blacklisted, token});
  }
  return out;
}

TemplateTable::TemplateTable() {
  for (std::size_t s = 0; s < entries_.size(); ++s) {
    for (std::size_t r = 0; r < 4; ++r) entries_[s][r] = std::string(kDefaultTemplates[s][r]);
  }
}

const std::string& TemplateTable::entry(Strategy s, RiskLevel risk) const {
  return entries_.at(idx(s)).at(idx(risk));
}

void TemplateTable::set(Strategy s, RiskLevel risk, std::string text) {
  entries_.at(idx(s)).at(idx(risk)) = std::move(text);
}

std::string TemplateTable::render(Strategy s, RiskLevel risk, Weather weather) const {
  static constexpr std::string_view kSlot = "{weather}";
  std::string out = entry(s, risk);
  for (auto pos = out.find(kSlot); pos != std::string::npos; pos = out.find(kSlot, pos)) {
    out.replace(pos, kSlot.size(), weather_phrase(weather));
  }
  return out;
}

TemplateTable TemplateTable::from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("templates: expected object");
  TemplateTable table;
  for (const auto& [name, row] : doc.items()) {
    const Strategy s = strategy_from_string(name);
    if (!row.is_object()) throw std::invalid_argument("templates." + name + ": expected object");
    for (const auto& [level, text] : row.items()) {
      if (!text.is_string() || text.get<std::string>().empty()) {
        throw std::invalid_argument("templates." + name + "." + level + ": expected non-empty string");
      }
      const RiskLevel r = risk_level_from_string(level);
      table.set(s, r, text.get<std::string>());
      for (const auto w : {Weather::clear, Weather::cloudy, Weather::rain}) {
        const auto v = validate_message(table.render(s, r, w));
        if (!v.empty()) {
          throw std::invalid_argument("templates." + name + "." + level + ": " + v.front().detail);
        }
      }
    }
  }
  return table;
}

json TemplateTable::to_json() const {
  json doc = json::object();
  for (const auto s : kAllStrategies) {
    json row = json::object();
    for (const auto r : kAllRiskLevels) row[std::string(da::to_string(r))] = entry(s, r);
    doc[std::string(da::to_string(s))] = std::move(row);
  }
  return doc;
}

TemplateTable load_template_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template file '" + path + "'");
  return TemplateTable::from_json(json::parse(in));
}

std::string_view weather_phrase(Weather w) {
  switch (w) {
    case Weather::clear:
      return "clear skies";
    case Weather::cloudy:
      return "the clouds";
    case Weather::rain:
      return "the rain";
  }
  return "the weather";
}

std::string fallback_template(Strategy strategy, const RiskFactorState& state,
                              const TemplateTable& table) {
  return table.render(strategy, classify_risk(state), state.weather);
}

std::string clean_completion(std::string_view raw) {
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = raw.find_last_not_of(" \t\r\n");
  std::string_view s = raw.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

PersuasionMessage generate(std::string_view prompt, LlmClient& llm, Strategy strategy,
                           const RiskFactorState& state, double t, const GenerateOptions& options) {
  static const TemplateTable kDefaultTable;
  static const MessageRules kDefaultRules;
  const auto& table = options.templates ? *options.templates : kDefaultTable;
  const auto& rules = options.rules ? *options.rules : kDefaultRules;

  try {
    std::string text = clean_completion(llm.complete(prompt));
    if (validate_message(text, rules).empty()) {
      return PersuasionMessage(std::move(text), Channel::both, strategy, t, MessageSource::llm);
    }
  } catch (const std::exception&) {
    // any failure falls through to the template
  }
  return PersuasionMessage(fallback_template(strategy, state, table), Channel::both, strategy, t,
                           MessageSource::template_table);
}

}  // namespace da
